"""Built-in scenarios with closed-form reference solutions.

Each scenario pairs a solvable operator or model with an independently
derived solution, so solver output can be judged against something that
was not produced by the solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .grids import TimeGrid, make_time_grid, symmetric_interval
from .kernels import PastGrowth, SeparableKernel, SourceProfile, zero_kernel
from .model import FieldModel
from .prehistory import constant_profile, separable_history
from .rates import Identity, Square


# ---------------------------------------------------------------------------
# delayed quadratic-memory operator (scalar, space-free)
# ---------------------------------------------------------------------------

class DelayedQuadraticOperator:
    """Scalar operator y(t) = (integral of y over [0, t - lag])^2 + 1.

    Output is 0 for t < lag. For lag = 0 the unique maximal solution is
    1/cos(t)^2, blowing up at pi/2; any positive lag makes the operator
    short-memory (output on [0, xi + lag] is fixed by input on [0, xi])
    and the equation globally solvable.

    The solver-facing contract matches the field operator: the square
    nonlinearity contributes the Lipschitz bound 2r, and the kernel mass
    of a window is its length.
    """

    def __init__(self, lag: float, time_grid: TimeGrid):
        if lag < 0:
            raise ValueError("lag must be nonnegative")
        self.lag = lag
        self.time_grid = time_grid
        self._times = time_grid.times()
        self._dt = time_grid.step
        self._rate = Square()
        self._cum = np.zeros(time_grid.n_nodes)
        self._c_count = 1  # cumulative integral known up to this many nodes
        self.tau_volterra_offset = lag

    @property
    def n_nodes(self) -> int:
        return self.time_grid.n_nodes

    @property
    def times(self) -> np.ndarray:
        return self._times

    @property
    def state_shape(self) -> tuple[int, int]:
        return (1, 1)

    def initial_state(self) -> np.ndarray:
        return np.array([[1.0]]) if self.lag <= 0 else np.array([[0.0]])

    def lipschitz_bound(self, r: float) -> float:
        return self._rate.lipschitz_bound(r)

    def kernel_mass(self, t0: float, t1: float) -> float:
        return t1 - t0

    def advance_frozen(self, u: np.ndarray, k: int) -> None:
        self._extend_cum(self._cum, u, self._c_count, k + 1)
        self._c_count = k + 1

    def reset_frozen(self) -> None:
        self._c_count = 1

    def _extend_cum(self, cum, u, start, stop) -> None:
        for i in range(max(start, 1), stop):
            cum[i] = cum[i - 1] + 0.5 * self._dt * (u[i - 1, 0, 0] + u[i, 0, 0])

    def apply(self, u: np.ndarray, k0: int, k1: int, use_cache: bool = False) -> np.ndarray:
        if not (0 <= k0 < k1 <= self.n_nodes - 1):
            raise ValueError("invalid node range")
        cum = np.zeros(k1 + 1)
        start = 1
        if use_cache:
            take = min(self._c_count, k1 + 1)
            cum[:take] = self._cum[:take]
            start = take
        self._extend_cum(cum, u, start, k1 + 1)

        out = np.zeros((k1 - k0, 1, 1))
        lag_steps = self.lag / self._dt
        for mi in range(k1 - k0):
            m = k0 + 1 + mi
            p = m - lag_steps
            if p < -1e-9:
                continue
            p = max(p, 0.0)
            i = min(int(p), k1)
            i2 = min(i + 1, k1)
            frac = p - i
            c = (1.0 - frac) * cum[i] + frac * cum[i2]
            out[mi, 0, 0] = c * c + 1.0
        return out


def sec_squared(t):
    """Closed form 1/cos(t)^2: the zero-lag fixed point, valid below pi/2."""
    t = np.asarray(t, dtype=float)
    return 1.0 / np.cos(t) ** 2


def delayed_quadratic_closed_form(lag: float, horizon: float):
    """Piecewise-polynomial solution of the positive-lag quadratic operator.

    On [k*lag, (k+1)*lag) the solution is a polynomial, built recursively:
    the next segment is (running integral)^2 + 1. Substituting back shows
    each segment satisfies the defining equation identically, so this is
    an exact reference independent of any quadrature.
    """
    if lag <= 0:
        raise ValueError("use sec_squared for the zero-lag form")
    nseg = int(math.ceil(horizon / lag)) + 2
    segs = [Polynomial([0.0])]
    left_integral = [0.0]
    for k in range(nseg):
        integ = segs[k].integ()
        segs.append((left_integral[k] + integ) ** 2 + 1.0)
        left_integral.append(left_integral[k] + float(integ(lag)))

    def evaluate(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.clip(np.floor(t / lag + 1e-12).astype(int), 0, len(segs) - 1)
        out = np.empty_like(t)
        for ki in np.unique(k):
            mask = k == ki
            out[mask] = segs[ki](t[mask] - ki * lag)
        return out

    return evaluate


class AnticausalProbeOperator:
    """Deliberately non-causal operator: integrates half a unit ahead.

    Output at t is the integral of the input over [0, min(t + 0.5, end)],
    so outputs on a prefix depend on inputs beyond it. Exists to prove
    the causality checker flags violations.
    """

    def __init__(self, time_grid: TimeGrid):
        self.time_grid = time_grid
        self._times = time_grid.times()
        self._dt = time_grid.step
        self.tau_volterra_offset = 0.0

    @property
    def n_nodes(self) -> int:
        return self.time_grid.n_nodes

    @property
    def times(self) -> np.ndarray:
        return self._times

    @property
    def state_shape(self) -> tuple[int, int]:
        return (1, 1)

    def initial_state(self) -> np.ndarray:
        return np.zeros((1, 1))

    def lipschitz_bound(self, r: float) -> float:
        return 1.0

    def kernel_mass(self, t0: float, t1: float) -> float:
        return t1 - t0

    def advance_frozen(self, u, k) -> None:
        pass

    def reset_frozen(self) -> None:
        pass

    def apply(self, u, k0, k1, use_cache: bool = False):
        cum = np.concatenate([[0.0], np.cumsum(
            0.5 * self._dt * (u[:-1, 0, 0] + u[1:, 0, 0]))])
        ahead = int(round(0.5 / self._dt))
        out = np.empty((k1 - k0, 1, 1))
        for mi in range(k1 - k0):
            m = k0 + 1 + mi
            out[mi, 0, 0] = cum[min(m + ahead, self.n_nodes - 1)]
        return out


# ---------------------------------------------------------------------------
# exponential-memory self-reproducing scenario
# ---------------------------------------------------------------------------

def memory_profile_amplitude(t, amplitude: float = 1.0):
    """v(t) = amplitude * exp(-exp(-t)): solves v' = e^{-t} v, v(-inf) = 0."""
    t = np.asarray(t, dtype=float)
    return amplitude * np.exp(-np.exp(-t))


def exponential_memory_model(amplitude: float = 1.0, sigma: float = 1.0,
                             npoints: int = 121) -> FieldModel:
    """Linear field with kernel e^{-s} * gauss(x) on a 6-sigma truncation.

    With the history v(xi) * gauss(x) supplied for xi <= start, the exact
    solution on [start, b] is amplitude * exp(-exp(-t)) * gauss(x): the
    history folds into the additive origin term, so the fixed-point
    residual of the closed form is pure quadrature error. The closed form
    solves the equation for EVERY amplitude, which is the non-uniqueness
    witness of the untruncated infinite-history problem.
    """
    grid = symmetric_interval(6.0 * sigma, npoints)
    norm = sigma * math.sqrt(2.0 * math.pi)

    def gauss(points):
        r2 = np.sum(points * points, axis=1)
        return np.exp(-0.5 * r2 / sigma ** 2) / norm

    kernel = SeparableKernel(PastGrowth(scale=1.0), SourceProfile(profile=gauss))
    history = separable_history(
        lambda xi: memory_profile_amplitude(xi, amplitude), gauss,
        decays_into_past=True, name="self-reproducing")
    from .delays import ZeroDelay
    return FieldModel(kernel=kernel, rates=(Identity(),), delay=ZeroDelay(),
                      prehistory=history, grid=grid,
                      name=f"exp-memory(V={amplitude})")


def exponential_memory_closed_form(amplitude: float, sigma: float = 1.0):
    """u(t, x) = amplitude * exp(-exp(-t)) * gauss(x) on grid points."""
    norm = sigma * math.sqrt(2.0 * math.pi)

    def evaluate(times, points):
        v = memory_profile_amplitude(times, amplitude)
        g = np.exp(-0.5 * np.sum(points * points, axis=1) / sigma ** 2) / norm
        return v[:, None, None] * g[None, :, None]

    return evaluate


def zero_field_model(level: float = 3.0, npoints: int = 41) -> FieldModel:
    """Zero kernel with a constant history: the solution is the origin state."""
    grid = symmetric_interval(2.0, npoints)
    from .delays import ZeroDelay
    return FieldModel(kernel=zero_kernel(1), rates=(Identity(),),
                      delay=ZeroDelay(),
                      prehistory=constant_profile(level), grid=grid,
                      name="zero-kernel")


# ---------------------------------------------------------------------------
# scenario registry
# ---------------------------------------------------------------------------

@dataclass
class ScenarioOracle:
    """A named scenario with its closed-form reference."""

    name: str
    params: dict = field(default_factory=dict)
    blow_up_time: float | None = None

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {self.name!r}; "
                             f"choose one of {sorted(SCENARIO_NAMES)}")


SCENARIO_NAMES = ("example21", "example31", "zero_field", "piecewise_example21")


def make_scenario(name: str, **params) -> ScenarioOracle:
    blow = None
    if name == "example21" and float(params.get("lam", 0.0)) == 0.0:
        blow = math.pi / 2.0
    return ScenarioOracle(name=name, params=params, blow_up_time=blow)


def quadratic_operator_for(lag: float, horizon: float, dt: float) -> DelayedQuadraticOperator:
    return DelayedQuadraticOperator(lag, make_time_grid(0.0, horizon, dt))
