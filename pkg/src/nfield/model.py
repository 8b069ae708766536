"""Field model assembly: kernel + rates + delay + prehistory + grid.

Also hosts the sampling-based assumption validator and the
infinite-history truncation used to restart long-memory runs from a
finite origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .delays import DelayField
from .grids import SpatialGrid, TimeGrid, make_time_grid
from .kernels import Kernel, SeparableKernel, UnsupportedModelError
from .prehistory import Prehistory
from .rates import FiringRate


@dataclass
class FieldModel:
    """Immutable-after-construction model of one delayed integral field."""

    kernel: Kernel
    rates: tuple[FiringRate, ...]
    delay: DelayField
    prehistory: Prehistory
    grid: SpatialGrid
    forcing: object | None = None
    name: str = "field-model"

    def __post_init__(self):
        if isinstance(self.rates, FiringRate):
            self.rates = (self.rates,)
        self.rates = tuple(self.rates)
        n = self.kernel.populations
        if len(self.rates) == 1 and n > 1:
            self.rates = self.rates * n
        if len(self.rates) != n:
            raise ValueError(f"{n} populations need {n} firing rates, got {len(self.rates)}")
        if self.prehistory.populations != n:
            raise ValueError("prehistory population count does not match the kernel")

    @property
    def populations(self) -> int:
        return self.kernel.populations

    def lipschitz_bound(self, r: float) -> float:
        """Shared local Lipschitz constant of the rate family on |u| <= r."""
        return max(rate.lipschitz_bound(r) for rate in self.rates)

    def rate_bound(self, r: float) -> float:
        return max(rate.bound(r) for rate in self.rates)

    def operator(self, time_grid: TimeGrid):
        from .operator import FieldOperator
        return FieldOperator(self, time_grid)


def kernel_mass(model: FieldModel, t0: float, t1: float) -> float:
    """Grid quadrature of sup_{t in window, x} of the double integral of |W|.

    For separable kernels this is the product of the spatial row mass and
    the temporal window mass, both with closed forms for the built-ins.
    """
    if not t1 > t0:
        raise ValueError("window must have positive length")
    return model.kernel.mass(model.grid, t0, t1)


def build_memory_truncation(model: FieldModel, b: float, eps: float,
                            radius: float) -> float:
    """Start time a_eff with (tail kernel mass before a_eff) * f_r <= eps.

    Runs posed on an infinite history are then solved from a_eff with the
    scenario-supplied history standing in for everything earlier. Only
    kernels whose history tail is integrable in absolute time admit this;
    translation-invariant memories do not and raise.
    """
    if eps <= 0 or radius <= 0:
        raise ValueError("eps and radius must be positive")
    kern = model.kernel
    if not isinstance(kern, SeparableKernel):
        raise UnsupportedModelError("memory truncation needs a separable kernel")
    lip = model.lipschitz_bound(radius)
    tail_b = kern.history_tail_mass(model.grid, b)
    if tail_b is None:
        raise UnsupportedModelError(
            "temporal kernel has no integrable history tail; supply the start time explicitly")
    if tail_b * lip <= eps:
        return float(b)
    # bracket leftward, then bisect: tail mass is continuous and increasing
    lo, hi = b - 1.0, b
    while kern.history_tail_mass(model.grid, lo) * lip > eps:
        hi = lo
        lo = b - 2.0 * (b - lo)
        if b - lo > 1e6:
            raise UnsupportedModelError("history tail decays too slowly to truncate")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if kern.history_tail_mass(model.grid, mid) * lip <= eps:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, abs(b)):
            break
    return float(lo)


# ---------------------------------------------------------------------------
# assumption validation (sampling proxies)
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    detail: str
    proxy: bool = True


@dataclass
class AssumptionReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            tag = "pass" if c.passed else "FAIL"
            proxy = " (sampled proxy)" if c.proxy else ""
            out.append(f"{tag}  {c.name}: worst={c.worst:.6g} {c.detail}{proxy}")
        return out


def _kernel_samples(model: FieldModel, time_grid: TimeGrid, nt: int = 5):
    """|W| sampled on a few (t, s-grid incl. s=t, x, y) blocks."""
    ts = np.linspace(time_grid.start, time_grid.end, nt)[1:]
    pts = model.grid.points
    kern = model.kernel
    for t in ts:
        s = np.linspace(time_grid.start, t, 17)
        if isinstance(kern, SeparableKernel):
            eta = kern.eta_values(np.array([t]), s)[0]      # (S, n)
            omega = kern.omega_matrix(model.grid)           # (n, n, N, N)
            yield t, s, np.einsum("sj,jkxy->sxyjk", np.abs(eta), np.abs(omega))
        else:
            yield t, s, np.abs(kern.values(t, s, pts, pts))


def validate_assumptions(model: FieldModel, horizon: float, samples: int = 200,
                         seed: int = 0, decay_tol: float = 1e-6,
                         mass_cap: float = 1e8, radius: float = 10.0,
                         dt: float | None = None) -> AssumptionReport:
    """Spot-check the model's standing assumptions by sampling.

    These are proxies: continuity and integrability cannot be decided
    from callables, so each check reports the worst sampled value and the
    report says so. Failures block solving only when the caller treats
    them as fatal.
    """
    rng = np.random.default_rng(seed)
    rep = AssumptionReport()
    a = 0.0
    dt = dt if dt is not None else max(horizon / 64.0, 1e-3)
    tg = make_time_grid(a, horizon, dt)
    pts = model.grid.points

    # kernel finiteness on sampled blocks including the s=t diagonal
    worst = 0.0
    finite = True
    for _, _, block in _kernel_samples(model, tg):
        if not np.all(np.isfinite(block)):
            finite = False
            worst = math.inf
            break
        worst = max(worst, float(np.max(block)))
    rep.checks.append(CheckResult(
        "kernel finite on sampled (t,s,x,y)", finite and worst < mass_cap, worst,
        f"cap={mass_cap:g}"))

    # kernel time-regularity: difference under small t-shifts stays bounded
    h = dt / 4.0
    worst = 0.0
    ok = True
    kern = model.kernel
    for t in np.linspace(a + 2 * h, tg.end, 4):
        s = np.linspace(a, t - h, 9)
        if isinstance(kern, SeparableKernel):
            d = np.max(np.abs(kern.eta_values(np.array([t]), s)
                              - kern.eta_values(np.array([t - h]), s)))
        else:
            d = np.max(np.abs(kern.values(t, s, pts, pts)
                              - kern.values(t - h, s, pts, pts)))
        if not np.isfinite(d):
            ok = False
            d = math.inf
        worst = max(worst, float(d))
    rep.checks.append(CheckResult(
        "kernel regular under small time shifts", ok and worst < mass_cap, worst, ""))

    # integrability of the double quadrature over [a, horizon]
    try:
        total = model.kernel.mass(model.grid, a, tg.end)
        ok = bool(np.isfinite(total)) and total < mass_cap
    except (ValueError, FloatingPointError, UnsupportedModelError):
        total = math.inf
        ok = False
    rep.checks.append(CheckResult(
        "kernel mass integrable over the horizon", ok,
        float(total) if np.isfinite(total) else math.inf, f"cap={mass_cap:g}"))

    # local boundedness of the rates
    u = rng.uniform(-radius, radius, size=samples)
    worst = 0.0
    ok = True
    for rate in model.rates:
        fb = rate.bound(radius)
        got = float(np.max(np.abs(rate(u))))
        worst = max(worst, got)
        if got > fb * (1 + 1e-12):
            ok = False
    rep.checks.append(CheckResult(
        "firing rate locally bounded", ok, worst, f"radius={radius:g}"))

    # delay nonnegative and finite on sampled nodes
    ok = True
    worst = 0.0
    try:
        lo, hi = model.delay.bounds_over(model.grid, tg)
        worst = hi
        ok = lo >= 0.0 and np.isfinite(hi)
    except ValueError:
        ok = False
        worst = math.inf
    rep.checks.append(CheckResult(
        "delay nonnegative and finite", ok, worst, ""))

    # prehistory continuity proxy and buffer consistency
    tau_hi = worst if np.isfinite(worst) else 1.0
    n_back = max(4, int(math.ceil(tau_hi / dt)) + 1)
    buf = model.prehistory.sample_buffer(a, dt, n_back, model.grid)
    jumps = np.max(np.abs(np.diff(buf, axis=0))) if buf.shape[0] > 1 else 0.0
    node_match = float(np.max(np.abs(
        buf[-1] - model.prehistory.at(a, model.grid))))
    ok = bool(np.all(np.isfinite(buf))) and node_match == 0.0
    rep.checks.append(CheckResult(
        "prehistory finite, buffer matches callable", ok,
        float(jumps), f"max node-to-node jump over step {dt:g}"))

    if model.prehistory.decays_into_past:
        far = model.prehistory.at(a - n_back * dt, model.grid)
        near = model.prehistory.at(a, model.grid)
        ok = float(np.max(np.abs(far))) <= float(np.max(np.abs(near))) + 1e-9
        rep.checks.append(CheckResult(
            "prehistory decay sanity", ok, float(np.max(np.abs(far))), ""))

    # spatial localization at the truncation boundary
    if model.grid.truncation_radius is not None:
        radius_b = model.grid.truncation_radius
        norms = np.sqrt(np.sum(pts * pts, axis=1))
        bidx = int(np.argmax(norms))
        cidx = int(np.argmin(norms))
        if isinstance(kern, SeparableKernel):
            omega = kern.omega_matrix(model.grid)
            peak = float(np.max(np.abs(omega)))
            edge = float(np.max(np.abs(omega[:, :, bidx, cidx])))
        else:
            t = tg.end
            s = np.linspace(a, t, 9)
            vals = np.abs(kern.values(t, s, pts[bidx:bidx + 1], pts[cidx:cidx + 1]))
            peak_vals = np.abs(kern.values(t, s, pts, pts))
            peak = float(np.max(peak_vals))
            edge = float(np.max(vals))
        ratio = edge / peak if peak > 0 else 0.0
        rep.checks.append(CheckResult(
            "kernel decay at truncation boundary", ratio <= decay_tol, ratio,
            f"|W(boundary, center)|/peak, tol={decay_tol:g}, radius={radius_b:g}"))

    return rep
