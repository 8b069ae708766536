"""Spatiotemporal connectivity kernels W(t,s,x,y).

Separable kernels factor as eta(t,s) * omega(x,y) with a per-population
diagonal temporal part and a (possibly matrix-valued) spatial part; the
hot quadrature path exploits this. Arbitrary kernels go through
``GeneralKernel`` at verification scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import SpatialGrid


class UnsupportedModelError(RuntimeError):
    """Raised when a model lacks structure an operation requires."""


# ---------------------------------------------------------------------------
# temporal kernels
# ---------------------------------------------------------------------------

class TemporalKernel:
    """Scalar temporal factor eta(t,s), vanishing for s > t."""

    def __call__(self, t: np.ndarray, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def window_mass(self, t0: float, t1: float) -> float:
        """sup over t in [t0,t1] of the integral of |eta(t,s)| for s in [t0, min(t,t1)]."""
        raise NotImplementedError

    def history_tail_mass(self, t: float) -> float | None:
        """Integral of |eta(.,s)| over s in (-inf, t], or None if divergent."""
        return None


@dataclass(frozen=True)
class ExponentialDecay(TemporalKernel):
    """eta(t,s) = scale * rate * exp(-rate (t-s)) for s <= t."""

    rate: float
    scale: float = 1.0

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("decay rate must be positive")

    def __call__(self, t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        lag = t - s
        return np.where(lag >= 0.0,
                        self.scale * self.rate * np.exp(-self.rate * np.maximum(lag, 0.0)),
                        0.0)

    def window_mass(self, t0, t1):
        # integral over [t0, t] of rate e^{-rate(t-s)} ds = 1 - e^{-rate (t-t0)},
        # increasing in t, so the sup sits at t = t1
        return abs(self.scale) * (1.0 - math.exp(-self.rate * (t1 - t0)))


@dataclass(frozen=True)
class AlphaDecay(TemporalKernel):
    """eta(t,s) = scale * rate * (t-s) * exp(-rate (t-s)) for s <= t."""

    rate: float
    scale: float = 1.0

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("decay rate must be positive")

    def __call__(self, t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        lag = np.maximum(t - s, 0.0)
        return self.scale * self.rate * lag * np.exp(-self.rate * lag)

    def window_mass(self, t0, t1):
        d = self.rate * (t1 - t0)
        return abs(self.scale) / self.rate * (1.0 - math.exp(-d) * (1.0 + d))


@dataclass(frozen=True)
class PastDecay(TemporalKernel):
    """eta(t,s) = scale * exp(rate * s) for s <= t: memory fades in absolute time.

    The only built-in with an integrable history tail, hence the one that
    supports truncating an infinite-history run to a finite start.
    """

    rate: float
    scale: float = 1.0

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("memory decay rate must be positive")

    def __call__(self, t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        return np.where(s <= t, self.scale * np.exp(self.rate * s), 0.0)

    def window_mass(self, t0, t1):
        return abs(self.scale) / self.rate * (math.exp(self.rate * t1) - math.exp(self.rate * t0))

    def history_tail_mass(self, t):
        return abs(self.scale) / self.rate * math.exp(self.rate * t)


@dataclass(frozen=True)
class PastGrowth(TemporalKernel):
    """eta(t,s) = scale * exp(-s) for s <= t: weight grows into the past.

    The history tail diverges, so infinite-history truncation is
    unsupported; scenarios using this form must supply their own start.
    """

    scale: float = 1.0

    def __call__(self, t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        return np.where(s <= t, self.scale * np.exp(-s), 0.0)

    def window_mass(self, t0, t1):
        return abs(self.scale) * (math.exp(-t0) - math.exp(-t1))


@dataclass(frozen=True)
class ConstantMemory(TemporalKernel):
    """eta(t,s) = value for s <= t."""

    value: float = 1.0

    def __call__(self, t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        return np.where(s <= t, self.value, 0.0)

    def window_mass(self, t0, t1):
        return abs(self.value) * (t1 - t0)


# ---------------------------------------------------------------------------
# spatial kernels
# ---------------------------------------------------------------------------

class SpatialKernel:
    """Spatial factor omega(x,y) evaluated on point arrays."""

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """x: (Nx, m), y: (Ny, m) -> (Nx, Ny)."""
        raise NotImplementedError

    def abs_mass_bound(self) -> float | None:
        """Closed-form bound on sup_x of the integral of |omega(x,y)| dy, if known."""
        return None

    def matrix(self, grid: SpatialGrid) -> np.ndarray:
        return self.evaluate(grid.points, grid.points)


def _pair_dist(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - y[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True)
class MexicanHat(SpatialKernel):
    """omega = M exp(-m|x-y|) - K exp(-k|x-y|), lateral excitation/inhibition.

    Construction enforces M > K > 0 and m > k > 0.
    """

    M: float
    m: float
    K: float
    k: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.M > self.K > 0.0):
            raise ValueError(f"Mexican hat requires M > K > 0, got M={self.M}, K={self.K}")
        if not (self.m > self.k > 0.0):
            raise ValueError(f"Mexican hat requires m > k > 0, got m={self.m}, k={self.k}")

    def evaluate(self, x, y):
        d = _pair_dist(np.atleast_2d(x), np.atleast_2d(y))
        return self.scale * (self.M * np.exp(-self.m * d) - self.K * np.exp(-self.k * d))

    def abs_mass_bound(self):
        # 1D bound: integral of M e^{-m|z|} + K e^{-k|z|} over the line
        return abs(self.scale) * (2.0 * self.M / self.m + 2.0 * self.K / self.k)


@dataclass(frozen=True)
class WizardHat(SpatialKernel):
    """omega = M (1 - |x-y|) exp(-m|x-y|)."""

    M: float
    m: float
    scale: float = 1.0

    def __post_init__(self):
        if self.M <= 0 or self.m <= 0:
            raise ValueError("wizard hat requires M > 0 and m > 0")

    def evaluate(self, x, y):
        d = _pair_dist(np.atleast_2d(x), np.atleast_2d(y))
        return self.scale * self.M * (1.0 - d) * np.exp(-self.m * d)


@dataclass(frozen=True)
class GaussianKernel(SpatialKernel):
    """Normalized Gaussian in |x-y| with total line integral = scale."""

    sigma: float
    scale: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def evaluate(self, x, y):
        d = _pair_dist(np.atleast_2d(x), np.atleast_2d(y))
        norm = self.sigma * math.sqrt(2.0 * math.pi)
        return self.scale * np.exp(-0.5 * (d / self.sigma) ** 2) / norm

    def abs_mass_bound(self):
        return abs(self.scale)


@dataclass(frozen=True)
class SourceProfile(SpatialKernel):
    """omega(x,y) = g(x): output profile independent of the source point y."""

    profile: object  # callable (N, m) -> (N,)

    def evaluate(self, x, y):
        x = np.atleast_2d(x)
        y = np.atleast_2d(y)
        gx = np.asarray(self.profile(x), dtype=float)
        return np.broadcast_to(gx[:, None], (x.shape[0], y.shape[0])).copy()


@dataclass(frozen=True)
class ZeroSpatial(SpatialKernel):
    def evaluate(self, x, y):
        x = np.atleast_2d(x)
        y = np.atleast_2d(y)
        return np.zeros((x.shape[0], y.shape[0]))

    def abs_mass_bound(self):
        return 0.0


class SpatialCallable(SpatialKernel):
    """Wrap a vectorized callable omega(x, y) -> (Nx, Ny)."""

    def __init__(self, fn, mass_bound=None, name="callable"):
        self.fn = fn
        self._mass_bound = mass_bound
        self.name = name

    def evaluate(self, x, y):
        return np.asarray(self.fn(np.atleast_2d(x), np.atleast_2d(y)), dtype=float)

    def abs_mass_bound(self):
        return self._mass_bound

    def __repr__(self):
        return f"SpatialCallable({self.name})"


# ---------------------------------------------------------------------------
# assembled kernels
# ---------------------------------------------------------------------------

class Kernel:
    """Common interface of separable and general spatiotemporal kernels."""

    populations: int = 1
    separable: bool = False

    def spatial_abs_mass(self, grid: SpatialGrid) -> float:
        """Quadrature of sup_x integral of |omega(x,y)| dy (max over rows for n > 1)."""
        raise NotImplementedError

    def mass(self, grid: SpatialGrid, t0: float, t1: float) -> float:
        """sup over t in [t0,t1], x of the double quadrature of |W| over [t0,t1] x domain."""
        raise NotImplementedError


class SeparableKernel(Kernel):
    """W[j,k](t,s,x,y) = eta_j(t,s) * omega[j,k](x,y).

    ``temporal`` is one TemporalKernel per population (the diagonal
    temporal matrix); ``spatial`` is an n-by-n nested sequence of
    SpatialKernel entries (None means a zero block).
    """

    separable = True

    def __init__(self, temporal, spatial):
        if isinstance(temporal, TemporalKernel):
            temporal = (temporal,)
        self.temporal: tuple[TemporalKernel, ...] = tuple(temporal)
        n = len(self.temporal)
        if isinstance(spatial, SpatialKernel):
            spatial = ((spatial,),)
        rows = tuple(tuple(row) for row in spatial)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError("spatial matrix must be n-by-n for n populations")
        self.spatial: tuple[tuple[SpatialKernel | None, ...], ...] = rows
        self.populations = n

    def omega_matrix(self, grid: SpatialGrid) -> np.ndarray:
        """(n, n, N, N) array of spatial kernel values on the grid."""
        n, N = self.populations, grid.npoints
        out = np.zeros((n, n, N, N))
        for j in range(n):
            for k in range(n):
                entry = self.spatial[j][k]
                if entry is not None:
                    out[j, k] = entry.matrix(grid)
        if not np.all(np.isfinite(out)):
            raise ValueError("non-finite spatial kernel value on the grid")
        return out

    def eta_values(self, t: np.ndarray, s: np.ndarray) -> np.ndarray:
        """(len(t), len(s), n) temporal factors."""
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        out = np.empty((t.size, s.size, self.populations))
        for j, tk in enumerate(self.temporal):
            out[:, :, j] = tk(t[:, None], s[None, :])
        return out

    def spatial_abs_mass(self, grid: SpatialGrid) -> float:
        omega = self.omega_matrix(grid)
        row = np.einsum("y,jkxy->jkx", grid.weights, np.abs(omega))
        return float(np.max(np.sum(np.max(row, axis=2), axis=1)))

    def temporal_window_mass(self, t0: float, t1: float) -> float:
        return max(tk.window_mass(t0, t1) for tk in self.temporal)

    def mass(self, grid, t0, t1):
        return self.spatial_abs_mass(grid) * self.temporal_window_mass(t0, t1)

    def history_tail_mass(self, grid: SpatialGrid, t: float) -> float | None:
        if self.spatial_abs_mass(grid) == 0.0:
            return 0.0
        tails = [tk.history_tail_mass(t) for tk in self.temporal]
        if any(m is None for m in tails):
            return None
        return self.spatial_abs_mass(grid) * max(tails)


class GeneralKernel(Kernel):
    """W given by a vectorized callable W(t, s, x, y).

    ``fn`` receives scalar t, an (S,) array of s-values, and points
    x: (Nx, m), y: (Ny, m); it returns (S, Nx, Ny) for one population or
    (S, Nx, Ny, n, n) for n populations. Intended for verification-scale
    grids; the separable path is the fast one.
    """

    separable = False

    def __init__(self, fn, populations: int = 1, name="general"):
        self.fn = fn
        self.populations = populations
        self.name = name

    def values(self, t: float, s: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        vals = np.asarray(self.fn(float(t), s, np.atleast_2d(x), np.atleast_2d(y)),
                          dtype=float)
        if self.populations == 1 and vals.ndim == 3:
            vals = vals[:, :, :, None, None]
        return vals

    def spatial_abs_mass(self, grid: SpatialGrid) -> float:
        raise UnsupportedModelError("general kernels have no separable spatial mass")

    def mass(self, grid, t0, t1):
        # quadrature over s in [t0, min(t, t1)], sup over sampled t, x and rows
        ts = np.linspace(t0, t1, 9)
        worst = 0.0
        for t in ts[1:]:
            ns = max(2, int(math.ceil((t - t0) / (t1 - t0) * 64)) + 1)
            s = np.linspace(t0, t, ns)
            vals = np.abs(self.values(t, s, grid.points, grid.points))
            # row sums over source populations, integrated over y then s
            inner = np.einsum("y,sxyjk->sxj", grid.weights, vals)
            per_xj = np.trapezoid(inner, s, axis=0)
            worst = max(worst, float(np.max(per_xj)))
        return worst

    def __repr__(self):
        return f"GeneralKernel({self.name})"


def zero_kernel(populations: int = 1) -> SeparableKernel:
    """Kernel that is identically zero (degenerate model)."""
    temporal = tuple(ConstantMemory(0.0) for _ in range(populations))
    spatial = tuple(tuple(ZeroSpatial() for _ in range(populations))
                    for _ in range(populations))
    return SeparableKernel(temporal, spatial)


def two_population_kernel(omega_ee: SpatialKernel, omega_ei: SpatialKernel | None,
                          omega_ie: SpatialKernel | None, omega_ii: SpatialKernel | None,
                          alpha: float = 1.0) -> SeparableKernel:
    """Excitatory/inhibitory pair with temporal diag(e^{-(t-s)}, a e^{-a(t-s)}).

    Inhibitory couplings enter with a negative sign: the assembled spatial
    matrix is [[w_ee, -w_ei], [w_ie, -w_ii]].
    """
    if alpha <= 0:
        raise ValueError("relative inhibitory rate alpha must be positive")

    def negate(kern):
        if kern is None:
            return None
        return SpatialCallable(lambda x, y, _k=kern: -_k.evaluate(x, y),
                               mass_bound=kern.abs_mass_bound(),
                               name="negated")

    temporal = (ExponentialDecay(rate=1.0), ExponentialDecay(rate=alpha))
    spatial = ((omega_ee, negate(omega_ei)),
               (omega_ie, negate(omega_ii)))
    return SeparableKernel(temporal, spatial)
