"""Spatial quadrature grids and uniform time grids."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpatialGrid:
    """Quadrature nodes and positive weights on a domain in R^m.

    ``truncation_radius`` is set when the grid discretizes a truncated
    unbounded domain; the assumption validator then checks kernel decay
    at the boundary.
    """

    points: np.ndarray
    weights: np.ndarray
    truncation_radius: float | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError("grid points must be an (npoints, ndim) array")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (pts.shape[0],):
            raise ValueError("one quadrature weight per grid point required")
        if not np.all(np.isfinite(w)) or not np.all(w > 0.0):
            raise ValueError("quadrature weights must be finite and strictly positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def npoints(self) -> int:
        return self.points.shape[0]

    @property
    def ndim(self) -> int:
        return self.points.shape[1]

    def distances(self) -> np.ndarray:
        """Euclidean distance matrix |x_i - y_j|, shape (npoints, npoints)."""
        diff = self.points[:, None, :] - self.points[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=-1))

    def volume(self) -> float:
        return float(np.sum(self.weights))


def uniform_interval(lo: float, hi: float, npoints: int,
                     truncation_radius: float | None = None) -> SpatialGrid:
    """Uniform 1D grid on [lo, hi] with composite-trapezoid weights."""
    if npoints < 2:
        raise ValueError("need at least two points for an interval grid")
    if not hi > lo:
        raise ValueError("interval bounds must satisfy hi > lo")
    x = np.linspace(lo, hi, npoints)
    h = (hi - lo) / (npoints - 1)
    w = np.full(npoints, h)
    w[0] = w[-1] = h / 2.0
    return SpatialGrid(points=x[:, None], weights=w,
                       truncation_radius=truncation_radius)


def symmetric_interval(radius: float, npoints: int) -> SpatialGrid:
    """Grid on [-radius, radius], symmetric about the origin.

    Symmetry makes even kernels integrate symmetrically, so parity
    cancellations survive discretization.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    x = np.linspace(-radius, radius, npoints)
    x = 0.5 * (x - x[::-1])  # enforce exact mirror symmetry in floats
    h = 2.0 * radius / (npoints - 1)
    w = np.full(npoints, h)
    w[0] = w[-1] = h / 2.0
    return SpatialGrid(points=x[:, None], weights=w, truncation_radius=radius)


def singleton_grid() -> SpatialGrid:
    """One-point grid with unit weight, for space-free operators."""
    return SpatialGrid(points=np.zeros((1, 1)), weights=np.ones(1))


def tensor_box(radii: tuple[float, ...], counts: tuple[int, ...]) -> SpatialGrid:
    """Tensor-product trapezoid grid on a symmetric box in R^m."""
    if len(radii) != len(counts):
        raise ValueError("radii and counts must have equal length")
    axes = [symmetric_interval(r, c) for r, c in zip(radii, counts)]
    pts = np.array([
        [float(g.points[i, 0]) for g, i in zip(axes, idx)]
        for idx in itertools.product(*[range(g.npoints) for g in axes])
    ])
    wts = np.array([
        math.prod(float(g.weights[i]) for g, i in zip(axes, idx))
        for idx in itertools.product(*[range(g.npoints) for g in axes])
    ])
    return SpatialGrid(points=pts, weights=wts, truncation_radius=max(radii))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time discretization a, a+dt, ..., a+nsteps*dt."""

    start: float
    step: float
    nsteps: int

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("time step must be positive")
        if self.nsteps < 1:
            raise ValueError("time grid needs at least one step")

    @property
    def n_nodes(self) -> int:
        return self.nsteps + 1

    @property
    def end(self) -> float:
        return self.node_time(self.nsteps)

    def node_time(self, i: int) -> float:
        return self.start + self.step * i

    def times(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.n_nodes)

    def index_at(self, t: float, tol: float = 1e-9) -> int:
        """Node index of a grid-aligned time; raises if t is off-grid."""
        p = (t - self.start) / self.step
        i = int(round(p))
        if i < 0 or i > self.nsteps or abs(p - i) > tol:
            raise ValueError(f"time {t} is not a node of the grid")
        return i


def make_time_grid(a: float, horizon: float, dt: float) -> TimeGrid:
    """Grid covering [a, horizon]; last node is the first node >= horizon."""
    if horizon <= a:
        raise ValueError("horizon must exceed the origin")
    nsteps = max(1, math.ceil((horizon - a) / dt - 1e-9))
    return TimeGrid(start=a, step=dt, nsteps=nsteps)
