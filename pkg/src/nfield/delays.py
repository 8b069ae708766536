"""Delay fields tau(t, x, y) >= 0 feeding the shifted state lookup."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import SpatialGrid, TimeGrid


class DelayField:
    """Nonnegative delay evaluated on point pairs.

    ``time_dependent`` controls whether the quadrature re-samples the
    delay at every time node or once per run.
    """

    time_dependent: bool = False

    def tau(self, t: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """(Nx, Ny) delays at time t for all point pairs."""
        raise NotImplementedError

    def bounds_over(self, grid: SpatialGrid, time_grid: TimeGrid) -> tuple[float, float]:
        """(min, max) of tau over grid point pairs and time nodes.

        The engine only ever evaluates tau at these nodes, so nodewise
        bounds are the ones that matter: the max sizes the prehistory
        buffer, the min enables the short-memory fast path.
        """
        if self.time_dependent:
            lo, hi = np.inf, 0.0
            for t in time_grid.times():
                m = self._checked(t, grid.points, grid.points)
                lo = min(lo, float(np.min(m)))
                hi = max(hi, float(np.max(m)))
            return lo, hi
        m = self._checked(time_grid.start, grid.points, grid.points)
        return float(np.min(m)), float(np.max(m))

    def _checked(self, t, x, y):
        m = np.asarray(self.tau(t, x, y), dtype=float)
        if not np.all(np.isfinite(m)):
            raise ValueError("delay field produced a non-finite value")
        if np.any(m < 0.0):
            raise ValueError("delay field produced a negative value")
        return m


@dataclass(frozen=True)
class ZeroDelay(DelayField):
    def tau(self, t, x, y):
        x = np.atleast_2d(x)
        y = np.atleast_2d(y)
        return np.zeros((x.shape[0], y.shape[0]))


@dataclass(frozen=True)
class ConstantDelay(DelayField):
    """tau(t,x,y) = tau0 everywhere."""

    tau0: float

    def __post_init__(self):
        if self.tau0 < 0:
            raise ValueError("constant delay must be nonnegative")

    def tau(self, t, x, y):
        x = np.atleast_2d(x)
        y = np.atleast_2d(y)
        return np.full((x.shape[0], y.shape[0]), self.tau0)


@dataclass(frozen=True)
class TransmissionDelay(DelayField):
    """tau(t,x,y) = |x-y| / velocity (finite signal propagation speed)."""

    velocity: float

    def __post_init__(self):
        if self.velocity <= 0:
            raise ValueError("transmission velocity must be positive")

    def tau(self, t, x, y):
        x = np.atleast_2d(x)
        y = np.atleast_2d(y)
        diff = x[:, None, :] - y[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=-1)) / self.velocity


class MetricDelay(DelayField):
    """tau(t,x,y) = d(x,y) for a user metric-like function d >= 0."""

    def __init__(self, fn, name="metric"):
        self.fn = fn
        self.name = name

    def tau(self, t, x, y):
        return np.asarray(self.fn(np.atleast_2d(x), np.atleast_2d(y)), dtype=float)

    def __repr__(self):
        return f"MetricDelay({self.name})"


class GeneralDelay(DelayField):
    """tau(t,x,y) from a vectorized callable; re-sampled at every time node."""

    time_dependent = True

    def __init__(self, fn, name="general"):
        self.fn = fn
        self.name = name

    def tau(self, t, x, y):
        return np.asarray(self.fn(float(t), np.atleast_2d(x), np.atleast_2d(y)),
                          dtype=float)

    def __repr__(self):
        return f"GeneralDelay({self.name})"
