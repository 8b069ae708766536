"""Prescribed field values on the history interval (-inf, a]."""
from __future__ import annotations

import numpy as np

from .grids import SpatialGrid


class Prehistory:
    """History function phi(xi, x) consumed by delayed lookups.

    ``fn(xi, points)`` must accept an (P,) array of times and (N, m)
    points and return (P, N, n). The engine samples it once onto a
    uniform buffer covering [a - tau_max - dt, a]; between buffer nodes
    lookups interpolate linearly, matching the quadrature order.
    """

    def __init__(self, fn, populations: int = 1, decays_into_past: bool = False,
                 name="prehistory"):
        self.fn = fn
        self.populations = populations
        self.decays_into_past = decays_into_past
        self.name = name

    def values(self, xi: np.ndarray, grid: SpatialGrid) -> np.ndarray:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.asarray(self.fn(xi, grid.points), dtype=float)
        expect = (xi.size, grid.npoints, self.populations)
        if out.shape != expect:
            raise ValueError(f"prehistory returned shape {out.shape}, expected {expect}")
        if not np.all(np.isfinite(out)):
            raise ValueError("prehistory produced a non-finite value")
        return out

    def at(self, xi: float, grid: SpatialGrid) -> np.ndarray:
        """(N, n) snapshot at a single history time."""
        return self.values(np.array([xi]), grid)[0]

    def sample_buffer(self, a: float, dt: float, n_back: int,
                      grid: SpatialGrid) -> np.ndarray:
        """(n_back+1, N, n) samples on the nodes a - n_back*dt, ..., a."""
        xi = a + dt * (np.arange(n_back + 1) - n_back)
        return self.values(xi, grid)

    def __repr__(self):
        return f"Prehistory({self.name})"


def constant_profile(profile, populations: int = 1,
                     name="constant-profile") -> Prehistory:
    """History constant in time: phi(xi, x) = g(x).

    ``profile`` is a callable (N, m) -> (N,) or (N, n), or a scalar.
    """
    def fn(xi, points):
        if callable(profile):
            g = np.asarray(profile(points), dtype=float)
        else:
            g = np.full(points.shape[0], float(profile))
        if g.ndim == 1:
            g = np.repeat(g[:, None], populations, axis=1)
        return np.broadcast_to(g[None, :, :], (xi.size,) + g.shape).copy()

    return Prehistory(fn, populations=populations, name=name)


def zero_history(populations: int = 1) -> Prehistory:
    return constant_profile(0.0, populations=populations, name="zero")


def gaussian_bump(amplitude: float, width: float, baseline: float = 0.0,
                  populations: int = 1) -> Prehistory:
    """Time-constant Gaussian bump centered at the origin."""
    if width <= 0:
        raise ValueError("bump width must be positive")

    def profile(points):
        r2 = np.sum(points * points, axis=1)
        return baseline + amplitude * np.exp(-0.5 * r2 / width ** 2)

    return constant_profile(profile, populations=populations, name="gaussian-bump")


def separable_history(time_fn, profile_fn, populations: int = 1,
                      decays_into_past: bool = False,
                      name="separable") -> Prehistory:
    """phi(xi, x) = v(xi) * g(x) with vectorized factors."""

    def fn(xi, points):
        v = np.asarray(time_fn(xi), dtype=float)
        g = np.asarray(profile_fn(points), dtype=float)
        if g.ndim == 1:
            g = np.repeat(g[:, None], populations, axis=1)
        return v[:, None, None] * g[None, :, :]

    return Prehistory(fn, populations=populations,
                      decays_into_past=decays_into_past, name=name)
