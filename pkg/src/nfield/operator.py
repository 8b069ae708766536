"""Windowed evaluation of the delayed field operator.

The operator maps a trajectory u on the time grid to

    (F u)(t, x) = phi(a, x) + integral over s in [a, t] and y of
                  W(t, s, x, y) f(u(s - tau(s, x, y), y))  (+ forcing)

with history values spliced in whenever the delayed time drops below the
origin. Evaluation is composite trapezoid in time, weighted-sum in
space, linear interpolation for off-node delayed lookups.

The expensive part is the delayed activation slice g(s, x) (an N^2
gather per time node). Slices for time nodes at or before the accepted
front are frozen by the extension loop and cached; Picard iterates then
only recompute the slices inside the live window.
"""
from __future__ import annotations

import numpy as np

from . import backend
from .grids import TimeGrid
from .kernels import GeneralKernel, SeparableKernel
from .model import FieldModel
from . import _reference


class FieldOperator:
    """Grid-discretized field operator bound to one time grid."""

    def __init__(self, model: FieldModel, time_grid: TimeGrid):
        self.model = model
        self.time_grid = time_grid
        self.grid = model.grid
        self.populations = model.populations

        n = self.populations
        N = self.grid.npoints
        self._times = time_grid.times()
        self._dt = time_grid.step
        self._a = time_grid.start

        self.separable = isinstance(model.kernel, SeparableKernel)
        if self.separable:
            self._omega = model.kernel.omega_matrix(self.grid)
        elif not isinstance(model.kernel, GeneralKernel):
            raise TypeError("kernel must be separable or general")

        self._phi_a = model.prehistory.at(self._a, self.grid)
        tau_lo, tau_hi = model.delay.bounds_over(self.grid, time_grid)
        self.tau_volterra_offset = tau_lo
        self._tau_hi = tau_hi

        # history buffer: one step beyond the largest sampled delay
        n_back = int(np.ceil(tau_hi / self._dt - 1e-12)) + 1
        self._pre = model.prehistory.sample_buffer(self._a, self._dt, n_back, self.grid)

        self._tau_static = None
        if not model.delay.time_dependent:
            self._tau_static = self._tau_steps_at(self._a)

        self._rates = model.rates
        specs = [r.numba_spec() for r in self._rates]
        self._accel = None
        if backend.have_accel() and self.separable and all(s is not None for s in specs):
            self._accel = backend.accel_module()
            self._kinds = np.array([s[0] for s in specs], dtype=np.int64)
            self._p1 = np.array([s[1] for s in specs], dtype=np.float64)
            self._p2 = np.array([s[2] for s in specs], dtype=np.float64)

        nt = time_grid.n_nodes
        self._g = np.zeros((nt, N, n))
        self._g_count = 0  # slices [0, _g_count) are frozen
        self._fv = None    # general-kernel activation cache, allocated lazily
        self._memo_key = None
        self._memo = None

    # -- basic metadata ----------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return self.time_grid.n_nodes

    @property
    def times(self) -> np.ndarray:
        return self._times

    @property
    def state_shape(self) -> tuple[int, int]:
        return (self.grid.npoints, self.populations)

    def initial_state(self) -> np.ndarray:
        """Operator output at the origin; independent of the input."""
        out = self._phi_a.copy()
        if self.model.forcing is not None:
            out = out + np.asarray(self.model.forcing(self._a, self.grid.points), dtype=float)
        return out

    def lipschitz_bound(self, r: float) -> float:
        return self.model.lipschitz_bound(r)

    def kernel_mass(self, t0: float, t1: float) -> float:
        return self.model.kernel.mass(self.grid, t0, t1)

    # -- delayed activation slices ------------------------------------------

    def _tau_steps_at(self, t: float) -> np.ndarray:
        tau = self.model.delay._checked(t, self.grid.points, self.grid.points)
        return tau / self._dt

    def _tau_steps(self, s_idx: int) -> np.ndarray:
        if self._tau_static is not None:
            return self._tau_static
        return self._tau_steps_at(self._times[s_idx])

    def _g_at(self, u: np.ndarray, s_idx: int) -> np.ndarray:
        tau_steps = self._tau_steps(s_idx)
        if self._accel is not None:
            return self._accel.g_slice_builtin(
                u, self._pre, s_idx, tau_steps, self.grid.weights,
                self._omega, self._kinds, self._p1, self._p2)
        return _reference.g_slice_callable(
            u, self._pre, s_idx, tau_steps, self.grid.weights,
            self._omega, self._rates)

    def _fv_at(self, u: np.ndarray, s_idx: int) -> np.ndarray:
        return _reference.delayed_rates(
            u, self._pre, s_idx, self._tau_steps(s_idx), self._rates)

    def advance_frozen(self, u: np.ndarray, k: int) -> None:
        """Freeze activation slices for nodes <= k; u[:k+1] is final."""
        if self.separable:
            for s in range(self._g_count, k + 1):
                self._g[s] = self._g_at(u, s)
        else:
            if self._fv is None:
                N, n = self.state_shape
                self._fv = np.zeros((self.n_nodes, N, N, n))
            for s in range(self._g_count, k + 1):
                self._fv[s] = self._fv_at(u, s)
        self._g_count = k + 1
        self._memo = None
        self._memo_key = None

    def reset_frozen(self) -> None:
        self._g_count = 0
        self._memo = None
        self._memo_key = None

    # -- application ---------------------------------------------------------

    def _window_arrays(self, k0: int, k1: int):
        """Trapezoid weight matrix and temporal factors for nodes (k0, k1]."""
        key = (k0, k1)
        if self._memo_key == key:
            return self._memo
        M = k1 - k0
        S = k1 + 1
        dt = self._dt
        W = np.zeros((M, S))
        for mi in range(M):
            m = k0 + 1 + mi
            W[mi, 0] = 0.5 * dt
            if m > 1:
                W[mi, 1:m] = dt
            W[mi, m] = 0.5 * dt
        eta = None
        if self.separable:
            eta = self.model.kernel.eta_values(self._times[k0 + 1:k1 + 1],
                                               self._times[:S])
        self._memo_key = key
        self._memo = (W, eta)
        return self._memo

    def apply(self, u: np.ndarray, k0: int, k1: int,
              use_cache: bool = False) -> np.ndarray:
        """Operator values at nodes k0+1 .. k1 for the trajectory u.

        The evaluation is pure in u. With ``use_cache=True`` the frozen
        activation slices are trusted for nodes below the accepted front,
        which requires u[:frozen] to be the trajectory previously passed
        to ``advance_frozen`` (the extension loop guarantees this).
        """
        if not (0 <= k0 < k1 <= self.n_nodes - 1):
            raise ValueError("invalid node range")
        frozen = min(self._g_count, k1 + 1) if use_cache else 0
        W, eta = self._window_arrays(k0, k1) if use_cache else self._window_arrays_fresh(k0, k1)

        if self.separable:
            g = np.empty((k1 + 1,) + self.state_shape)
            if frozen:
                g[:frozen] = self._g[:frozen]
            for s in range(frozen, k1 + 1):
                g[s] = self._g_at(u, s)
            out = np.einsum("ms,msj,sxj->mxj", W, eta, g)
        else:
            fv = np.empty((k1 + 1, self.grid.npoints, self.grid.npoints, self.populations))
            if frozen and self._fv is not None:
                fv[:frozen] = self._fv[:frozen]
                start = frozen
            else:
                start = 0
            for s in range(start, k1 + 1):
                fv[s] = self._fv_at(u, s)
            out = np.empty((k1 - k0,) + self.state_shape)
            pts = self.grid.points
            for mi in range(k1 - k0):
                m = k0 + 1 + mi
                vals = self.model.kernel.values(self._times[m], self._times[:m + 1], pts, pts)
                out[mi] = np.einsum("s,y,sxyjk,sxyk->xj",
                                    W[mi, :m + 1], self.grid.weights,
                                    vals, fv[:m + 1])
        if not np.all(np.isfinite(out)):
            bad = np.argwhere(~np.isfinite(out))
            mi, x = int(bad[0][0]), int(bad[0][1])
            raise ValueError(
                f"non-finite operator value at t={self._times[k0 + 1 + mi]:.6g}, "
                f"grid point {x}")
        out += self._phi_a[None, :, :]
        if self.model.forcing is not None:
            for mi in range(k1 - k0):
                out[mi] += np.asarray(
                    self.model.forcing(self._times[k0 + 1 + mi], self.grid.points),
                    dtype=float)
        return out

    def _window_arrays_fresh(self, k0: int, k1: int):
        """Uncached variant for pure applications on arbitrary inputs."""
        saved_key, saved = self._memo_key, self._memo
        self._memo_key = None
        self._memo = None
        arrays = self._window_arrays(k0, k1)
        self._memo_key, self._memo = saved_key, saved
        return arrays


def shift_lookup(traj_times: np.ndarray, traj_values: np.ndarray,
                 prehistory, grid, delay, t: float, x_index: int,
                 y_index: int) -> np.ndarray:
    """Delayed state lookup S u(t, x, y): the value driving the integrand.

    Computes s = t - tau(t, x, y), then returns phi(s, y) when s precedes
    the trajectory origin (the history callable is consulted directly, so
    no buffer can be outrun) and the linearly interpolated trajectory
    value otherwise.
    """
    times = np.asarray(traj_times, dtype=float)
    a = float(times[0])
    if not (a <= t <= times[-1] + 1e-12):
        raise ValueError("lookup time outside the trajectory span")
    tau = float(delay._checked(t, grid.points[x_index:x_index + 1],
                               grid.points[y_index:y_index + 1])[0, 0])
    s = t - tau
    if s < a:
        return prehistory.at(s, grid)[y_index]
    dt = float(times[1] - times[0])
    p = (s - a) / dt
    i = min(int(p), times.size - 1)
    i2 = min(i + 1, times.size - 1)
    frac = p - i
    return (1.0 - frac) * traj_values[i, y_index] + frac * traj_values[i2, y_index]
