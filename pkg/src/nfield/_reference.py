"""Pure-numpy implementations of the hot quadrature kernels.

Index convention: delayed lookup positions are expressed in grid-step
units, p = s_index - tau/dt. p >= 0 interpolates the live trajectory,
p < 0 interpolates the prehistory buffer whose last node coincides with
the trajectory origin. Interpolation is linear, matching the trapezoid
quadrature order.
"""
from __future__ import annotations

import numpy as np


def delayed_values(u: np.ndarray, pre: np.ndarray, s_idx: int,
                   tau_steps: np.ndarray) -> np.ndarray:
    """Delayed state u(s - tau(x,y), y) for all pairs; shape (Nx, Ny, n).

    u: (T+1, N, n) trajectory nodes, pre: (P+1, N, n) history buffer,
    tau_steps: (Nx, Ny) delays in units of the time step.
    """
    npre = pre.shape[0] - 1
    p = s_idx - tau_steps
    live = p >= 0.0

    ycols = np.arange(u.shape[1])[None, :]

    i = np.clip(np.floor(p).astype(np.int64), 0, s_idx)
    i2 = np.minimum(i + 1, s_idx)
    frac = np.clip(p - i, 0.0, 1.0)[..., None]
    v_live = (1.0 - frac) * u[i, ycols, :] + frac * u[i2, ycols, :]

    q = np.clip(p + npre, 0.0, float(npre))
    iq = np.clip(np.floor(q).astype(np.int64), 0, max(npre - 1, 0))
    fq = np.clip(q - iq, 0.0, 1.0)[..., None]
    iq2 = np.minimum(iq + 1, npre)
    v_pre = (1.0 - fq) * pre[iq, ycols, :] + fq * pre[iq2, ycols, :]

    return np.where(live[..., None], v_live, v_pre)


def g_slice_callable(u, pre, s_idx, tau_steps, wspace, omega, rates):
    """Spatially integrated delayed activation at one time node.

    Returns g with g[x, j] = sum_k integral of omega[j,k](x,y) *
    f_k(u(s - tau(x,y), y)) dy, evaluated by the grid quadrature.
    """
    v = delayed_values(u, pre, s_idx, tau_steps)
    fv = np.empty_like(v)
    for k, rate in enumerate(rates):
        fv[..., k] = rate(v[..., k])
    return np.einsum("y,jkxy,xyk->xj", wspace, omega, fv)


def delayed_rates(u, pre, s_idx, tau_steps, rates):
    """f_k(u(s - tau(x,y), y)) without the spatial integral; (Nx, Ny, n).

    Used by the general-kernel path where the spatial kernel cannot be
    factored out of the pair sum.
    """
    v = delayed_values(u, pre, s_idx, tau_steps)
    fv = np.empty_like(v)
    for k, rate in enumerate(rates):
        fv[..., k] = rate(v[..., k])
    return fv
