"""Numba-compiled quadrature kernels; mirrors ``_reference``.

Only the built-in rate family is evaluable here (dispatch on integer
tags); operators with callable rates stay on the numpy path.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .rates import RATE_HILL, RATE_IDENTITY, RATE_LOGISTIC, RATE_SQUARE, RATE_TANH


@njit(cache=True, inline="always")
def _rate_eval(kind, a, b, u):
    if kind == RATE_HILL:
        if u <= 0.0:
            return 0.0
        return 1.0 / (1.0 + (b / u) ** a)
    if kind == RATE_TANH:
        return 0.5 * (1.0 + np.tanh(a * (u - b)))
    if kind == RATE_LOGISTIC:
        return 0.5 * (1.0 + np.tanh(0.5 * a * (u - b)))
    if kind == RATE_IDENTITY:
        return u
    if kind == RATE_SQUARE:
        return u * u
    return np.nan


@njit(cache=True)
def g_slice_builtin(u, pre, s_idx, tau_steps, wspace, omega, kinds, p1, p2):
    """Spatially integrated delayed activation at one time node.

    Same contract as ``_reference.g_slice_callable`` with rates given by
    (kinds, p1, p2) arrays instead of callables.
    """
    nx = tau_steps.shape[0]
    ny = tau_steps.shape[1]
    n = u.shape[2]
    npre = pre.shape[0] - 1
    g = np.zeros((nx, n))
    for x in range(nx):
        for y in range(ny):
            p = s_idx - tau_steps[x, y]
            w = wspace[y]
            for k in range(n):
                if p >= 0.0:
                    i = int(p)
                    if i > s_idx:
                        i = s_idx
                    frac = p - i
                    i2 = i + 1
                    if i2 > s_idx:
                        i2 = s_idx
                    v = (1.0 - frac) * u[i, y, k] + frac * u[i2, y, k]
                else:
                    q = p + npre
                    if q < 0.0:
                        q = 0.0
                    iq = int(q)
                    if iq > npre - 1:
                        iq = npre - 1
                    if iq < 0:
                        iq = 0
                    fq = q - iq
                    v = (1.0 - fq) * pre[iq, y, k] + fq * pre[iq + 1, y, k]
                fv = _rate_eval(kinds[k], p1[k], p2[k], v)
                for j in range(n):
                    g[x, j] += w * omega[j, k, x, y] * fv
    return g
