"""Compiled inner loops: Sturm pivot counts, pivoted tridiagonal solves,
and the fixed-order shooting integrator."""

import numba
import numpy as np

_PIVMIN = 1e-292
_RESCALE = 1e-100
_LOG_RESCALE = 230.25850929940458  # -ln(_RESCALE)


@numba.njit(cache=True, nogil=True)
def sturm_count(diag, off, shift):
    """Number of eigenvalues of the symmetric tridiagonal (diag, off)
    strictly below ``shift``.

    Counts negative pivots of the LDL^T factorisation of (T - shift).
    A vanishing pivot is nudged to -_PIVMIN, which can move the count by
    at most one at an exact tie.
    """
    n = diag.shape[0]
    count = 0
    d = diag[0] - shift
    if abs(d) < _PIVMIN:
        d = -_PIVMIN
    if d < 0.0:
        count += 1
    for i in range(1, n):
        d = (diag[i] - shift) - off[i - 1] * off[i - 1] / d
        if abs(d) < _PIVMIN:
            d = -_PIVMIN
        if d < 0.0:
            count += 1
    return count


@numba.njit(cache=True, nogil=True)
def solve_shifted(diag, off, shift, rhs):
    """Solve (T - shift*I) x = rhs for symmetric tridiagonal T, in place
    safe, using LU with partial pivoting (gttrf-style).

    Returns the solution; intended for inverse iteration where the shift
    sits next to an eigenvalue, so the factorisation must tolerate tiny
    pivots.
    """
    n = diag.shape[0]
    dl = np.empty(n - 1)
    d = np.empty(n)
    du = np.empty(n - 1)
    du2 = np.zeros(n - 2) if n > 2 else np.zeros(0)
    piv = np.zeros(n - 1, dtype=np.uint8)
    for i in range(n - 1):
        dl[i] = off[i]
        du[i] = off[i]
    for i in range(n):
        d[i] = diag[i] - shift

    for i in range(n - 1):
        if abs(d[i]) >= abs(dl[i]):
            if abs(d[i]) < _PIVMIN:
                d[i] = _PIVMIN
            fact = dl[i] / d[i]
            dl[i] = fact
            d[i + 1] = d[i + 1] - fact * du[i]
        else:
            fact = d[i] / dl[i]
            d[i] = dl[i]
            dl[i] = fact
            tmp = du[i]
            du[i] = d[i + 1]
            d[i + 1] = tmp - fact * d[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -fact * du[i + 1]
            piv[i] = 1
    if abs(d[n - 1]) < _PIVMIN:
        d[n - 1] = _PIVMIN

    x = rhs.copy()
    for i in range(n - 1):
        if piv[i] == 0:
            x[i + 1] = x[i + 1] - dl[i] * x[i]
        else:
            tmp = x[i]
            x[i] = x[i + 1]
            x[i + 1] = tmp - dl[i] * x[i]
    x[n - 1] = x[n - 1] / d[n - 1]
    if n > 1:
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i]
    return x


@numba.njit(cache=True, nogil=True)
def rk4_shoot(u0, v0, steps, g_start, g_mid, g_end):
    """March u'' = g(y) u by classical RK4 over the given steps.

    g is pre-sampled at each step's start, midpoint, and end. The state is
    rescaled when it grows large; the returned log-scale keeps amplitudes
    recoverable (the phase is unaffected by rescaling).
    """
    u = u0
    v = v0
    log_scale = 0.0
    for i in range(steps.shape[0]):
        h = steps[i]
        a0 = g_start[i]
        am = g_mid[i]
        a1 = g_end[i]
        k1u = v
        k1v = a0 * u
        k2u = v + 0.5 * h * k1v
        k2v = am * (u + 0.5 * h * k1u)
        k3u = v + 0.5 * h * k2v
        k3v = am * (u + 0.5 * h * k2u)
        k4u = v + h * k3v
        k4v = a1 * (u + h * k3u)
        u = u + h * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0
        v = v + h * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
        m = abs(u) + abs(v)
        if m > 1e100:
            u *= _RESCALE
            v *= _RESCALE
            log_scale += _LOG_RESCALE
    return u, v, log_scale
