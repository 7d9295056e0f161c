"""NumPy implementation of the ML grid-scan kernels.

For grid angle g the objective is::

    |a_R(g)^H E conj(a_T(g))|^2 / (M_R * a_T(g)^H R^T a_T(g))

Grid points whose denominator does not exceed ``floor`` are reported as NaN
and never win the arg max. Ties go to the lowest index.
"""
import numpy as np


def ml_objective_grid(E, R, a_t, a_r, floor):
    E = np.asarray(E, dtype=complex)
    R = np.asarray(R, dtype=complex)
    a_t = np.asarray(a_t, dtype=complex)
    a_r = np.asarray(a_r, dtype=complex)
    num = np.abs(np.einsum("gl,lk,gk->g", a_r.conj(), E, a_t.conj(), optimize=True)) ** 2
    den = E.shape[0] * np.einsum("gi,ji,gj->g", a_t.conj(), R, a_t, optimize=True).real
    out = np.full(num.shape, np.nan)
    ok = den > floor
    out[ok] = num[ok] / den[ok]
    return out


def argmax_first(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0 or np.all(np.isnan(v)):
        return -1
    # nanargmax returns the first occurrence of the maximum
    return int(np.nanargmax(v))


def ml_argmax(E, R, a_t, a_r, floor):
    return argmax_first(ml_objective_grid(E, R, a_t, a_r, floor))
