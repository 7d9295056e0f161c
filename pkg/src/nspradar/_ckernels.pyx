# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled grid-scan kernels for the ML angle estimator.

Same contract as ``nspradar._pykernels``; see that module for the maths.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport NAN, isnan

cnp.import_array()


cdef inline double _objective(
    const double complex[:, ::1] E,
    const double complex[:, ::1] R,
    const double complex[:, ::1] a_t,
    const double complex[:, ::1] a_r,
    Py_ssize_t g,
    double floor,
) noexcept nogil:
    cdef Py_ssize_t m_r = E.shape[0]
    cdef Py_ssize_t m_t = E.shape[1]
    cdef Py_ssize_t l, k, i, j
    cdef double complex num = 0
    cdef double complex row, acc
    cdef double den = 0.0
    # a_R^H E conj(a_T)
    for l in range(m_r):
        row = 0
        for k in range(m_t):
            row = row + E[l, k] * a_t[g, k].conjugate()
        num = num + a_r[g, l].conjugate() * row
    # a_T^H R^T a_T = sum_ij conj(a_i) R[j, i] a_j
    for i in range(m_t):
        acc = 0
        for j in range(m_t):
            acc = acc + R[j, i] * a_t[g, j]
        den = den + (a_t[g, i].conjugate() * acc).real
    den = den * m_r
    if not den > floor:
        return NAN
    return (num.real * num.real + num.imag * num.imag) / den


def ml_objective_grid(E, R, a_t, a_r, double floor):
    cdef const double complex[:, ::1] E_ = np.ascontiguousarray(E, dtype=np.complex128)
    cdef const double complex[:, ::1] R_ = np.ascontiguousarray(R, dtype=np.complex128)
    cdef const double complex[:, ::1] at_ = np.ascontiguousarray(a_t, dtype=np.complex128)
    cdef const double complex[:, ::1] ar_ = np.ascontiguousarray(a_r, dtype=np.complex128)
    cdef Py_ssize_t n = at_.shape[0], g
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for g in range(n):
            o[g] = _objective(E_, R_, at_, ar_, g, floor)
    return out


def argmax_first(values):
    """Index of the first maximum, ignoring NaN; -1 if every entry is NaN."""
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t best = -1, g
    cdef double bv = 0.0
    for g in range(v.shape[0]):
        if isnan(v[g]):
            continue
        if best < 0 or v[g] > bv:
            best = g
            bv = v[g]
    return best


def ml_argmax(E, R, a_t, a_r, double floor):
    cdef const double complex[:, ::1] E_ = np.ascontiguousarray(E, dtype=np.complex128)
    cdef const double complex[:, ::1] R_ = np.ascontiguousarray(R, dtype=np.complex128)
    cdef const double complex[:, ::1] at_ = np.ascontiguousarray(a_t, dtype=np.complex128)
    cdef const double complex[:, ::1] ar_ = np.ascontiguousarray(a_r, dtype=np.complex128)
    cdef Py_ssize_t n = at_.shape[0], g, best = -1
    cdef double val, bv = 0.0
    with nogil:
        for g in range(n):
            val = _objective(E_, R_, at_, ar_, g, floor)
            if isnan(val):
                continue
            if best < 0 or val > bv:
                best = g
                bv = val
    return best
