# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tridiagonal kernels: Thomas solve and the monotone iteration loop."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs

cnp.import_array()


cdef void _factor(const double[::1] lower, const double[::1] diag, const double[::1] upper,
                  double[::1] cp, double[::1] dp_inv, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double denom = diag[0]
    dp_inv[0] = 1.0 / denom
    cp[0] = upper[0] * dp_inv[0]
    for i in range(1, n):
        denom = diag[i] - lower[i] * cp[i - 1]
        dp_inv[i] = 1.0 / denom
        cp[i] = upper[i] * dp_inv[i]


cdef void _solve_factored(const double[::1] lower, const double[::1] cp, const double[::1] dp_inv,
                          const double[::1] rhs, double[::1] x, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    x[0] = rhs[0] * dp_inv[0]
    for i in range(1, n):
        x[i] = (rhs[i] - lower[i] * x[i - 1]) * dp_inv[i]
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]


def thomas_solve(lower, diag, upper, rhs):
    """Solve a tridiagonal system; ``lower[0]`` and ``upper[-1]`` are ignored."""
    cdef const double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef const double[::1] di = np.ascontiguousarray(diag, dtype=np.float64)
    cdef const double[::1] up = np.ascontiguousarray(upper, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t n = di.shape[0]
    out = np.empty(n)
    cp_arr = np.empty(n)
    dp_arr = np.empty(n)
    cdef double[::1] x = out
    cdef double[::1] cp = cp_arr
    cdef double[::1] dp_inv = dp_arr
    with nogil:
        _factor(lo, di, up, cp, dp_inv, n)
        _solve_factored(lo, cp, dp_inv, b, x, n)
    return out


def monotone_iterate(lower, diag, upper, double boundary_term, double coef, double shift,
                     psi_init, double tol, int max_iters):
    """Monotone sweeps for ``A psi + boundary_term e_last = coef * f(psi)``.

    Each sweep solves ``(A - coef*shift) psi_new = coef*(f(psi) - shift*psi) - b``
    with the factorisation computed once.  Returns ``(psi, sweeps, last_diff)``.
    """
    cdef const double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef const double[::1] up = np.ascontiguousarray(upper, dtype=np.float64)
    cdef Py_ssize_t n = lo.shape[0]
    shifted_arr = np.ascontiguousarray(diag, dtype=np.float64) - coef * shift
    cdef const double[::1] di = shifted_arr
    psi_arr = np.array(psi_init, dtype=np.float64, copy=True)
    new_arr = np.empty(n)
    rhs_arr = np.empty(n)
    cp_arr = np.empty(n)
    dp_arr = np.empty(n)
    cdef double[::1] psi = psi_arr
    cdef double[::1] new = new_arr
    cdef double[::1] rhs = rhs_arr
    cdef double[::1] cp = cp_arr
    cdef double[::1] dp_inv = dp_arr
    cdef Py_ssize_t i
    cdef int it = 0
    cdef double diff = 0.0, d, p
    with nogil:
        _factor(lo, di, up, cp, dp_inv, n)
        while it < max_iters:
            for i in range(n):
                p = psi[i]
                rhs[i] = coef * (p * exp(p) - shift * p)
            rhs[n - 1] -= boundary_term
            _solve_factored(lo, cp, dp_inv, rhs, new, n)
            diff = 0.0
            for i in range(n):
                d = fabs(new[i] - psi[i])
                if d > diff:
                    diff = d
                psi[i] = new[i]
            it += 1
            if diff <= tol:
                break
    return psi_arr, it, diff
