# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled projected Gauss-Seidel sweep kernels.

Each function is the hot inner loop of one phase step: a lexicographic
in-place sweep that solves the nodal box-constrained equation exactly.
The arithmetic (operand order, guards, clamping) mirrors
``cryophase._kernels_py`` expression for expression so both backends
produce bitwise-identical iterates.
"""


def pgs_sweep_1d(double[::1] beta, const double[::1] rhs,
                 const double[::1] diag, double c):
    """One in-place projected sweep; returns the largest nodal change."""
    cdef Py_ssize_t n = beta.shape[0]
    cdef Py_ssize_t i
    cdef double num, b, change, max_change = 0.0
    for i in range(n):
        num = rhs[i]
        if i > 0:
            num += c * beta[i - 1]
        if i < n - 1:
            num += c * beta[i + 1]
        b = num / diag[i]
        if b < 0.0:
            b = 0.0
        elif b > 1.0:
            b = 1.0
        change = b - beta[i]
        if change < 0.0:
            change = -change
        if change > max_change:
            max_change = change
        beta[i] = b
    return max_change


def pgs_sweep_2d(double[:, ::1] beta, const double[:, ::1] rhs,
                 const double[:, ::1] diag, const double[:, ::1] cx,
                 const double[:, ::1] cy):
    """2D sweep; cx/cy are per-face coupling coefficients."""
    cdef Py_ssize_t nx = beta.shape[0]
    cdef Py_ssize_t ny = beta.shape[1]
    cdef Py_ssize_t i, j
    cdef double num, b, change, max_change = 0.0
    for i in range(nx):
        for j in range(ny):
            num = rhs[i, j]
            if i > 0:
                num += cx[i - 1, j] * beta[i - 1, j]
            if i < nx - 1:
                num += cx[i, j] * beta[i + 1, j]
            if j > 0:
                num += cy[i, j - 1] * beta[i, j - 1]
            if j < ny - 1:
                num += cy[i, j] * beta[i, j + 1]
            b = num / diag[i, j]
            if b < 0.0:
                b = 0.0
            elif b > 1.0:
                b = 1.0
            change = b - beta[i, j]
            if change < 0.0:
                change = -change
            if change > max_change:
                max_change = change
            beta[i, j] = b
    return max_change
