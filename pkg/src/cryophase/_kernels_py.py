"""Pure-Python twins of the compiled sweep kernels.

Selected automatically when the extension module is unavailable.  Slow
(interpreted nodewise loops) but bitwise identical to the compiled
sweeps: every expression is evaluated in the same order with the same
IEEE semantics.
"""


def pgs_sweep_1d(beta, rhs, diag, c):
    """One in-place projected sweep; returns the largest nodal change."""
    n = beta.shape[0]
    max_change = 0.0
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


def pgs_sweep_2d(beta, rhs, diag, cx, cy):
    """2D sweep; cx/cy are per-face coupling coefficients."""
    nx, ny = beta.shape
    max_change = 0.0
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
