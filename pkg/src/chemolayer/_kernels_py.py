"""NumPy/SciPy fallback with the same signatures as the compiled ``_kernels``."""

import numpy as np
from scipy.linalg import solve_banded
from scipy.sparse import diags
from scipy.sparse.linalg import splu


def _banded(lower, diag, upper):
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return ab


def thomas_solve(lower, diag, upper, rhs):
    """Solve a tridiagonal system; ``lower[0]`` and ``upper[-1]`` are ignored."""
    lower = np.asarray(lower, dtype=float)
    diag = np.asarray(diag, dtype=float)
    upper = np.asarray(upper, dtype=float)
    return solve_banded((1, 1), _banded(lower, diag, upper), np.asarray(rhs, dtype=float),
                        check_finite=False)


def monotone_iterate(lower, diag, upper, boundary_term, coef, shift, psi_init, tol, max_iters):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    shifted = np.asarray(diag, dtype=float) - coef * shift
    n = shifted.size
    lu = splu(diags([lower[1:], shifted, upper[:-1]], [-1, 0, 1], format="csc"))
    psi = np.array(psi_init, dtype=float, copy=True)
    diff = 0.0
    it = 0
    while it < max_iters:
        rhs = coef * (psi * np.exp(psi) - shift * psi)
        rhs[n - 1] -= boundary_term
        new = lu.solve(rhs)
        diff = float(np.max(np.abs(new - psi)))
        psi = new
        it += 1
        if diff <= tol:
            break
    return psi, it, diff
