"""Backend selection for the tridiagonal kernels.

The compiled extension is used when it imports; otherwise the NumPy/SciPy
fallback takes over.  Set ``CHEMOLAYER_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

_compiled = None
if os.environ.get("CHEMOLAYER_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

_active = _compiled if _compiled is not None else _kernels_py
BACKEND = "cython" if _compiled is not None else "python"


def available_backends():
    return ["cython", "python"] if _compiled is not None else ["python"]


def get_backend(name=None):
    """Kernel module by name; ``None`` returns the active one."""
    if name is None:
        return _active
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def thomas_solve(lower, diag, upper, rhs):
    return _active.thomas_solve(lower, diag, upper, rhs)


def monotone_iterate(lower, diag, upper, boundary_term, coef, shift, psi_init, tol, max_iters):
    return _active.monotone_iterate(lower, diag, upper, boundary_term, coef, shift,
                                    psi_init, tol, max_iters)
