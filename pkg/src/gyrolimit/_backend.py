"""Kernel backend selection: numba-compiled by default, pure NumPy on request.

The hot inner loops (Boris push, adaptive Runge-Kutta cores, per-point field
evaluation) are written once as plain scalar/array Python and compiled with
``numba.njit`` when available. Setting the environment variable
``GYROLIMIT_BACKEND=numpy`` (or ``python``) skips compilation and runs the
identical code paths uncompiled; ``GYROLIMIT_BACKEND=numba`` makes a missing
numba an error. The choice is fixed at import time.

Compiled kernels keep the original Python function reachable via their
``py_func`` attribute, which the benchmark uses to time both paths in one
process.
"""
from __future__ import annotations

import os

_choice = os.environ.get("GYROLIMIT_BACKEND", "auto").strip().lower()

if _choice in ("", "auto", "numba"):
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:
        if _choice == "numba":
            raise
        NUMBA_ENABLED = False
elif _choice in ("numpy", "python"):
    NUMBA_ENABLED = False
else:
    raise ValueError(
        f"unrecognised GYROLIMIT_BACKEND={_choice!r}; expected 'numba' or 'numpy'"
    )

BACKEND = "numba" if NUMBA_ENABLED else "numpy"


def compile_kernel(func):
    """Return ``func`` njit-compiled (nogil, cached) or unchanged on numpy."""
    if NUMBA_ENABLED:
        return _njit(cache=True, nogil=True)(func)
    return func
