"""Simpson-based quadrature helpers.

The displacement diagnostics need a cumulative integral along dense output
(composite local-quadratic rule with grid-doubling convergence control) and
several analysis checks need a plain adaptive Simpson; scipy's Gauss-Kronrod
``quad`` serves as the independent cross-check where a contract demands two
routes.
"""
from __future__ import annotations

import numpy as np


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10,
                     max_depth: int = 48) -> float:
    """Recursive adaptive Simpson integral of a scalar callable on [a, b]."""
    if a == b:
        return 0.0

    def simp(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, eps, depth):
        xm = 0.5 * (x0 + x2)
        xl = 0.5 * (x0 + xm)
        xr = 0.5 * (xm + x2)
        fl, fr = f(xl), f(xr)
        left = simp(x0, xm, f0, fl, f1)
        right = simp(xm, x2, f1, fr, f2)
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return (recurse(x0, xm, f0, fl, f1, left, eps / 2.0, depth + 1)
                + recurse(xm, x2, f1, fr, f2, right, eps / 2.0, depth + 1))

    fa, fb = f(a), f(b)
    fm = f(0.5 * (a + b))
    whole = simp(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, 0)


def composite_simpson(values: np.ndarray, dx: float) -> float:
    """Composite Simpson on uniformly spaced samples (odd count required)."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < 3 or n % 2 == 0:
        raise ValueError("composite Simpson needs an odd number of samples >= 3")
    return float(dx / 3.0 * (values[0] + values[-1]
                             + 4.0 * values[1:-1:2].sum()
                             + 2.0 * values[2:-1:2].sum()))


def cumulative_quadratic(values: np.ndarray, dx: float) -> np.ndarray:
    """Cumulative integral at every node of a uniform grid.

    Each segment [x_j, x_{j+1}] is integrated with the quadratic through the
    three nearest nodes (both fits averaged on interior segments); locally
    O(dx^4), so the cumulative values converge like O(dx^3) under refinement.
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n < 3:
        raise ValueError("need at least 3 samples")
    # quadratic through (j-1, j, j+1) integrated over [x_j, x_{j+1}]
    via_left = dx / 12.0 * (-v[:-2] + 8.0 * v[1:-1] + 5.0 * v[2:])
    # quadratic through (j, j+1, j+2) integrated over [x_j, x_{j+1}]
    via_right = dx / 12.0 * (5.0 * v[:-2] + 8.0 * v[1:-1] - v[2:])
    seg = np.empty(n - 1)
    seg[0] = via_right[0]
    seg[-1] = via_left[-1]
    if n > 3:
        # interior segment j has two covering fits: via_left[j-1] and via_right[j]
        seg[1:-1] = 0.5 * (via_left[:-1] + via_right[1:])
    out = np.empty(n)
    out[0] = 0.0
    np.cumsum(seg, out=out[1:])
    return out
