"""Scalar field-evaluation kernels used inside the compiled integrator loops.

Each built-in field carries a small integer id so the integrators can switch
on it inside a jitted loop; parameters travel in a fixed-width float array
(see ``N_PARAMS``). The vectorised NumPy closed forms used for sampling and
diagnostics live in :mod:`gyrolimit.fields`; tests cross-check the two.

Parameter layout by kind:

* ``KIND_UNIFORM``:         ``[b0x, b0y, b0z, -, -, -]``
* ``KIND_BUMP_COLUMN``:     ``[a0, -, -, -, -, -]``
* ``KIND_SCREW_PINCH``:     ``[c, bz, -, -, -, -]``
* ``KIND_PERTURBED_PINCH``: ``[c, bz, eps, -, -, -]``
"""
from __future__ import annotations

import math

from .._backend import compile_kernel

KIND_UNIFORM = 0
KIND_BUMP_COLUMN = 1
KIND_SCREW_PINCH = 2
KIND_PERTURBED_PINCH = 3

N_PARAMS = 6

# |B| below this is treated as a vanishing field (spec: fields are nowhere zero).
ZERO_FIELD_MAG = 1e-13


def _bump_value(a0, s):
    # smooth bump a0*exp(-1/(1-s)) on s<1, identically 0 outside
    if s >= 1.0:
        return 0.0
    return a0 * math.exp(-1.0 / (1.0 - s))


bump_value = compile_kernel(_bump_value)


def _bump_slope(a0, s):
    # d/ds of the bump; equals -f(s)/(1-s)^2
    if s >= 1.0:
        return 0.0
    q = 1.0 - s
    return -a0 * math.exp(-1.0 / q) / (q * q)


bump_slope = compile_kernel(_bump_slope)


def _field_b(kind, par, x, y, z):
    """Magnetic field components at (x, y, z)."""
    if kind == KIND_UNIFORM:
        return par[0], par[1], par[2]
    if kind == KIND_BUMP_COLUMN:
        s = x * x + y * y
        return -y, x, bump_value(par[0], s)
    if kind == KIND_SCREW_PINCH:
        g = par[0] / (1.0 + x * x + y * y)
        return -y * g, x * g, par[1]
    # KIND_PERTURBED_PINCH
    g = par[0] * (1.0 + par[2] * math.sin(z)) / (1.0 + x * x + y * y)
    return -y * g, x * g, par[1]


field_b = compile_kernel(_field_b)


def _field_jac(kind, par, x, y, z):
    """Row-major Jacobian dB_i/dx_j at (x, y, z), returned as 9 scalars."""
    if kind == KIND_UNIFORM:
        return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    if kind == KIND_BUMP_COLUMN:
        s = x * x + y * y
        fp = bump_slope(par[0], s)
        return (0.0, -1.0, 0.0,
                1.0, 0.0, 0.0,
                2.0 * x * fp, 2.0 * y * fp, 0.0)
    if kind == KIND_SCREW_PINCH:
        q = 1.0 + x * x + y * y
        g = par[0] / q
        gq = 2.0 * g / q
        return (x * y * gq, -g + y * y * gq, 0.0,
                g - x * x * gq, -x * y * gq, 0.0,
                0.0, 0.0, 0.0)
    # KIND_PERTURBED_PINCH
    q = 1.0 + x * x + y * y
    mod = 1.0 + par[2] * math.sin(z)
    g = par[0] * mod / q
    gq = 2.0 * g / q
    gz = par[0] * par[2] * math.cos(z) / q
    return (x * y * gq, -g + y * y * gq, -y * gz,
            g - x * x * gq, -x * y * gq, x * gz,
            0.0, 0.0, 0.0)


field_jac = compile_kernel(_field_jac)


def _guide_quantities(kind, par, x, y, z):
    """(|B|, b_x, b_y, b_z, div b) at a point.

    All built-ins are divergence free, so div b = B . grad(|B|^-1)
    = -(B . (DB^T B)) / |B|^3.
    """
    bx, by, bz = field_b(kind, par, x, y, z)
    mag2 = bx * bx + by * by + bz * bz
    mag = math.sqrt(mag2)
    if mag < ZERO_FIELD_MAG:
        return 0.0, 0.0, 0.0, 0.0, 0.0
    (j00, j01, j02,
     j10, j11, j12,
     j20, j21, j22) = field_jac(kind, par, x, y, z)
    # w_j = sum_i B_i dB_i/dx_j
    w0 = bx * j00 + by * j10 + bz * j20
    w1 = bx * j01 + by * j11 + bz * j21
    w2 = bx * j02 + by * j12 + bz * j22
    divb = -(bx * w0 + by * w1 + bz * w2) / (mag2 * mag)
    return mag, bx / mag, by / mag, bz / mag, divb


guide_quantities = compile_kernel(_guide_quantities)
