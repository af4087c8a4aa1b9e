"""Compiled cores: Boris push and adaptive Dormand-Prince 5(4) integrators.

Both trajectory integrators store accepted steps into caller-provided buffers
with stride-doubling decimation: when the buffer fills, every other stored
sample is dropped and the recording stride doubles, so the kept samples stay
uniformly spaced in step index and the memory stays bounded. The final state
is always appended (buffers carry one spare slot).

Status codes returned by the cores: 0 ok, 1 step-size underflow, 2 zero field.
"""
from __future__ import annotations

import math

import numpy as np

from .._backend import compile_kernel
from ..fields._kernels import field_b, guide_quantities, ZERO_FIELD_MAG

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_ZERO_FIELD = 2

# Dormand-Prince 5(4) tableau
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
# fifth-order minus embedded fourth-order weights (error estimator)
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

_MIN_H_FRACTION = 1e-14  # of the horizon; below this the step has underflowed


def _orbit_rhs(kind, par, omega, y, out):
    bx, by, bz = field_b(kind, par, y[0], y[1], y[2])
    if bx * bx + by * by + bz * bz < ZERO_FIELD_MAG * ZERO_FIELD_MAG:
        return STATUS_ZERO_FIELD
    out[0] = y[3]
    out[1] = y[4]
    out[2] = y[5]
    out[3] = omega * (y[4] * bz - y[5] * by)
    out[4] = omega * (y[5] * bx - y[3] * bz)
    out[5] = omega * (y[3] * by - y[4] * bx)
    return STATUS_OK


orbit_rhs = compile_kernel(_orbit_rhs)


def _guiding_rhs(kind, par, mu0, y, out):
    mag, ux, uy, uz, divb = guide_quantities(kind, par, y[0], y[1], y[2])
    if mag < ZERO_FIELD_MAG:
        return STATUS_ZERO_FIELD
    h = y[3]
    out[0] = h * ux
    out[1] = h * uy
    out[2] = h * uz
    out[3] = mu0 * mag * divb
    return STATUS_OK


guiding_rhs = compile_kernel(_guiding_rhs)


def _dopri_core(system, kind, par, omega, mu0, v0_sq, y0, t_end, tol, h_max,
                ts, ys, aux):
    """Shared adaptive DOPRI5 loop for both first-order systems.

    system 0: full orbit, state (x, v), dim 6.
    system 1: guiding center, state (x, h), dim 4; omega unused.

    ``aux`` (length >= 18) receives monitor data:
      aux[0] = max |speed - speed0| (orbit) or max invariant defect (guiding)
      aux[1] = accepted step count
      aux[2] = bounce count (guiding)
      aux[3:3+15] = first bounce times (guiding)
    """
    dim = 6 if system == 0 else 4
    cap = ts.shape[0] - 1  # one spare slot for the final state
    y = y0.copy()
    k = np.empty((7, dim))
    ytmp = np.empty(dim)
    ynew = np.empty(dim)

    if system == 0:
        st = orbit_rhs(kind, par, omega, y, k[0])
    else:
        st = guiding_rhs(kind, par, mu0, y, k[0])
    if st != STATUS_OK:
        return 0, st

    # conserved-quantity reference
    if system == 0:
        speed0 = math.sqrt(y[3] * y[3] + y[4] * y[4] + y[5] * y[5])
    else:
        speed0 = 0.0
    max_dev = 0.0
    h_prev_sign = y[3]

    # initial step guess from the fastest local frequency
    mag0, _, _, _, _ = guide_quantities(kind, par, y[0], y[1], y[2])
    freq = omega * mag0 if system == 0 else abs(y[3])
    if freq < 1.0:
        freq = 1.0
    h = 1e-2 / freq
    if h > h_max:
        h = h_max
    if h > t_end:
        h = t_end

    t = 0.0
    ts[0] = 0.0
    for j in range(dim):
        ys[0, j] = y[j]
    count = 1
    stride = 1
    step_idx = 0
    n_accepted = 0
    n_bounce = 0
    h_min = _MIN_H_FRACTION * t_end
    status = STATUS_OK

    while True:
        gap = t_end - t
        if gap <= h_min:
            break  # horizon reached (within snap tolerance)
        if h < h_min:
            status = STATUS_UNDERFLOW
            break
        if h > gap:
            h = gap

        # stages 2..6
        for j in range(dim):
            ytmp[j] = y[j] + h * _A21 * k[0, j]
        if system == 0:
            st = orbit_rhs(kind, par, omega, ytmp, k[1])
        else:
            st = guiding_rhs(kind, par, mu0, ytmp, k[1])
        if st != STATUS_OK:
            status = st
            break
        for j in range(dim):
            ytmp[j] = y[j] + h * (_A31 * k[0, j] + _A32 * k[1, j])
        if system == 0:
            st = orbit_rhs(kind, par, omega, ytmp, k[2])
        else:
            st = guiding_rhs(kind, par, mu0, ytmp, k[2])
        if st != STATUS_OK:
            status = st
            break
        for j in range(dim):
            ytmp[j] = y[j] + h * (_A41 * k[0, j] + _A42 * k[1, j] + _A43 * k[2, j])
        if system == 0:
            st = orbit_rhs(kind, par, omega, ytmp, k[3])
        else:
            st = guiding_rhs(kind, par, mu0, ytmp, k[3])
        if st != STATUS_OK:
            status = st
            break
        for j in range(dim):
            ytmp[j] = y[j] + h * (_A51 * k[0, j] + _A52 * k[1, j]
                                  + _A53 * k[2, j] + _A54 * k[3, j])
        if system == 0:
            st = orbit_rhs(kind, par, omega, ytmp, k[4])
        else:
            st = guiding_rhs(kind, par, mu0, ytmp, k[4])
        if st != STATUS_OK:
            status = st
            break
        for j in range(dim):
            ytmp[j] = y[j] + h * (_A61 * k[0, j] + _A62 * k[1, j] + _A63 * k[2, j]
                                  + _A64 * k[3, j] + _A65 * k[4, j])
        if system == 0:
            st = orbit_rhs(kind, par, omega, ytmp, k[5])
        else:
            st = guiding_rhs(kind, par, mu0, ytmp, k[5])
        if st != STATUS_OK:
            status = st
            break

        # fifth-order solution and its derivative (FSAL stage 7)
        for j in range(dim):
            ynew[j] = y[j] + h * (_B1 * k[0, j] + _B3 * k[2, j] + _B4 * k[3, j]
                                  + _B5 * k[4, j] + _B6 * k[5, j])
        if system == 0:
            st = orbit_rhs(kind, par, omega, ynew, k[6])
        else:
            st = guiding_rhs(kind, par, mu0, ynew, k[6])
        if st != STATUS_OK:
            status = st
            break

        # error per unit step, scaled per component by 1 + |y|
        err = 0.0
        for j in range(dim):
            e = h * (_E1 * k[0, j] + _E3 * k[2, j] + _E4 * k[3, j]
                     + _E5 * k[4, j] + _E6 * k[5, j] + _E7 * k[6, j])
            sc = 1.0 + abs(ynew[j])
            r = abs(e) / sc
            if r > err:
                err = r
        ratio = err / (tol * h)

        if ratio <= 1.0 and not math.isnan(ratio):
            # accept
            t += h
            for j in range(dim):
                y[j] = ynew[j]
                k[0, j] = k[6, j]  # FSAL
            n_accepted += 1
            step_idx += 1

            if system == 0:
                sp = math.sqrt(y[3] * y[3] + y[4] * y[4] + y[5] * y[5])
                dev = abs(sp - speed0)
                if dev > max_dev:
                    max_dev = dev
            else:
                mag, _, _, _, _ = guide_quantities(kind, par, y[0], y[1], y[2])
                dev = abs(y[3] * y[3] + 2.0 * mu0 * mag - v0_sq)
                if dev > max_dev:
                    max_dev = dev
                if y[3] * h_prev_sign < 0.0:
                    if n_bounce < 15:
                        aux[3 + n_bounce] = t
                    n_bounce += 1
                if y[3] != 0.0:
                    h_prev_sign = y[3]

            if step_idx % stride == 0:
                if count >= cap:
                    keep = count // 2
                    for i in range(keep):
                        ts[i] = ts[2 * i]
                        for j in range(dim):
                            ys[i, j] = ys[2 * i, j]
                    count = keep
                    stride *= 2
                if step_idx % stride == 0:
                    ts[count] = t
                    for j in range(dim):
                        ys[count, j] = y[j]
                    count += 1

        # step-size controller (error per unit step, order-5 exponent)
        if err == 0.0 or ratio == 0.0:
            fac = 5.0
        elif math.isnan(ratio):
            fac = 0.2
        else:
            fac = 0.9 * ratio ** -0.2
            if fac > 5.0:
                fac = 5.0
            elif fac < 0.2:
                fac = 0.2
        h *= fac
        if h > h_max:
            h = h_max

    if status == STATUS_OK and ts[count - 1] < t_end:
        ts[count] = t_end
        for j in range(dim):
            ys[count, j] = y[j]
        count += 1

    aux[0] = max_dev
    aux[1] = float(n_accepted)
    aux[2] = float(n_bounce)
    return count, status


dopri_core = compile_kernel(_dopri_core)


def _boris_run(kind, par, omega, state, dt, n_steps, record_every, ts, ys):
    """Fixed-step Boris push of the Lorentz system.

    ``state`` is the 6-component (x, v) array, updated in place. Samples are
    stored every ``record_every`` steps (plus initial and final states).
    Returns (count, status, max |speed - speed0|).
    """
    x0, x1, x2 = state[0], state[1], state[2]
    v0, v1, v2 = state[3], state[4], state[5]
    speed0 = math.sqrt(v0 * v0 + v1 * v1 + v2 * v2)
    max_dev = 0.0
    half = 0.5 * dt
    wh = 0.5 * dt * omega

    ts[0] = 0.0
    ys[0, 0], ys[0, 1], ys[0, 2] = x0, x1, x2
    ys[0, 3], ys[0, 4], ys[0, 5] = v0, v1, v2
    count = 1
    status = STATUS_OK

    for n in range(n_steps):
        # half drift
        x0 += half * v0
        x1 += half * v1
        x2 += half * v2
        bx, by, bz = field_b(kind, par, x0, x1, x2)
        if bx * bx + by * by + bz * bz < ZERO_FIELD_MAG * ZERO_FIELD_MAG:
            status = STATUS_ZERO_FIELD
            break
        # rotation: t = (omega dt/2) B, s = 2t/(1+|t|^2)
        tx, ty, tz = wh * bx, wh * by, wh * bz
        t2 = tx * tx + ty * ty + tz * tz
        f = 2.0 / (1.0 + t2)
        sx, sy, sz = f * tx, f * ty, f * tz
        px = v0 + (v1 * tz - v2 * ty)
        py = v1 + (v2 * tx - v0 * tz)
        pz = v2 + (v0 * ty - v1 * tx)
        v0 += py * sz - pz * sy
        v1 += pz * sx - px * sz
        v2 += px * sy - py * sx
        # half drift
        x0 += half * v0
        x1 += half * v1
        x2 += half * v2

        dev = abs(math.sqrt(v0 * v0 + v1 * v1 + v2 * v2) - speed0)
        if dev > max_dev:
            max_dev = dev
        if (n + 1) % record_every == 0 or n == n_steps - 1:
            ts[count] = (n + 1) * dt
            ys[count, 0], ys[count, 1], ys[count, 2] = x0, x1, x2
            ys[count, 3], ys[count, 4], ys[count, 5] = v0, v1, v2
            count += 1

    state[0], state[1], state[2] = x0, x1, x2
    state[3], state[4], state[5] = v0, v1, v2
    return count, status, max_dev


boris_run = compile_kernel(_boris_run)
