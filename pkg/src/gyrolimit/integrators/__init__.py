"""Full-orbit Lorentz integration, the guiding-center limit system, and the
analytic helix oracle.

Two full-orbit integrators are provided: an adaptive embedded Dormand-Prince
5(4) pair (high accuracy, error-controlled) and the Boris push (fixed step,
exactly norm-preserving velocity rotation, robust at huge gyro frequency).
The guiding system ``xdot = h b(x), hdot = mu0 |B| div(b)`` uses the same
adaptive scheme; its conserved combination ``h^2 + 2 mu0 |B(x)| = |v0|^2`` is
monitored and the drift reported in the trajectory metadata.

Trajectories store accepted steps (decimated to a bounded sample count) and
offer cubic-Hermite dense output with endpoint derivatives recomputed from
the ODE right-hand side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Any

import numpy as np

from ..errors import StepSizeUnderflowError, ZeroFieldError
from ..fields import MagneticField, sample
from . import _kernels
from ._kernels import STATUS_OK, STATUS_UNDERFLOW, STATUS_ZERO_FIELD

__all__ = [
    "ParticleState",
    "GuidingState",
    "Trajectory",
    "boris_step",
    "boris_orbit",
    "integrate_orbit",
    "integrate_guiding",
    "helix_exact",
    "guiding_second_order_residual",
    "write_trajectory_csv",
]

DEFAULT_MAX_SAMPLES = 1 << 19
TOL_FLOOR, TOL_CEIL = 1e-13, 1e-3


@dataclass(frozen=True)
class ParticleState:
    """Full-orbit phase-space point."""

    t: float
    x: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class GuidingState:
    """Limit-system state: position, signed parallel speed, frozen moment."""

    t: float
    x: np.ndarray
    h: float
    mu0: float
    v0_sq: float


@dataclass(frozen=True)
class Trajectory:
    """Stored integration samples with cubic-Hermite dense output.

    ``states`` has 6 columns (x, v) for kind "orbit" and 4 columns (x, h) for
    kind "guiding". Times are strictly increasing and span [0, T].
    """

    kind: str
    field: MagneticField
    times: np.ndarray
    states: np.ndarray
    omega: float | None
    tol: float
    meta: dict[str, Any] = dc_field(default_factory=dict)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def _derivatives(self, idx: np.ndarray) -> np.ndarray:
        pts = self.states[idx, :3]
        out = np.empty((len(idx), self.states.shape[1]))
        if self.kind == "orbit":
            v = self.states[idx, 3:]
            B = self.field.B(pts)
            out[:, :3] = v
            out[:, 3:] = self.omega * np.cross(v, B)
        else:
            mag, b, divb = self.field.guide_many(pts)
            h = self.states[idx, 3]
            out[:, :3] = h[:, None] * b
            out[:, 3] = self.meta["mu0"] * mag * divb
        return out

    def states_at(self, t) -> np.ndarray:
        """Cubic-Hermite interpolation of the state at times ``t`` (shape (m, dim))."""
        tq = np.atleast_1d(np.asarray(t, dtype=float))
        t0, t1 = self.times[0], self.times[-1]
        slack = 1e-9 * max(1.0, abs(t1))
        if tq.min() < t0 - slack or tq.max() > t1 + slack:
            raise ValueError(f"query times outside trajectory span [{t0}, {t1}]")
        tq = np.clip(tq, t0, t1)
        i = np.clip(np.searchsorted(self.times, tq, side="right") - 1, 0, len(self.times) - 2)
        uniq, inv = np.unique(np.concatenate([i, i + 1]), return_inverse=True)
        d = self._derivatives(uniq)
        d0 = d[inv[: len(i)]]
        d1 = d[inv[len(i):]]
        ta, tb = self.times[i], self.times[i + 1]
        dt = tb - ta
        w = ((tq - ta) / dt)[:, None]
        h00 = (1.0 + 2.0 * w) * (1.0 - w) ** 2
        h10 = w * (1.0 - w) ** 2
        h01 = w * w * (3.0 - 2.0 * w)
        h11 = w * w * (w - 1.0)
        return (h00 * self.states[i] + h10 * dt[:, None] * d0
                + h01 * self.states[i + 1] + h11 * dt[:, None] * d1)

    def positions_at(self, t) -> np.ndarray:
        return self.states_at(t)[:, :3]

    def velocities_at(self, t) -> np.ndarray:
        if self.kind != "orbit":
            raise ValueError("velocities_at is only defined for full-orbit trajectories")
        return self.states_at(t)[:, 3:]

    def h_at(self, t) -> np.ndarray:
        if self.kind != "guiding":
            raise ValueError("h_at is only defined for guiding trajectories")
        return self.states_at(t)[:, 3]

    def state_at(self, t: float):
        y = self.states_at(float(t))[0]
        if self.kind == "orbit":
            return ParticleState(t=float(t), x=y[:3], v=y[3:])
        return GuidingState(t=float(t), x=y[:3], h=float(y[3]),
                            mu0=self.meta["mu0"], v0_sq=self.meta["v0_sq"])


def _validate_common(x0, v0, T, tol):
    x0 = np.asarray(x0, dtype=float).reshape(3)
    v0 = np.asarray(v0, dtype=float).reshape(3)
    if not (T > 0):
        raise ValueError("horizon T must be positive")
    if not (TOL_FLOOR < tol < TOL_CEIL):
        raise ValueError(f"tol must lie in ({TOL_FLOOR:g}, {TOL_CEIL:g})")
    return x0, v0


def _alloc(max_samples: int, dim: int):
    if max_samples < 16 or max_samples % 2:
        raise ValueError("max_samples must be an even integer >= 16")
    return np.empty(max_samples + 1), np.empty((max_samples + 1, dim))


def integrate_orbit(field: MagneticField, x0, v0, omega: float, T: float,
                    tol: float, *, h_max: float | None = None,
                    max_samples: int = DEFAULT_MAX_SAMPLES) -> Trajectory:
    """Adaptive DOPRI5(4) integration of the Lorentz system over [0, T].

    Local error per unit step is kept at or below ``tol``. Raises
    StepSizeUnderflowError when the accepted step falls below 1e-14 T
    (omega too large for this tol: raise tol or use the Boris push).
    omega must be positive; a negatively charged particle reduces to this
    case by time reversal.
    """
    x0, v0 = _validate_common(x0, v0, T, tol)
    if not (omega > 0):
        raise ValueError("omega must be positive (omega < 0 reduces to omega > 0 "
                         "by time reversal)")
    sample(field, x0)  # raises ZeroFieldError at a vanishing start point
    ts, ys = _alloc(max_samples, 6)
    aux = np.zeros(18)
    y0 = np.concatenate([x0, v0])
    hm = float(h_max) if h_max is not None else float(T)
    count, status = _kernels.dopri_core(
        0, field.kind_id, field.kernel_params, float(omega), 0.0, 0.0,
        y0, float(T), float(tol), hm, ts, ys, aux)
    if status == STATUS_ZERO_FIELD:
        raise ZeroFieldError("orbit reached a point with |B| < 1e-13")
    if status == STATUS_UNDERFLOW:
        raise StepSizeUnderflowError(t=float(ts[count - 1]), horizon=float(T))
    speed0 = float(np.linalg.norm(v0))
    meta = {
        "n_steps": int(aux[1]),
        "speed_drift": float(aux[0]),
        "rel_speed_drift": float(aux[0]) / speed0 if speed0 > 0 else 0.0,
        "x0": x0.copy(),
        "v0": v0.copy(),
        "integrator": "dopri5",
    }
    return Trajectory(kind="orbit", field=field, times=ts[:count].copy(),
                      states=ys[:count].copy(), omega=float(omega), tol=float(tol),
                      meta=meta)


def integrate_guiding(field: MagneticField, x0, v0, T: float, tol: float, *,
                      max_step: float | None = None,
                      max_samples: int = DEFAULT_MAX_SAMPLES) -> Trajectory:
    """Integrate the zero-order limit system xdot = h b(x), hdot = mu0 |B| div b.

    Initial data follow the limit theory: h(0) = v0 . b(x0) and
    mu0 = (|v0|^2 - h0^2) / (2 |B(x0)|). The conserved combination
    h^2 + 2 mu0 |B(x)| - |v0|^2 is monitored; its maximum drift lands in
    ``meta["invariant_drift"]``. Sign changes of h (bounces) are flagged in
    ``meta["bounce_times"]``.

    ``max_step`` defaults to T/4096 so that dense-output interpolation error
    stays far below the integration tolerance (the guiding system is slow, so
    the extra steps are cheap).
    """
    x0, v0 = _validate_common(x0, v0, T, tol)
    s0 = sample(field, x0)
    base = getattr(s0, "base", s0)
    h0 = float(v0 @ base.b)
    v0_sq = float(v0 @ v0)
    mu0 = (v0_sq - h0 * h0) / (2.0 * base.mag)
    ts, ys = _alloc(max_samples, 4)
    aux = np.zeros(18)
    y0 = np.concatenate([x0, [h0]])
    hm = float(max_step) if max_step is not None else float(T) / 4096.0
    count, status = _kernels.dopri_core(
        1, field.kind_id, field.kernel_params, 0.0, mu0, v0_sq,
        y0, float(T), float(tol), hm, ts, ys, aux)
    if status == STATUS_ZERO_FIELD:
        raise ZeroFieldError("guiding trajectory reached a point with |B| < 1e-13")
    if status == STATUS_UNDERFLOW:
        raise StepSizeUnderflowError(t=float(ts[count - 1]), horizon=float(T))
    n_bounce = int(aux[2])
    meta = {
        "n_steps": int(aux[1]),
        "invariant_drift": float(aux[0]),
        "mu0": mu0,
        "h0": h0,
        "v0_sq": v0_sq,
        "x0": x0.copy(),
        "v0": v0.copy(),
        "bounce_count": n_bounce,
        "bounce_times": aux[3:3 + min(n_bounce, 15)].tolist(),
        "integrator": "dopri5",
    }
    return Trajectory(kind="guiding", field=field, times=ts[:count].copy(),
                      states=ys[:count].copy(), omega=None, tol=float(tol),
                      meta=meta)


def boris_step(s: ParticleState, field: MagneticField, omega: float,
               dt: float) -> ParticleState:
    """One Boris push: drift-rotate-drift; |v| is preserved to roundoff."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    state = np.concatenate([np.asarray(s.x, float), np.asarray(s.v, float)])
    ts = np.empty(3)
    ys = np.empty((3, 6))
    _, status, _ = _kernels.boris_run(
        field.kind_id, field.kernel_params, float(omega), state, float(dt),
        1, 1, ts, ys)
    if status == STATUS_ZERO_FIELD:
        raise ZeroFieldError("|B| < 1e-13 at the Boris half-step position")
    return ParticleState(t=s.t + dt, x=state[:3].copy(), v=state[3:].copy())


def boris_orbit(field: MagneticField, x0, v0, omega: float, dt: float,
                n_steps: int, *, record_every: int | None = None) -> Trajectory:
    """Fixed-step Boris integration of n_steps pushes.

    ``meta["rel_speed_drift"]`` carries max_t | |v(t)| - |v0| | / |v0|.
    """
    if dt <= 0 or n_steps < 1:
        raise ValueError("dt must be positive and n_steps >= 1")
    x0 = np.asarray(x0, dtype=float).reshape(3)
    v0 = np.asarray(v0, dtype=float).reshape(3)
    if record_every is None:
        record_every = max(1, int(math.ceil(n_steps / DEFAULT_MAX_SAMPLES)))
    state = np.concatenate([x0, v0])
    n_rec = n_steps // record_every + 3
    ts = np.empty(n_rec)
    ys = np.empty((n_rec, 6))
    count, status, max_dev = _kernels.boris_run(
        field.kind_id, field.kernel_params, float(omega), state, float(dt),
        int(n_steps), int(record_every), ts, ys)
    if status == STATUS_ZERO_FIELD:
        raise ZeroFieldError("|B| < 1e-13 along the Boris orbit")
    speed0 = float(np.linalg.norm(v0))
    meta = {
        "n_steps": int(n_steps),
        "speed_drift": float(max_dev),
        "rel_speed_drift": float(max_dev) / speed0 if speed0 > 0 else 0.0,
        "x0": x0.copy(),
        "v0": v0.copy(),
        "integrator": "boris",
        "dt": float(dt),
    }
    return Trajectory(kind="orbit", field=field, times=ts[:count].copy(),
                      states=ys[:count].copy(), omega=float(omega),
                      tol=float("nan"), meta=meta)


def helix_exact(x0, v0, omega: float, t) -> np.ndarray:
    """Closed-form orbit in the uniform field B = (0, 0, 1).

    Returns the position at time(s) t; shape (3,) for scalar t, else (m, 3).
    Valid for any omega != 0 (either charge sign).
    """
    if omega == 0:
        raise ValueError("helix_exact requires omega != 0")
    x0 = np.asarray(x0, dtype=float).reshape(3)
    v0 = np.asarray(v0, dtype=float).reshape(3)
    tt = np.asarray(t, dtype=float)
    single = tt.ndim == 0
    tt = np.atleast_1d(tt)
    s, c = np.sin(omega * tt), np.cos(omega * tt)
    out = np.empty((len(tt), 3))
    out[:, 0] = x0[0] + (v0[1] + v0[0] * s - v0[1] * c) / omega
    out[:, 1] = x0[1] + (-v0[0] + v0[0] * c + v0[1] * s) / omega
    out[:, 2] = x0[2] + tt * v0[2]
    return out[0] if single else out


def guiding_second_order_residual(field: MagneticField, traj: Trajectory, *,
                                  n_check: int = 257,
                                  delta: float | None = None) -> float:
    """Max defect of the limit trajectory against its second-order ODE.

    Reconstructs xddot by fourth-order central differencing of the dense
    output of xdot = h b(x) and compares with
    mu0 |B| div(b) b + (|v0|^2 - 2 mu0 |B|) Db . b.
    """
    if traj.kind != "guiding":
        raise ValueError("expected a guiding trajectory")
    T = traj.horizon
    mu0 = traj.meta["mu0"]
    v0_sq = traj.meta["v0_sq"]
    d = delta if delta is not None else T / 2048.0
    tq = np.linspace(2.0 * d, T - 2.0 * d, n_check)

    def xdot(times):
        st = traj.states_at(times)
        _, b, _ = field.guide_many(st[:, :3])
        return st[:, 3][:, None] * b

    xdd = (-xdot(tq + 2 * d) + 8.0 * xdot(tq + d)
           - 8.0 * xdot(tq - d) + xdot(tq - 2 * d)) / (12.0 * d)

    pts = traj.positions_at(tq)
    fr = field._frame(pts)
    mag, b, divb, jac_b = fr["mag"], fr["b"], fr["div_b"], fr["jac_b"]
    rhs = (mu0 * mag * divb)[:, None] * b \
        + (v0_sq - 2.0 * mu0 * mag)[:, None] * np.einsum("nij,nj->ni", jac_b, b)
    return float(np.max(np.abs(xdd - rhs)))


def write_trajectory_csv(traj: Trajectory, path, *, n_rows: int | None = None) -> None:
    """Write t,x1,x2,x3,v1,v2,v3 (orbit) or t,x1,x2,x3,h (guiding) rows.

    ``n_rows`` resamples the dense output on a uniform grid; None dumps the
    stored samples. Floats carry 17 significant digits, lines end with LF.
    """
    if n_rows is None:
        times, states = traj.times, traj.states
    else:
        times = np.linspace(traj.times[0], traj.horizon, n_rows)
        states = traj.states_at(times)
    header = ("t,x1,x2,x3,v1,v2,v3" if traj.kind == "orbit" else "t,x1,x2,x3,h")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for t, row in zip(times, states):
            cols = [t, *row]
            fh.write(",".join(f"{c:.17g}" for c in cols) + "\n")
