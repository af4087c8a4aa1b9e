"""Analytic magnetic fields with exact derivatives and derived local data.

Built-in fields (all defined on all of R^3, nowhere vanishing, div-free):

* uniform field ``B(x) = b0``
* bump column ``B = (-y, x, f(x^2+y^2))`` with a smooth compactly supported bump
* screw pinch ``B_theta = c r/(1+r^2), B_z = const`` with pressure
  ``p = p_c - c^2/(2(1+r^2)^2)`` satisfying ``B x curl(B) = grad p`` (note the
  sign convention: this is the negative of the usual J x B = grad p form)
* perturbed pinch: screw pinch with z-modulated azimuthal strength; still
  div-free but *not* force balanced (test field with |B| varying along B)

Derivatives are hand-derived closed forms; :func:`fd_check` guards them
against central finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Any

import numpy as np

from ..errors import ZeroFieldError
from . import _kernels
from ._kernels import (
    KIND_BUMP_COLUMN,
    KIND_PERTURBED_PINCH,
    KIND_SCREW_PINCH,
    KIND_UNIFORM,
    N_PARAMS,
    ZERO_FIELD_MAG,
)

__all__ = [
    "GrowthSpec",
    "FieldSample",
    "EquilibriumSample",
    "MagneticField",
    "UniformField",
    "BumpColumnField",
    "ScrewPinchField",
    "PerturbedPinchField",
    "uniform_field",
    "bump_column_field",
    "screw_pinch_equilibrium",
    "perturbed_pinch_field",
    "sample",
    "fd_check",
    "FDCheckReport",
    "field_from_config",
    "builtin_fields",
]


@dataclass(frozen=True)
class GrowthSpec:
    """Minimal-growth-at-infinity metadata: C/|y|^gamma <= |B(y)| for |y| >= R."""

    gamma: float
    radius: float
    const: float

    def __post_init__(self):
        if self.gamma < 0 or self.radius <= 0 or self.const <= 0:
            raise ValueError("GrowthSpec requires gamma >= 0, radius > 0, const > 0")


@dataclass(frozen=True)
class FieldSample:
    """All local field quantities at one point (analytic, no finite differences)."""

    B: np.ndarray            # field vector
    mag: float               # |B|
    b: np.ndarray            # unit vector B/|B|
    jac_B: np.ndarray        # 3x3, dB_i/dx_j
    jac_b: np.ndarray        # 3x3, db_i/dx_j
    div_b: float
    curl_b: np.ndarray
    grad_inv_mag: np.ndarray  # grad(|B|^-1)


@dataclass(frozen=True)
class EquilibriumSample:
    """FieldSample extended with pressure data and curl(B)."""

    base: FieldSample
    p: float
    grad_p: np.ndarray
    hess_p: np.ndarray
    curl_B: np.ndarray


def _as_points(x) -> tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        return pts[None, :], True
    return pts, False


class MagneticField:
    """Base class: vectorised closed forms plus kernel (kind, params) handles.

    Immutable after construction; every method is a pure function of
    (field, points) and safe for concurrent readers.
    """

    kind: str = "base"
    kind_id: int = -1
    has_pressure: bool = False
    is_equilibrium: bool = False
    domain_r: tuple[float, float] | None = None

    def __init__(self, growth: GrowthSpec):
        self.growth = growth
        self.kernel_params = np.zeros(N_PARAMS)

    # -- per-class closed forms ------------------------------------------
    def _b_many(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _jac_many(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- public evaluation -------------------------------------------------
    def B(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        out = self._b_many(pts)
        return out[0] if single else out

    def jac_B(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        out = self._jac_many(pts)
        return out[0] if single else out

    def mag(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        out = np.linalg.norm(self._b_many(pts), axis=1)
        return out[0] if single else out

    def unit(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        B = self._b_many(pts)
        out = B / np.linalg.norm(B, axis=1)[:, None]
        return out[0] if single else out

    def grad_inv_mag(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        out = self._frame(pts)["grad_inv_mag"]
        return out[0] if single else out

    def guide_many(self, pts: np.ndarray):
        """(|B|, b, div b) at many points, for the guiding dense output."""
        fr = self._frame(np.asarray(pts, dtype=float))
        return fr["mag"], fr["b"], fr["div_b"]

    def _frame(self, pts: np.ndarray) -> dict[str, np.ndarray]:
        """All derived local quantities at many points."""
        B = self._b_many(pts)
        jac = self._jac_many(pts)
        mag = np.linalg.norm(B, axis=1)
        b = B / mag[:, None]
        # grad|B|_j = sum_i B_i dB_i/dx_j / |B|
        grad_mag = np.einsum("ni,nij->nj", B, jac) / mag[:, None]
        grad_inv_mag = -grad_mag / (mag ** 2)[:, None]
        # Db = DB/|B| + grad(|B|^-1) B^T  (paper's product-rule composition)
        jac_b = jac / mag[:, None, None] + B[:, :, None] * grad_inv_mag[:, None, :]
        div_b = np.trace(jac_b, axis1=1, axis2=2)
        curl_b = np.stack(
            [
                jac_b[:, 2, 1] - jac_b[:, 1, 2],
                jac_b[:, 0, 2] - jac_b[:, 2, 0],
                jac_b[:, 1, 0] - jac_b[:, 0, 1],
            ],
            axis=1,
        )
        curl_B = np.stack(
            [
                jac[:, 2, 1] - jac[:, 1, 2],
                jac[:, 0, 2] - jac[:, 2, 0],
                jac[:, 1, 0] - jac[:, 0, 1],
            ],
            axis=1,
        )
        return {
            "B": B,
            "mag": mag,
            "b": b,
            "jac_B": jac,
            "jac_b": jac_b,
            "div_b": div_b,
            "curl_b": curl_b,
            "curl_B": curl_B,
            "grad_inv_mag": grad_inv_mag,
        }

    # -- pressure support (equilibria and test fields carrying p) ----------
    def p(self, x) -> np.ndarray:
        raise NotImplementedError(f"{self.kind} field has no pressure function")

    def grad_p(self, x) -> np.ndarray:
        raise NotImplementedError(f"{self.kind} field has no pressure function")

    def hess_p(self, x) -> np.ndarray:
        raise NotImplementedError(f"{self.kind} field has no pressure function")

    def describe(self) -> dict[str, Any]:
        return {"kind": self.kind}

    def __repr__(self):
        items = ", ".join(f"{k}={v!r}" for k, v in self.describe().items() if k != "kind")
        return f"{type(self).__name__}({items})"


class UniformField(MagneticField):
    """Constant field B(x) = b0; trivially an equilibrium with constant pressure."""

    kind = "uniform"
    kind_id = KIND_UNIFORM
    has_pressure = True
    is_equilibrium = True

    def __init__(self, b0, p_c: float = 0.0):
        b0 = np.asarray(b0, dtype=float)
        if b0.shape != (3,):
            raise ValueError("b0 must be a 3-vector")
        norm = float(np.linalg.norm(b0))
        if norm < ZERO_FIELD_MAG:
            raise ZeroFieldError("uniform field requires |b0| > 0")
        super().__init__(GrowthSpec(gamma=0.0, radius=1.0, const=norm))
        self.b0 = b0
        self.p_c = float(p_c)
        self.kernel_params[:3] = b0

    def _b_many(self, pts):
        return np.broadcast_to(self.b0, (len(pts), 3)).copy()

    def _jac_many(self, pts):
        return np.zeros((len(pts), 3, 3))

    def p(self, x):
        pts, single = _as_points(x)
        out = np.full(len(pts), self.p_c)
        return out[0] if single else out

    def grad_p(self, x):
        pts, single = _as_points(x)
        out = np.zeros((len(pts), 3))
        return out[0] if single else out

    def hess_p(self, x):
        pts, single = _as_points(x)
        out = np.zeros((len(pts), 3, 3))
        return out[0] if single else out

    def describe(self):
        return {"kind": self.kind, "b0": self.b0.tolist(), "p_c": self.p_c}


class BumpColumnField(MagneticField):
    """B = (-y, x, f(x^2+y^2)) with f(s) = a0 exp(-1/(1-s)) on s<1, else 0."""

    kind = "bump_column"
    kind_id = KIND_BUMP_COLUMN

    def __init__(self, a0: float = 1.0):
        if a0 == 0.0:
            raise ValueError("bump amplitude a0 must be nonzero")
        # global minimum of |B| over R^3 is positive: |B|^2 = s + f(s)^2
        svals = np.linspace(0.0, 1.0, 20001)
        fvals = self._f(abs(a0), svals)
        cmin = float(np.sqrt(np.min(svals + fvals ** 2)))
        super().__init__(GrowthSpec(gamma=0.0, radius=1.0, const=cmin))
        self.a0 = float(a0)
        self.kernel_params[0] = self.a0

    @staticmethod
    def _f(a0, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = s < 1.0
        out[inside] = a0 * np.exp(-1.0 / (1.0 - s[inside]))
        return out

    @staticmethod
    def _fp(a0, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = s < 1.0
        q = 1.0 - s[inside]
        out[inside] = -a0 * np.exp(-1.0 / q) / (q * q)
        return out

    def _b_many(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        s = x * x + y * y
        return np.stack([-y, x, self._f(self.a0, s)], axis=1)

    def _jac_many(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        s = x * x + y * y
        fp = self._fp(self.a0, s)
        jac = np.zeros((len(pts), 3, 3))
        jac[:, 0, 1] = -1.0
        jac[:, 1, 0] = 1.0
        jac[:, 2, 0] = 2.0 * x * fp
        jac[:, 2, 1] = 2.0 * y * fp
        return jac

    def describe(self):
        return {"kind": self.kind, "a0": self.a0}


class ScrewPinchField(MagneticField):
    """Screw-pinch equilibrium on the infinite cylinder.

    In cylindrical radius r: B_theta = c r/(1+r^2), B_z = bz,
    p = p_c - c^2/(2(1+r^2)^2). Satisfies B x curl(B) = grad p exactly.
    The bounded domain of the displacement theory is emulated by the annulus
    r in [domain_r[0], domain_r[1]] with exit detection.
    """

    kind = "screw_pinch"
    kind_id = KIND_SCREW_PINCH
    has_pressure = True
    is_equilibrium = True

    def __init__(self, c: float = 1.0, bz: float = 1.0, p_c: float = 1.0,
                 domain_r: tuple[float, float] = (0.05, 10.0)):
        if bz == 0.0:
            raise ValueError("axial field bz must be nonzero")
        super().__init__(GrowthSpec(gamma=0.0, radius=1.0, const=abs(bz)))
        self.c = float(c)
        self.bz = float(bz)
        self.p_c = float(p_c)
        self.domain_r = (float(domain_r[0]), float(domain_r[1]))
        self.kernel_params[0] = self.c
        self.kernel_params[1] = self.bz

    def _b_many(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        g = self.c / (1.0 + x * x + y * y)
        return np.stack([-y * g, x * g, np.full(len(pts), self.bz)], axis=1)

    def _jac_many(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        q = 1.0 + x * x + y * y
        g = self.c / q
        gq = 2.0 * g / q
        jac = np.zeros((len(pts), 3, 3))
        jac[:, 0, 0] = x * y * gq
        jac[:, 0, 1] = -g + y * y * gq
        jac[:, 1, 0] = g - x * x * gq
        jac[:, 1, 1] = -x * y * gq
        return jac

    def p(self, x):
        pts, single = _as_points(x)
        q = 1.0 + pts[:, 0] ** 2 + pts[:, 1] ** 2
        out = self.p_c - self.c ** 2 / (2.0 * q * q)
        return out[0] if single else out

    def grad_p(self, x):
        pts, single = _as_points(x)
        xx, yy = pts[:, 0], pts[:, 1]
        q = 1.0 + xx * xx + yy * yy
        coef = 2.0 * self.c ** 2 / q ** 3
        out = np.stack([coef * xx, coef * yy, np.zeros(len(pts))], axis=1)
        return out[0] if single else out

    def hess_p(self, x):
        pts, single = _as_points(x)
        xx, yy = pts[:, 0], pts[:, 1]
        q = 1.0 + xx * xx + yy * yy
        c2 = self.c ** 2
        diag = 2.0 * c2 / q ** 3
        out = np.zeros((len(pts), 3, 3))
        out[:, 0, 0] = diag - 12.0 * c2 * xx * xx / q ** 4
        out[:, 1, 1] = diag - 12.0 * c2 * yy * yy / q ** 4
        out[:, 0, 1] = out[:, 1, 0] = -12.0 * c2 * xx * yy / q ** 4
        return out[0] if single else out

    def describe(self):
        return {"kind": self.kind, "c": self.c, "bz": self.bz, "p_c": self.p_c,
                "domain_r": list(self.domain_r)}


class PerturbedPinchField(ScrewPinchField):
    """Screw pinch with z-modulated azimuthal strength: div-free test field.

    |B| acquires a z-dependence so (B x grad p) . grad|B|^-1 != 0; force
    balance no longer holds (is_equilibrium is False). The unperturbed p(r)
    is kept for defect diagnostics.
    """

    kind = "perturbed_pinch"
    kind_id = KIND_PERTURBED_PINCH
    is_equilibrium = False

    def __init__(self, c: float = 1.0, bz: float = 1.0, p_c: float = 1.0,
                 eps: float = 0.2, domain_r: tuple[float, float] = (0.05, 10.0)):
        super().__init__(c=c, bz=bz, p_c=p_c, domain_r=domain_r)
        if abs(eps) >= 1.0:
            raise ValueError("perturbation eps must satisfy |eps| < 1")
        self.eps = float(eps)
        self.kernel_params[2] = self.eps

    def _mod(self, z):
        return 1.0 + self.eps * np.sin(z)

    def _b_many(self, pts):
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        g = self.c * self._mod(z) / (1.0 + x * x + y * y)
        return np.stack([-y * g, x * g, np.full(len(pts), self.bz)], axis=1)

    def _jac_many(self, pts):
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        q = 1.0 + x * x + y * y
        g = self.c * self._mod(z) / q
        gq = 2.0 * g / q
        gz = self.c * self.eps * np.cos(z) / q
        jac = np.zeros((len(pts), 3, 3))
        jac[:, 0, 0] = x * y * gq
        jac[:, 0, 1] = -g + y * y * gq
        jac[:, 0, 2] = -y * gz
        jac[:, 1, 0] = g - x * x * gq
        jac[:, 1, 1] = -x * y * gq
        jac[:, 1, 2] = x * gz
        return jac

    def describe(self):
        d = super().describe()
        d["kind"] = self.kind
        d["eps"] = self.eps
        return d


# ---------------------------------------------------------------------------
# constructors (the spec's field-building operations)
# ---------------------------------------------------------------------------

def uniform_field(b0) -> UniformField:
    """Constant field B(x) = b0 everywhere."""
    return UniformField(b0)


def bump_column_field(a0: float = 1.0) -> BumpColumnField:
    """Column field B = (-y, x, f(x^2+y^2)) with bump amplitude a0."""
    return BumpColumnField(a0)


def screw_pinch_equilibrium(c: float = 1.0, bz: float = 1.0, p_c: float = 1.0,
                            domain_r: tuple[float, float] = (0.05, 10.0)) -> ScrewPinchField:
    """Screw-pinch plasma equilibrium with azimuthal strength c and axial field bz."""
    return ScrewPinchField(c=c, bz=bz, p_c=p_c, domain_r=domain_r)


def perturbed_pinch_field(c: float = 1.0, bz: float = 1.0, p_c: float = 1.0,
                          eps: float = 0.2) -> PerturbedPinchField:
    """Non-equilibrium pinch variant whose |B| varies along field lines."""
    return PerturbedPinchField(c=c, bz=bz, p_c=p_c, eps=eps)


def builtin_fields() -> list[MagneticField]:
    """One representative instance of every built-in field kind."""
    return [
        uniform_field((0.0, 0.0, 1.0)),
        bump_column_field(1.0),
        screw_pinch_equilibrium(1.0, 1.0, 1.0),
        perturbed_pinch_field(1.0, 1.0, 1.0, 0.2),
    ]


# ---------------------------------------------------------------------------
# sampling and the finite-difference guard
# ---------------------------------------------------------------------------

def sample(field: MagneticField, x) -> FieldSample | EquilibriumSample:
    """All local quantities at one point; raises ZeroFieldError if |B| < 1e-13."""
    pts, _ = _as_points(x)
    if pts.shape != (1, 3):
        raise ValueError("sample() expects a single 3-vector")
    fr = field._frame(pts)
    mag = float(fr["mag"][0])
    if mag < ZERO_FIELD_MAG:
        raise ZeroFieldError(f"|B| = {mag:.3g} < 1e-13 at {pts[0].tolist()}")
    fs = FieldSample(
        B=fr["B"][0],
        mag=mag,
        b=fr["b"][0],
        jac_B=fr["jac_B"][0],
        jac_b=fr["jac_b"][0],
        div_b=float(fr["div_b"][0]),
        curl_b=fr["curl_b"][0],
        grad_inv_mag=fr["grad_inv_mag"][0],
    )
    if not field.has_pressure:
        return fs
    return EquilibriumSample(
        base=fs,
        p=float(field.p(pts[0])),
        grad_p=field.grad_p(pts[0]),
        hess_p=field.hess_p(pts[0]),
        curl_B=fr["curl_B"][0],
    )


@dataclass(frozen=True)
class FDCheckReport:
    """Max |analytic - central difference| per derivative block."""

    step: float
    residuals: dict = dc_field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())


def fd_check(field: MagneticField, x, h: float) -> FDCheckReport:
    """Compare analytic derivatives against central finite differences of step h.

    For smooth built-ins the residual is O(h^2); the uniform field gives
    exact zeros.
    """
    if h <= 0:
        raise ValueError("finite-difference step h must be positive")
    x = np.asarray(x, dtype=float)
    if np.linalg.norm(field.B(x)) < ZERO_FIELD_MAG:
        raise ZeroFieldError(f"|B| < 1e-13 at {x.tolist()}")
    eye = np.eye(3)
    plus = x[None, :] + h * eye
    minus = x[None, :] - h * eye

    def central(fn):
        hi = np.asarray([fn(p) for p in plus], dtype=float)
        lo = np.asarray([fn(p) for p in minus], dtype=float)
        # column j of the Jacobian is the derivative along e_j
        return np.moveaxis(hi - lo, 0, -1) / (2.0 * h)

    res: dict[str, float] = {}
    res["jac_B"] = float(np.max(np.abs(field.jac_B(x) - central(field.B))))
    fr1 = field._frame(x[None, :])
    res["jac_b"] = float(np.max(np.abs(fr1["jac_b"][0] - central(field.unit))))
    res["grad_inv_mag"] = float(
        np.max(np.abs(fr1["grad_inv_mag"][0] - central(lambda p: 1.0 / field.mag(p))))
    )
    if field.has_pressure:
        res["grad_p"] = float(np.max(np.abs(field.grad_p(x) - central(field.p))))
        res["hess_p"] = float(np.max(np.abs(field.hess_p(x) - central(field.grad_p))))
    return FDCheckReport(step=h, residuals=res)


# ---------------------------------------------------------------------------
# JSON scenario construction
# ---------------------------------------------------------------------------

_FIELD_KINDS = {
    "uniform": (UniformField, {"b0", "p_c"}),
    "bump_column": (BumpColumnField, {"a0"}),
    "screw_pinch": (ScrewPinchField, {"c", "bz", "p_c", "domain_r"}),
    "perturbed_pinch": (PerturbedPinchField, {"c", "bz", "p_c", "eps", "domain_r"}),
}


def field_from_config(cfg: dict) -> MagneticField:
    """Build a field from a JSON scenario block {"kind": ..., params...}."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ValueError("field config must be an object with a 'kind' entry")
    kind = cfg["kind"]
    if kind not in _FIELD_KINDS:
        raise ValueError(f"unknown field kind {kind!r}; expected one of {sorted(_FIELD_KINDS)}")
    ctor, allowed = _FIELD_KINDS[kind]
    extra = set(cfg) - allowed - {"kind"}
    if extra:
        raise ValueError(f"unknown field parameter(s) {sorted(extra)} for kind {kind!r}")
    if kind == "uniform" and "b0" not in cfg:
        raise ValueError("uniform field requires 'b0'")
    kwargs = {k: v for k, v in cfg.items() if k != "kind"}
    if "b0" in kwargs:
        kwargs["b0"] = np.asarray(kwargs["b0"], dtype=float)
    if "domain_r" in kwargs:
        kwargs["domain_r"] = tuple(kwargs["domain_r"])
    return ctor(**kwargs)
