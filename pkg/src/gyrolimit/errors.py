"""Exception types shared across the package."""
from __future__ import annotations


class GyrolimitError(Exception):
    """Base class for all library errors."""


class ZeroFieldError(GyrolimitError):
    """|B| fell below 1e-13 at a point where the field must not vanish."""


class OutOfDomainError(GyrolimitError):
    """Point outside a field's domain of definition (never raised by built-ins)."""


class StepSizeUnderflowError(GyrolimitError):
    """Adaptive step fell below 1e-14 of the horizon; omega too large for tol."""

    def __init__(self, t: float, horizon: float):
        self.t = t
        self.horizon = horizon
        super().__init__(
            f"step size underflow at t={t:.6g} (horizon {horizon:.6g}); "
            "raise tol or switch to the Boris integrator"
        )


class NotUnitError(GyrolimitError):
    """A vector expected to have unit length is off by more than 1e-9."""


class DomainExitError(GyrolimitError):
    """Orbit left the annular equilibrium domain before the requested time."""

    def __init__(self, t_exit: float, message: str | None = None):
        self.t_exit = t_exit
        super().__init__(message or f"orbit left the domain at t={t_exit:.9g}")


class PassingViolatedError(GyrolimitError):
    """|v0|^2 - 2 mu0 |B| reached zero on the surface: particle is not passing."""


class FitDegenerateError(GyrolimitError):
    """A sweep error fell below the integration-noise floor; slope fit unsafe."""

    def __init__(self, errors, floor: float):
        self.errors = list(errors)
        self.floor = floor
        super().__init__(
            f"errors {self.errors} reached the noise floor {floor:.3g}; "
            "log-log fit would measure integrator noise"
        )


class DomainViolationError(GyrolimitError):
    """Orbit entered a region excluded by the study's assumptions."""


class ScenarioParseError(GyrolimitError):
    """Scenario file is not well-formed JSON."""


class ScenarioSchemaError(GyrolimitError):
    """Scenario JSON violates the schema; message carries a JSON-pointer path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
