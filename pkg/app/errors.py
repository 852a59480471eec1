from typing import Any


class IsacError(Exception):
    """Base error; `code` is the machine-readable identifier reported by the CLI and API."""

    code = "isac_error"

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context = context

    def record(self) -> dict[str, Any]:
        return {"error": self.code, "message": self.message, "context": self.context}


class ConfigError(IsacError):
    code = "config_error"

    def __init__(self, message: str, kind: str, **context: Any) -> None:
        super().__init__(message, kind=kind, **context)
        self.kind = kind


class UnknownExperimentError(IsacError):
    code = "unknown_experiment"


class GeometryError(IsacError):
    code = "invalid_geometry"


class UnservableDirectionError(IsacError):
    code = "sensing_direction_unservable"


class UnstableRepeaterLoopError(IsacError):
    code = "unstable_repeater_loop"

    def __init__(self, radius: float) -> None:
        super().__init__(f"unstable repeater loop: spectral radius {radius:.6g}", radius=radius)
        self.radius = radius


class SingularSystemError(IsacError):
    code = "singular_system"


class InfeasibleRequirementError(IsacError):
    code = "infeasible_ue_requirement"


class OracleSizeError(IsacError):
    code = "oracle_too_large"


class ConstraintViolationError(IsacError):
    code = "constraint_violation"
