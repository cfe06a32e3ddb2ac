# errors.py

from typing import Any, Dict, Optional


class CovTestError(Exception):
    """Base class; ``code`` is the stable identifier used in CLI error JSON."""

    code = "error"

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = dict(context)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"error": self.code, "message": self.message}
        if self.context:
            out["context"] = {k: _jsonable(v) for k, v in self.context.items()}
        return out


def _jsonable(v: Any) -> Any:
    if isinstance(v, (str, int, bool)) or v is None:
        return v
    if isinstance(v, float):
        return v
    if isinstance(v, complex):
        return [v.real, v.imag]
    return str(v)


class SpectrumError(CovTestError, ValueError):
    code = "invalid_spectrum"


class PoleProximityError(CovTestError):
    code = "pole_proximity"


class ConvergenceError(CovTestError):
    code = "non_convergence"


class BranchError(CovTestError):
    code = "branch_error"


class UnsupportedRegimeError(CovTestError):
    code = "unsupported_regime"


class BracketingError(CovTestError):
    code = "bracketing_failure"


class ExtrapolationError(CovTestError):
    code = "extrapolation_failure"


class CoincidentPointError(CovTestError):
    code = "coincident_points"


class NonAnalyticError(CovTestError):
    code = "non_analytic"


class LogDomainError(CovTestError, ValueError):
    code = "log_domain"


class DegenerateStatisticError(CovTestError):
    code = "degenerate_statistic"


class CumulantError(CovTestError, ValueError):
    code = "invalid_cumulant"


class DimensionError(CovTestError, ValueError):
    code = "dimension_mismatch"


class DataFormatError(CovTestError, ValueError):
    code = "data_format"

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[int] = None) -> None:
        super().__init__(message, row=row, column=column)
        self.row = row
        self.column = column


class DomainError(CovTestError, ValueError):
    code = "domain_error"
