from typing import Any, Dict, List, Optional


class QSCError(Exception):
    """Base class for every domain error raised by the services."""


class DimensionMismatchError(QSCError):
    pass


class NotHermitianError(QSCError):
    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(f"matrix is not Hermitian: residual {residual:.3e} > {tol:.3e}")


class InvalidChannelError(QSCError):
    def __init__(self, message: str, report: Optional[Dict[str, Any]] = None):
        self.report = report or {}
        super().__init__(message)


class InvalidSuperchannelError(QSCError):
    def __init__(self, message: str, violations: Optional[List[Any]] = None):
        self.violations = violations or []
        super().__init__(message)


class InvalidInputError(QSCError):
    """Malformed payload. `field` is a dotted path into the offending document."""

    def __init__(self, message: str, field: str = ""):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class SolverError(QSCError):
    pass
