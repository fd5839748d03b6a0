from typing import Iterable, List, Optional


class UwSvdError(Exception):
    """Base class for every error raised by the toolkit."""


class ValidationError(UwSvdError, ValueError):
    pass


class DimensionError(ValidationError):
    pass


class GeometryError(ValidationError):
    pass


class NumericalError(UwSvdError):
    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message if residual is None else f"{message} (residual={residual:.3e})")
        self.residual = residual


class SingularMatrixError(NumericalError):
    pass


class DegenerateChannelError(NumericalError):
    def __init__(self, message: str, user: Optional[int] = None, ratio: Optional[float] = None):
        super().__init__(message)
        self.user = user
        self.ratio = ratio


class UnknownNameError(ValidationError):
    def __init__(self, kind: str, name: str, valid: Iterable[str]):
        self.valid: List[str] = sorted(valid)
        super().__init__(f"unknown {kind} '{name}'; valid names: {', '.join(self.valid)}")


class ConfigError(UwSvdError):
    """Config file or override failed validation; `fields` holds dotted paths."""

    def __init__(self, message: str, fields: Optional[List[str]] = None):
        super().__init__(message)
        self.fields = fields or []
