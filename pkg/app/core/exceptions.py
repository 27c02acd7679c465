"""Error hierarchy shared by the engine, the services and the CLI."""
from typing import Optional


class FGPError(Exception):
    """Base class for every error raised by the engine."""


class SimplexDomainError(FGPError, ValueError):
    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        super().__init__(message if index is None else f"{message} (index {index})")


class DimensionMismatchError(FGPError, ValueError):
    pass


class SelfFinancingError(FGPError, ValueError):
    pass


class ExponentialConcavityError(FGPError, ArithmeticError):
    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        super().__init__(message if step is None else f"{message} (step {step})")


class ConcavityError(FGPError, ArithmeticError):
    pass


class NonPositiveValueError(FGPError, ArithmeticError):
    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        super().__init__(message if step is None else f"{message} (step {step})")


class DegenerateTangentError(FGPError, ArithmeticError):
    pass


class InversionError(FGPError, ArithmeticError):
    pass


class AssignmentTooLargeError(FGPError, ValueError):
    pass


class CoincidentPointsError(FGPError, ValueError):
    pass


class InvalidScaleFunctionError(FGPError, ValueError):
    pass


class UnsupportedSchemeError(FGPError, ValueError):
    pass


class ConfigError(FGPError, ValueError):
    pass


class PriceTableError(FGPError, ValueError):
    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(location)})" if location else message)
