from __future__ import annotations

from typing import Any, Sequence


class NQRicciError(Exception):
    """Base error. `exit_code` is what the CLI returns for it."""

    exit_code = 3


# --- input (exit 2) ---

class InputError(NQRicciError):
    exit_code = 2


class ParseError(InputError):
    def __init__(self, message: str, offset: int, expected: Sequence[str] = ()):
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at byte {offset}{detail}")


class VariableOutOfRange(InputError):
    pass


class SchemaError(InputError):
    pass


class ChartMismatch(InputError):
    pass


# --- numeric (exit 3) ---

class NumericError(NQRicciError):
    exit_code = 3


class JetOrderExhausted(NumericError):
    pass


class DivisionByZeroConstantTerm(NumericError):
    pass


class SqrtOfNonpositive(NumericError):
    pass


class DomainError(NumericError):
    pass


class FrameDegenerate(NumericError):
    pass


class StepRejected(NumericError):
    def __init__(self, message: str, trajectory: list[dict[str, Any]] | None = None):
        self.trajectory = list(trajectory or [])
        super().__init__(message)


# --- validation (exit 1) ---

class ValidationFailure(NQRicciError):
    exit_code = 1


class MasterEquationFailure(ValidationFailure):
    pass


class End2ViolationError(ValidationFailure):
    pass
