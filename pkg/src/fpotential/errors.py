"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class FPotentialError(Exception):
    """Base class for every error raised by the package."""


class InputError(FPotentialError, ValueError):
    """Malformed user input (expression, distribution, interval)."""


class ParseError(InputError):
    """Syntax error in an expression, with the byte offset of the problem."""

    def __init__(self, message: str, offset: int, expected: str | None = None):
        self.offset = offset
        self.expected = expected
        text = f"{message} at offset {offset}"
        if expected:
            text += f" (expected {expected})"
        super().__init__(text)


class UnknownIdentifierError(ParseError):
    def __init__(self, name: str, offset: int, catalog: tuple[str, ...]):
        self.name = name
        self.catalog = catalog
        super().__init__(
            f"unknown identifier {name!r}; supported: x, pi, e, " + ", ".join(catalog),
            offset,
        )


class DomainError(InputError):
    """A point lies outside the open interval it must belong to."""


class NumericError(FPotentialError, ArithmeticError):
    """Base class for numerical failures."""


class EvaluationError(NumericError):
    """A function produced a non-finite value or left its natural domain."""

    def __init__(self, message: str, x: float | None = None, node: int | None = None):
        self.x = x
        self.node = node
        if x is not None:
            message += f" (at x={x!r})"
        if node is not None:
            message += f" [expression offset {node}]"
        super().__init__(message)


class AccuracyError(NumericError):
    """Requested accuracy not reached within the evaluation budget."""

    def __init__(self, message: str, estimate: float, error: float):
        self.estimate = estimate
        self.error = error
        super().__init__(f"{message}: best estimate {estimate!r}, error {error:.3g}")


class OutOfRangeError(NumericError):
    """Target value lies outside the range of a monotone function."""


class MonotonicityError(NumericError):
    """A function assumed strictly monotone was found not to be."""


class DerivativeDegenerateError(NumericError):
    """A derivative that must be nonzero vanished."""


class NotApplicableError(FPotentialError):
    """Check does not apply to this input (e.g. affine generator)."""


class SingularHError(NumericError):
    """h vanishes, is non-finite, or changes sign inside its domain."""

    def __init__(self, message: str, x: float | None = None):
        self.x = x
        if x is not None:
            message += f" (at x={x!r})"
        super().__init__(message)
