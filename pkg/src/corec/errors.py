"""Error types shared across the pipeline."""

from __future__ import annotations


class CorecError(Exception):
    """Base class. `code` is the short machine-readable name used in reports."""

    code = "Error"

    def __init__(self, message: str, span=None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self):
        if self.span is not None:
            return f"{self.span}: {self.message}"
        return self.message


class SyntaxError(CorecError):  # noqa: A001 - mirrors the diagnostic name users see
    code = "SyntaxError"

    def __init__(self, message, span, expected=()):
        super().__init__(message, span)
        self.expected = frozenset(expected)

    @property
    def line(self):
        return self.span.line

    @property
    def col(self):
        return self.span.col


class UnboundName(CorecError):
    code = "UnboundName"


class SortMismatch(CorecError):
    code = "SortMismatch"


class DuplicateName(CorecError):
    code = "DuplicateName"


class DescMismatch(CorecError):
    code = "DescMismatch"


class UnknownOp(CorecError):
    code = "UnknownOp"


class SelectorMismatch(CorecError):
    """A selector was applied to a value built by a different constructor."""

    code = "SelectorMismatch"


class FuelExhausted(CorecError):
    code = "FuelExhausted"

    def __init__(self, function, carrier, fuel_used, path=()):
        self.function = function
        self.carrier = carrier
        self.fuel_used = fuel_used
        self.path = tuple(path)
        super().__init__(
            f"fuel exhausted in {function} after {fuel_used} unguarded steps at carrier {show_value(carrier)}"
        )

    def to_json(self):
        return {
            "function": self.function,
            "carrierValue": show_value(self.carrier),
            "fuelUsed": self.fuel_used,
        }


class RuleViolation(CorecError):
    """A definition breaks the one-layer discipline. `reason` is one of the fixed codes."""

    def __init__(self, reason: str, message: str, span=None):
        super().__init__(message, span)
        self.reason = reason

    @property
    def code(self):
        return self.reason.split("(")[0]


class DuplicateOp(CorecError):
    code = "DuplicateOp"


class WellBehavednessCheckFailed(CorecError):
    code = "WellBehavednessCheckFailed"

    def __init__(self, name, counterexample):
        self.name = name
        self.counterexample = counterexample
        super().__init__(f"{name}: runtime and seed rule disagree: {counterexample}")


class SymbolicBranch(CorecError):
    """A template needed to decide a condition over symbolic values."""

    code = "SymbolicBranch"


class NotProvable(CorecError):
    code = "NotProvable"


def show_value(v) -> str:
    from .functor import show

    return show(v)
