"""Exception types raised across the package."""

from __future__ import annotations


class MarketError(Exception):
    """Base class for every error raised by wagermarket."""


class ValidationError(MarketError, ValueError):
    """A report, outcome or configuration violates an invariant.

    ``issues`` holds the individual violations as ``(code, message)`` pairs.
    """

    def __init__(self, issues):
        if isinstance(issues, str):
            issues = [("Invalid", issues)]
        self.issues = list(issues)
        super().__init__("; ".join(f"{code}: {msg}" for code, msg in self.issues))

    @property
    def codes(self) -> list[str]:
        return [code for code, _ in self.issues]


class TypeMismatch(MarketError, TypeError):
    pass


class TauOutOfRange(MarketError, ValueError):
    pass


class BadGridSpec(MarketError, ValueError):
    pass


class SupportNotUnit(MarketError, ValueError):
    pass


class ZeroDensityAtOutcome(MarketError, ValueError):
    pass


class UnsupportedForGrids(MarketError, ValueError):
    pass


class QuadratureFailure(MarketError, ArithmeticError):
    pass


class MixedForms(MarketError, TypeError):
    pass


class LengthMismatch(MarketError, ValueError):
    pass


class NonPositiveWager(MarketError, ValueError):
    pass


class ScoreOutOfRange(MarketError, ValueError):
    pass


class InvalidConfig(MarketError, ValueError):
    pass


class WagerOutOfBounds(MarketError, ValueError):
    pass


class DuplicatePlayer(MarketError, ValueError):
    pass


class SessionClosed(MarketError, RuntimeError):
    pass


class SessionNotClosed(MarketError, RuntimeError):
    pass


class NoSubmissions(MarketError, RuntimeError):
    pass


class FormMismatch(MarketError, TypeError):
    pass


class SplitChangesTotal(MarketError, ValueError):
    pass


class ReportsDiffer(MarketError, ValueError):
    pass


class ExogenousModeUnsupported(MarketError, ValueError):
    pass


class ParseError(MarketError, ValueError):
    """Scenario or CSV input could not be parsed.

    ``field`` is a dotted path (``submissions[2].wager``) or a CSV row
    reference; ``line`` is the 1-based source line when known.
    """

    def __init__(self, field: str, reason: str, line: int | None = None):
        self.field = field
        self.reason = reason
        self.line = line
        where = f"{field} (line {line})" if line is not None else field
        super().__init__(f"{where}: {reason}")


class UnknownKind(MarketError, ValueError):
    pass
