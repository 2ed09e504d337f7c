"""Exception taxonomy shared across the library.

Every error raised by xsalpha derives from :class:`XsalphaError`, so callers
can catch one base class at the CLI boundary and still discriminate finer
failure modes in library code.
"""

from __future__ import annotations


class XsalphaError(Exception):
    """Base class for all xsalpha errors."""


class ParseError(XsalphaError):
    """Malformed input text (panel files, config files).

    Carries ``line`` (1-based line number) when the offending line is known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(XsalphaError):
    """A domain invariant does not hold (non-positive level, bad matrix, ...)."""


class AlignmentError(XsalphaError):
    """Date axes disagree, or aligning series leaves nothing usable."""


class ConfigError(XsalphaError):
    """Invalid run configuration (unknown key, missing column, bad value)."""


class InsufficientDataError(XsalphaError):
    """Fewer observations available than an operation requires.

    ``found`` reports how many observations were available.
    """

    def __init__(self, message: str, found: int | None = None):
        super().__init__(message)
        self.found = found


class DateNotFoundError(XsalphaError):
    """A requested date is not a panel date."""


class EmptyInputError(XsalphaError):
    """An operation received an empty series or history."""


class InfeasibleError(XsalphaError):
    """No portfolio satisfies the requested constraints."""


class ConvergenceError(XsalphaError):
    """The solver exhausted its iteration/time budget.

    Carries the best iterate seen (``best_weights``) and the solver status
    label (``status``) so callers can inspect how far the solve got.
    """

    def __init__(self, message: str, best_weights=None, status: str = ""):
        super().__init__(message)
        self.best_weights = best_weights
        self.status = status


class DimensionError(XsalphaError):
    """Problem size outside an operation's supported range."""


class DegenerateStatisticError(XsalphaError):
    """A statistic is undefined for the given data (zero-variance ratio/test)."""


def attach_date(err: XsalphaError, when) -> XsalphaError:
    """Prepend a date to an error message in place, preserving its type."""
    if err.args:
        err.args = (f"{when}: {err.args[0]}",) + err.args[1:]
    else:
        err.args = (f"{when}",)
    return err
