"""Exception types raised across the package."""


class RisSesdError(Exception):
    """Base class for all package errors."""


class ConfigError(RisSesdError, ValueError):
    """Invalid or incomplete configuration."""


class UsageError(RisSesdError, ValueError):
    """Arguments are inconsistent (shape mismatch, empty alphabet, ...)."""


class NumericError(RisSesdError, ArithmeticError):
    """A numerical step failed where the math says it cannot."""


class CapacityError(RisSesdError):
    """Requested search space exceeds the configured guard."""


class ParseError(RisSesdError, ValueError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
