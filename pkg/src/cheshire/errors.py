"""Exception hierarchy shared by all modules."""


class CheshireError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(CheshireError, ValueError):
    """An interferometer configuration or scenario override is invalid."""


class InvalidSpinorError(CheshireError, ValueError):
    pass


class DomainError(CheshireError, ValueError):
    """A parameter lies outside the range where a formula is defined."""


class NormalizationError(CheshireError, ValueError):
    pass


class DegeneratePostselectionError(CheshireError, ZeroDivisionError):
    """Pre- and postselected states are (numerically) orthogonal."""


class UndefinedLimitError(CheshireError, ValueError):
    """A weak value is requested at a point where its limit depends on the approach order."""


class UnderdeterminedFitError(CheshireError, ValueError):
    pass


class ParseError(CheshireError, ValueError):
    """A data file could not be parsed; ``lineno`` is 1-based when known."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class KeyMismatchError(CheshireError, KeyError):
    def __init__(self, missing_left, missing_right):
        self.missing_left = sorted(missing_left)
        self.missing_right = sorted(missing_right)
        super().__init__(
            f"keys only in DES/left inputs: {self.missing_right}; "
            f"keys only in oracle/right inputs: {self.missing_left}"
        )

    def __str__(self):
        return self.args[0]
