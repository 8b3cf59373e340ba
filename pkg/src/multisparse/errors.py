"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operand shapes do not agree."""


class UndefinedInputError(ValueError):
    """Input for which the requested quantity is undefined (e.g. a zero vector)."""


class InfeasibleProblemError(ValueError):
    """No x satisfies ||y - Phi x||_2 <= eps."""


class IllConditionedError(ValueError):
    """Phi Phi^T is numerically singular."""


class GenerationError(RuntimeError):
    """A synthetic source could not meet its compressibility targets."""


class FormatError(ValueError):
    """Malformed signal or config file.

    ``line`` is the 1-based line number of the offending line, or None when
    the problem is not tied to a single line (empty file, short file).
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
