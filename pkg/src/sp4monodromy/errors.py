"""Exception hierarchy and CLI exit codes."""

EXIT_OK = 0
EXIT_INVARIANT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_BUDGET_EXCEEDED = 3


class Sp4Error(Exception):
    """Base class for all errors raised by sp4monodromy."""

    exit_code = EXIT_INVARIANT_VIOLATION


class UsageError(Sp4Error, ValueError):
    """Invalid user input: arguments, selectors, literals."""

    exit_code = EXIT_USAGE


class ConfigError(UsageError):
    """Configuration file or environment value could not be used."""


class MatrixLiteralError(UsageError):
    """A matrix, vector or word literal is malformed."""


class UnknownCaseError(UsageError):
    """A case selector does not resolve against the catalog."""


class NotSymplecticError(UsageError):
    """A matrix expected to lie in Sp4(Z) does not."""


class InvariantViolation(Sp4Error):
    """An internal consistency check failed."""


class CatalogError(InvariantViolation):
    """A catalog record failed validation on load."""

    def __init__(self, aesz, check, detail=""):
        self.aesz = aesz
        self.check = check
        message = f"catalog record AESZ {aesz}: {check} failed"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class PresentationError(InvariantViolation):
    """A presentation file failed validation on load."""


class OrderCapExceeded(Sp4Error):
    """Element BFS stored more elements than its cap allows."""

    exit_code = EXIT_BUDGET_EXCEEDED

    def __init__(self, cap):
        self.cap = cap
        super().__init__(f"group closure exceeded {cap} elements")
