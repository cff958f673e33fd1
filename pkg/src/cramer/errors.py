class CramerError(Exception):
    """Base class for errors raised by this package."""


class DomainError(CramerError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ResourceError(CramerError):
    """A cost or memory guard was exceeded."""


class NumericError(CramerError, ArithmeticError):
    """A numerical routine failed to converge."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
