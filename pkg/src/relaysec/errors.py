"""Exception hierarchy shared by the library and the CLI."""


class RelaySecError(Exception):
    """Base class for all package errors."""


class ValidationError(RelaySecError, ValueError):
    """Input violates a documented invariant (shape, sign, symmetry)."""


class ParseError(ValidationError):
    """A channel or sweep file could not be parsed.

    ``field`` names the offending entry when known.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class DomainError(ValidationError):
    """Input is well formed but outside the operation's domain."""


class DegenerateError(DomainError):
    """The requested construction collapses (e.g. zero projection)."""


class SolverError(RelaySecError, RuntimeError):
    """An interior-point solve ended without a usable certificate."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
