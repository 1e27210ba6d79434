class DistCtlError(Exception):
    """Base class for library errors."""


class InvalidInputError(DistCtlError, ValueError):
    """Malformed or dimensionally inconsistent input."""


class DomainError(DistCtlError):
    """A mathematical precondition does not hold (graph hypothesis or controllability)."""


class ResourceError(DistCtlError):
    """Requested enumeration exceeds the configured budget."""


class SynthesisError(DistCtlError):
    """Randomized synthesis could not produce a verified result within the retry bound."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
