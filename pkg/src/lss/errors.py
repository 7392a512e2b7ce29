"""Exception hierarchy shared across the package."""


class LssError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(LssError):
    """Invalid parameters, mismatched shapes, or violated preconditions."""


class FormatError(LssError):
    """Malformed or truncated LSSB/LSSL/WAV payloads."""


class ExternalToolError(LssError):
    """An external command failed or produced unreadable output."""
