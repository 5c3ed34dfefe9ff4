"""Exception taxonomy shared across the pipeline.

The CLI maps these onto exit codes: ConfigError -> 1, data-shaped errors
(FormatError, ValidationError, OSError) -> 2, anything else -> 3.
"""


class VidvoteError(Exception):
    """Base class for errors raised by this package."""


class FormatError(VidvoteError):
    """A file's bytes do not conform to their declared format."""


class ValidationError(VidvoteError):
    """Well-formed input that violates a documented invariant."""


class ConfigError(VidvoteError):
    """Pipeline configuration is malformed or inconsistent."""
