"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems exit 1, I/O
problems exit 2 (plain OSError), broken internal invariants exit 3.
"""


class ValidationError(ValueError):
    """Bad user input: config values, trace contents, generator specs."""


class ConfigError(ValidationError):
    """Config file problem (unknown key, wrong type, bad value)."""


class TraceError(ValidationError):
    """Malformed or inconsistent trace data."""

    def __init__(self, message, line=None, offset=None, index=None):
        super().__init__(message)
        self.line = line
        self.offset = offset
        self.index = index


class IntegrityError(RuntimeError):
    """An internal self-check failed (report inconsistent with counters)."""
