"""Exception types. Each carries a short ``category`` used by the CLI."""


class TinyTrackError(Exception):
    category = "error"


class DimensionError(TinyTrackError, ValueError):
    category = "dimension"


class DegenerateDataError(TinyTrackError, ValueError):
    category = "degenerate-data"


class ArgumentError(TinyTrackError, ValueError):
    category = "argument"


class InsufficientContextError(ArgumentError):
    """Too few frames for the configured frame interval."""
    category = "insufficient-context"


class ConfigError(TinyTrackError, ValueError):
    category = "config"


class FormatError(TinyTrackError, ValueError):
    category = "format"


class FileError(TinyTrackError, OSError):
    category = "io"
