"""Exception types shared across the pipeline."""


class EvdeformError(Exception):
    """Base class for all package errors."""


class StreamError(EvdeformError):
    """Corrupt or out-of-contract event data (bad timestamps, pixels, masks)."""


class FormatError(EvdeformError):
    """Malformed on-disk file: bad header, bad line, bad record."""


class ConfigError(EvdeformError):
    """Invalid or unknown configuration key/value."""


class StageError(EvdeformError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage
