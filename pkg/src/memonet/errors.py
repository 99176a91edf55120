"""Exception types shared across the package."""


class MemoNetError(Exception):
    """Base class for every error this package raises on purpose."""


class ShapeError(MemoNetError):
    """Operands with incompatible shapes reached a tensor primitive."""


class DataError(MemoNetError):
    """Malformed schema, vocabulary, or dataset input."""


class ConfigError(MemoNetError):
    """Invalid or inconsistent configuration value."""


class CheckpointError(MemoNetError):
    """Unreadable, corrupt, or mismatched checkpoint file."""


class MetricError(MemoNetError):
    """A metric was asked for on inputs where it is undefined."""


class NonFiniteError(MemoNetError):
    """A loss or gradient stopped being finite during training."""
