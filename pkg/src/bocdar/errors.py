"""Exception types raised by the package."""


class ConfigError(ValueError):
    """Invalid hyperparameters or configuration."""


class DimensionError(ValueError):
    """Feature vector has the wrong length for the configured model."""


class HistoryMissError(LookupError):
    """A rollback target is older than the retained checkpoint horizon."""


class HorizonError(RuntimeError):
    """The anomaly removal loop exceeded its iteration cap."""


class UnsupportedOperation(RuntimeError):
    """The requested quantity is not available in the current engine mode."""
