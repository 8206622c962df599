"""Exception types shared across the package."""


class AssetError(ValueError):
    """A face asset or manifest record failed validation."""


class ConfigurationError(ValueError):
    """A config file, adapter, or checkpoint does not satisfy its contract."""


class CheckpointError(ConfigurationError):
    """A checkpoint file is corrupt or does not match the requested architecture."""


class NumericalError(RuntimeError):
    """A loss or gradient became non-finite; carries the offending term name."""
