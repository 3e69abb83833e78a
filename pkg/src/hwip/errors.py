"""Exception types shared across the package."""


class CapacityError(RuntimeError):
    """A requested computation exceeds a configured size budget."""


class CapabilityError(ValueError):
    """A model was asked for an oracle it does not expose."""


class ConfigError(ValueError):
    """A run configuration failed validation; message names the offending key."""
