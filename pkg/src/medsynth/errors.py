"""Exception types shared across the package."""


class MedsynthError(Exception):
    """Base class for all package errors."""


class DimensionError(MedsynthError, ValueError):
    pass


class RangeError(MedsynthError, ValueError):
    pass


class ConfigurationError(MedsynthError, ValueError):
    pass


class AssetError(MedsynthError):
    """An asset is malformed, empty or cannot be resolved."""


class ValidationError(MedsynthError, ValueError):
    pass


class ConsistencyError(MedsynthError, ValueError):
    """Two inputs that must describe the same thing disagree."""
