"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value (bad tile side, unknown operator tag, ...)."""


class GeometryError(ValueError):
    """Degenerate or malformed geometry (too few points, zero length, NaN)."""


class MapDecodeError(ValueError):
    """Malformed global-map file. Carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset
