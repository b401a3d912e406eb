"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid or inconsistent configuration (bad values, unknown keys,
    grid/zone mismatch).  Maps to CLI exit code 1."""
