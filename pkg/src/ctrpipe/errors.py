"""Error types shared across the toolkit.

ValidationError covers bad data (malformed logs, invariant violations);
ConfigError covers bad configuration. The CLI maps ConfigError to exit
code 2 and everything else to exit code 1.
"""


class ValidationError(ValueError):
    """Raised when data violates a declared invariant."""


class ConfigError(ValueError):
    """Raised when a configuration value is invalid or inconsistent."""
