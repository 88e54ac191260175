"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Malformed channel, profile or experiment description."""


class GuardrailError(RuntimeError):
    """Instance exceeds the desk-scale limits (users, blocklength, message counts)."""


class BudgetExceeded(GuardrailError):
    """Candidate enumeration would exceed the configured tuple budget."""
