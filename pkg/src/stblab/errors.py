"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument or runtime state violates a documented precondition."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""


class IllConditionedError(ContractViolation):
    """A channel realization is too close to singular for the requested decoder."""
