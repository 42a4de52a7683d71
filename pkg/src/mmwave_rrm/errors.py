"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class CapacityError(RuntimeError):
    """Offline enumeration would exceed the configured size cap."""


class DegenerateSetError(ArithmeticError):
    """Effective channel of a UE set is singular or too ill-conditioned for ZF."""
