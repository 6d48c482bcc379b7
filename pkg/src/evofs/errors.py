"""Exception types used across the package."""


class ConfigError(ValueError):
    """A parameter is outside its allowed range or combination."""


class IngestionError(ValueError):
    """A data file could not be parsed into a usable dataset."""


class ContractError(RuntimeError):
    """An internal call violated a documented precondition."""
