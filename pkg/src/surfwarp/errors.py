class DomainError(ValueError):
    """Input outside the domain an operation is defined on."""


class ConfigError(ValueError):
    """Invalid primitive, parameter, sweep or scenario configuration."""


class MeasurementError(ValueError):
    """Sensor reading outside its normalized range."""
