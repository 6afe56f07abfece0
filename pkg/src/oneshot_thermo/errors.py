"""Exception types shared across the toolkit."""


class OneShotThermoError(Exception):
    """Base class for all toolkit errors."""


class InvalidOperator(OneShotThermoError):
    """Input matrix fails a structural invariant (hermiticity, positivity, trace)."""


class ShapeError(OneShotThermoError):
    """Dimension mismatch between operators or factor lists."""


class DimensionLimit(OneShotThermoError):
    """Requested object exceeds the configured dense/diagonal dimension caps."""


class NotSemiclassical(OneShotThermoError):
    """State does not commute with the Hamiltonian within tolerance."""


class InvalidTemperature(OneShotThermoError):
    """Inverse temperature must be strictly positive."""


class InvalidSmoothing(OneShotThermoError):
    """Smoothing parameter outside [0, 1)."""


class InvalidBatteryLevel(OneShotThermoError):
    """Battery energy is not on the declared ladder."""


class UnsupportedStructure(OneShotThermoError):
    """State family or Hamiltonian not of the supported factorized form."""


class SpacingMismatch(OneShotThermoError):
    """Ladder spacing does not divide the Hamiltonian level gaps."""


class NotIncoherent(OneShotThermoError):
    """Operator is not block-diagonal in total energy."""


class ChainTooShort(OneShotThermoError):
    """Chain length below the support of the local term."""


class ConfigError(OneShotThermoError):
    """Invalid run configuration (unknown key, bad value, missing input)."""
