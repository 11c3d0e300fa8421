"""Exception hierarchy shared by all pdcsim modules."""


class PdcSimError(Exception):
    """Base class for every error raised by pdcsim."""


class DomainError(PdcSimError, ValueError):
    """An input lies outside the range where a model is defined."""


class SpecError(PdcSimError, ValueError):
    """A spectrum, filter or waveguide description violates its invariants."""


class CalibrationError(PdcSimError, RuntimeError):
    """Dispersion calibration failed to converge."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class DegenerateStateError(PdcSimError, RuntimeError):
    """A two-photon state has (numerically) vanishing norm."""


class NumericalError(PdcSimError, RuntimeError):
    """A linear-algebra routine did not converge."""


class ConfigError(PdcSimError, ValueError):
    """Run configuration is malformed or contains unknown keys."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class CalibrationWarning(UserWarning):
    """Calibration converged but a soft condition is outside tolerance."""
