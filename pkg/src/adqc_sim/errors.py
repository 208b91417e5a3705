"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ScheduleError(ValueError):
    """An anneal schedule violates its monotonicity or grid invariants."""


class RangeError(ValueError):
    """A programmed coupling falls outside the programmable range."""


class SizeError(ValueError):
    """A dense construction was requested for a system that is too large."""


class ParityError(ValueError):
    """An initial condition is incompatible with the fermion-parity sector."""


class AccuracyError(RuntimeError):
    """A numerical scheme was asked to run outside its accuracy envelope."""


class PhysicalityError(ValueError):
    """A state or channel violates positivity, trace or norm bounds."""


class DegenerateFitError(RuntimeError):
    """The fit Jacobian is singular, so the parameters are not identifiable."""


class ConfigError(ValueError):
    """An experiment configuration failed schema validation."""


class RegimeWarning(UserWarning):
    """A closed-form approximation is evaluated outside its validity regime."""


class LowContrastWarning(UserWarning):
    """A spectral column is too flat for a reliable ridge estimate."""
