"""Exception hierarchy shared by every simulator module."""


class C3puError(Exception):
    """Base class for simulator errors."""


class ValidationError(C3puError, ValueError):
    """An input or parameter violates a documented precondition."""


class ConfigurationError(ValidationError):
    """A parameter set is internally inconsistent (e.g. negative discharge charge)."""


class CalibrationError(C3puError):
    """A scaling factor cannot be derived from the probe data."""


class TimingViolation(C3puError):
    """A pulse does not fit inside its clock window."""


class TrainingError(C3puError):
    """Training finished below the requested accuracy floor."""


class MonteCarloError(C3puError):
    """One or more Monte Carlo samples failed."""

    def __init__(self, failures):
        self.failures = list(failures)
        idx = ", ".join(str(i) for i, _ in self.failures[:10])
        super().__init__(f"{len(self.failures)} Monte Carlo sample(s) failed (indices: {idx})")


class NonlinearityWarning(UserWarning):
    """A cell's gate voltage left the transistor's linear window."""
