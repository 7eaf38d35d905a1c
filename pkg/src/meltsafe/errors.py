"""Exception types shared across the package."""


class MeltsafeError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(MeltsafeError, ValueError):
    """A physical parameter or configuration value is out of its admissible range."""


class DegenerateInterfaceError(MeltsafeError, RuntimeError):
    """The melt interface collapsed below the configured minimum thickness."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t={time:.6g} s)")
        self.time = time


class PhaseDisappearanceError(MeltsafeError, RuntimeError):
    """One phase of a two-phase run shrank below the configured minimum thickness."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t={time:.6g} s)")
        self.time = time


class NumericalBlowupError(MeltsafeError, RuntimeError):
    """Non-finite values appeared in the solution."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t={time:.6g} s)")
        self.time = time


class CflViolationError(MeltsafeError, ValueError):
    """Requested explicit time step exceeds the diffusive stability bound."""


class ConfluentGainsError(MeltsafeError, ValueError):
    """The closed-form barrier solution requires two distinct decay rates."""


class ConfigError(MeltsafeError, ValueError):
    """A scenario configuration document could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AssumptionError(MeltsafeError, ValueError):
    """Scenario data violates a precondition required by the safety guarantees.

    Carries the full validation report so callers can show every failed check.
    """

    def __init__(self, report):
        failures = ", ".join(c.name for c in report.failures)
        super().__init__(f"scenario assumptions failed: {failures}")
        self.report = report


class DegenerateSeriesError(MeltsafeError, ValueError):
    """A decay fit was requested on a series with non-positive samples."""
