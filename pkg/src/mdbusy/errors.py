"""Exception hierarchy shared by every module of the package."""


class MdBusyError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(MdBusyError, ValueError):
    """An input lies outside its admissible domain.

    ``param`` names the offending parameter so callers (the CLI in
    particular) can report it without parsing the message.
    """

    def __init__(self, param: str, message: str):
        super().__init__(f"{param}: {message}")
        self.param = param


class AccuracyDomainError(ParameterDomainError):
    def __init__(self, value):
        super().__init__("delta_t", f"accuracy must be > 0, got {value!r}")


class PrecisionDomainError(ParameterDomainError):
    def __init__(self, value):
        super().__init__(
            "delta_p", f"precision must lie in the open interval (0, 0.5), got {value!r}"
        )


class WindowDomainError(ParameterDomainError):
    def __init__(self, lower, upper):
        super().__init__(
            "support", f"need 0 <= L < U, got L={lower!r}, U={upper!r}"
        )


class NumericalError(MdBusyError, ArithmeticError):
    """Base for failures of the numerics themselves (CLI exit code 3)."""


class TransformEvaluationError(NumericalError):
    """The transform failed or returned a non-finite value at s = j*omega*n."""

    def __init__(self, n: int, message: str = ""):
        detail = f": {message}" if message else ""
        super().__init__(f"transform evaluation failed at term n={n}{detail}")
        self.n = n


class NumericalInstabilityError(NumericalError):
    """A partial sum of the inversion series became non-finite."""


class TermCountError(NumericalError):
    """The series would need more terms than the configured limit."""


class SingularEvaluationError(NumericalError):
    """A transform denominator vanished at the requested argument."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, achieved: float, requested: float):
        super().__init__(
            f"quadrature reached relative error {achieved:.3g}, requested {requested:.3g}"
        )
        self.achieved = achieved
        self.requested = requested
