"""Exception hierarchy shared by the solvers, the coupling loop and the harness."""


class ThermoFSIError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ThermoFSIError, ValueError):
    """Invalid parameters, mismatched vector lengths or swapped coupling roles."""


class DegenerateScalingError(ThermoFSIError, ArithmeticError):
    """The reference norm of a relative criterion is zero."""


class SequencingError(ThermoFSIError, RuntimeError):
    """A stage quantity was requested before it was computed."""


class SubsolverError(ThermoFSIError, RuntimeError):
    """A subsolver could not solve its stage system (e.g. Newton divergence)."""


class CouplingNonConvergence(ThermoFSIError, RuntimeError):
    """The fixed-point coupling loop hit its iteration limit.

    Attributes
    ----------
    iterations : int
        Number of fluid/structure solve pairs performed.
    residual_norm : float
        2-norm of the last interface residual.
    """

    def __init__(self, iterations, residual_norm):
        self.iterations = iterations
        self.residual_norm = residual_norm
        super().__init__(
            f"coupling did not converge in {iterations} iterations "
            f"(last residual norm {residual_norm:.3e})"
        )


class StepSizeUnderflow(ThermoFSIError, RuntimeError):
    """The step controller asked for a step below ``dt_min``."""
