"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes, so library code should raise
the most specific class that applies.
"""


class QuadwalkError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(QuadwalkError):
    """Malformed model/increment file or JSON not matching the documented schema."""


class HypothesisError(QuadwalkError):
    """A hard model hypothesis (homogeneity bounds, zero drift, full-rank
    covariance) fails, so downstream classification is undefined."""


class ReflectionRegimeError(QuadwalkError):
    """An effective boundary drift is zero or points outside the admissible
    angular range; the angle formulas do not apply."""


class NotLeftContinuousError(QuadwalkError):
    """Exact embedded-chain solve requested for a walk whose interior law can
    jump down by more than one unit in the transverse coordinate."""


class ConvergenceError(QuadwalkError):
    """An iterative solver ran out of budget before reaching its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual
