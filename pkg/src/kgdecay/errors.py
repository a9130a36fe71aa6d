"""Exception hierarchy shared by all modules.

Each class maps onto one failure category of the experiment runner, which
translates them into process exit codes (see ``kgdecay.cli``).
"""


class KgDecayError(Exception):
    """Base class for all library errors."""


class InvalidConfigError(KgDecayError, ValueError):
    """Malformed parameters or configuration (exit code 2)."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class HypothesisError(KgDecayError, ValueError):
    """A mathematical hypothesis of the requested experiment fails (exit code 2)."""


class ConditionVError(HypothesisError):
    """The potential does not decay fast enough."""


class InstabilityError(HypothesisError):
    """A bound state lies at or below -m^2, so the Klein-Gordon flow is unstable."""


class NonRegularError(HypothesisError):
    """Zero is a resonance or eigenvalue, so threshold results do not apply."""


class DomainError(KgDecayError, ValueError):
    """Argument outside the domain of a function."""


class InsufficientDataError(KgDecayError, ValueError):
    """Too few samples for a fit."""


class BranchAmbiguityError(KgDecayError, ValueError):
    """A resolvent was requested on its cut without a limiting-absorption side."""


class BoundaryContaminationError(KgDecayError, ValueError):
    """Data plus propagation distance reaches the artificial boundary."""


class NumericalFailure(KgDecayError, RuntimeError):
    """An iterative or quadrature method did not converge (exit code 3)."""

    def __init__(self, message, gap=None):
        self.gap = gap
        super().__init__(message if gap is None else f"{message} (last gap {gap:.3e})")


class NearSingularError(NumericalFailure):
    """A resolvent was requested too close to an eigenvalue."""

    def __init__(self, message, condition=None):
        self.condition = condition
        KgDecayError.__init__(self, message)
        self.gap = None


class ContourError(NumericalFailure):
    """Riesz contour radius collapsed because eigenvalues cluster."""


class RefinementError(NumericalFailure):
    """A quadrature panel error estimate stayed above tolerance."""


class QuadratureWarning(UserWarning):
    """Quadrature error estimate above the requested tolerance."""


class TailWarning(UserWarning):
    """An integrand has not reached its decay regime at the truncation time."""
