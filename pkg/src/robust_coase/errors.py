"""Exception hierarchy shared across the package."""


class RobustCoaseError(Exception):
    """Base class for all package errors."""


class DomainError(RobustCoaseError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class NoThresholdError(DomainError):
    """The requested cutoff exceeds the mean, so no threshold exists."""


class PressError(RobustCoaseError):
    """The conditional-mean map failed to be monotone."""


class PartitionError(RobustCoaseError, ValueError):
    """A value partition is empty, overlapping or does not cover the support."""


class PreconditionError(RobustCoaseError, ValueError):
    """A documented precondition of the operation does not hold."""


class NonConvergenceError(RobustCoaseError):
    """An iterative procedure did not converge before its cap."""


class ConsistencyError(RobustCoaseError):
    """Two routes that must agree produced different answers."""


class ProfileError(RobustCoaseError):
    """A strategy profile is not defined on a state that was reached."""
