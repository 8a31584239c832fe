"""Exception hierarchy shared by all cpd3 modules."""


class CpdError(Exception):
    """Base class for all cpd3 errors."""


class InvalidArgumentError(CpdError, ValueError):
    """Arguments violate a documented precondition (shape/range mismatch)."""


class MalformedFileError(CpdError):
    """A tensor or factor file could not be parsed."""


class ResourceLimitError(CpdError):
    """A size guard tripped before allocating an infeasible problem."""


class DegenerateInputError(CpdError):
    """The input is structurally degenerate for the requested operation
    (zero matrix, persistently colliding pencil eigenvalues, ...)."""


class RankDeficiencyError(CpdError):
    """A matrix that must have full rank for the procedure is rank deficient."""


class NotAPowerError(CpdError):
    """A vector expected to be a symmetric outer power of a single vector
    is not one (within tolerance).  Signals an upstream condition failure."""

    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit


class ConditionViolationError(CpdError):
    """The checkable rank/kernel condition failed at the current level.

    Carries the kernel dimension that was found so the caller's level-search
    loop can log why the current level was insufficient.
    """

    def __init__(self, message, expected_dim=None, found_dim=None, eigenvalue_tail=None):
        super().__init__(message)
        self.expected_dim = expected_dim
        self.found_dim = found_dim
        self.eigenvalue_tail = eigenvalue_tail


class AllLevelsRejectedError(ConditionViolationError):
    """Every level l = 0..l_max was rejected.

    ``per_level`` maps each attempted l to a short description (kernel
    dimension found, or the failure kind for post-kernel phases).
    """

    def __init__(self, message, per_level):
        super().__init__(message)
        self.per_level = dict(per_level)


class RecoveryFailureError(CpdError):
    """The hyperplane search could not assemble a full factor matrix."""


class VerificationFailureError(CpdError):
    """A computed result failed its final reconstruction/fit check."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
