"""Exception types shared across the package."""


class GroupVnaError(Exception):
    """Base class for all package errors."""


class SpecError(GroupVnaError):
    """A group-spec document is malformed; the message names the offending field."""


class UnsupportedFamilyError(SpecError):
    """The requested group family is not implemented."""


class DomainMismatchError(GroupVnaError):
    """Elements of different group handles were mixed in one operation."""


class ParameterError(GroupVnaError, ValueError):
    """An operation parameter (budget, count, threshold) is out of range."""


class BudgetExceededError(GroupVnaError):
    """A closure or orbit computation hit its element budget."""

    def __init__(self, message: str, *, budget: int, partial_count: int):
        super().__init__(message)
        self.budget = budget
        self.partial_count = partial_count


class RequiresFiniteError(GroupVnaError):
    """A finite group (within the configured maximum order) is required."""


class ConsistencyError(GroupVnaError):
    """An internal cross-check failed; the result must not be trusted."""


class DegenerateSpectrumError(GroupVnaError):
    """Random central elements kept producing eigenvalue collisions."""


class PreconditionError(GroupVnaError):
    """A documented operation precondition does not hold for the inputs."""
