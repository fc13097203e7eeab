"""Exception hierarchy shared across the package."""


class PassclustError(Exception):
    """Base class for all package errors."""


class DataFormatError(PassclustError):
    """Malformed dataset or constraint input (bad row, tag, or index)."""


class InfeasibleInstanceError(PassclustError):
    """The ML/CL constraints admit no assignment (hard contradiction)."""


class InfeasibleSubproblemError(InfeasibleInstanceError):
    """A restricted reassignment subproblem has no feasible labeling."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration
