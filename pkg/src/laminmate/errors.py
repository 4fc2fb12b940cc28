"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of the operation."""


class InternalConsistencyError(RuntimeError):
    """A construction produced data violating one of its own invariants."""


class RayBrokenError(RuntimeError):
    """A ray continuation ran into the critical orbit and cannot proceed.

    Carries the potential at which the continuation failed.
    """

    def __init__(self, message: str, potential: float):
        super().__init__(message)
        self.potential = potential


class RayNonexistentError(RuntimeError):
    """A ray in bubbles hits the free critical point or one of its preimages."""


class ConvergenceError(RuntimeError):
    """An iterative solver did not reach its tolerance within the budget."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual
