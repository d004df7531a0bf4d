"""Exception types shared by every module of the package."""


class CocycleError(Exception):
    """Base class for all errors raised by this package."""


class NotHermitian(CocycleError, ValueError):
    """Input to a hermitian routine is not hermitian within tolerance."""


class NoConvergence(CocycleError, ArithmeticError):
    """An iterative routine exhausted its iteration budget."""


class Singular(CocycleError, ArithmeticError):
    """A matrix failed the invertibility threshold."""


class NotConvergent(CocycleError, ValueError):
    """Series inputs lie outside the region where the series converges."""


class BudgetExceeded(CocycleError, RuntimeError):
    """The series stopped at k_max before the tail bound reached tol."""


class DepthExceeded(CocycleError, RuntimeError):
    """Refinement hit the depth limit or the simplex budget.

    ``worst_norm`` is the largest max-norm of the U-matrices among the
    simplices that could not be accepted.
    """

    def __init__(self, message, worst_norm=float("nan"), depth=0, simplex_count=0):
        super().__init__(message)
        self.worst_norm = worst_norm
        self.depth = depth
        self.simplex_count = simplex_count


class ParseError(CocycleError, ValueError):
    """A chain file could not be parsed."""
