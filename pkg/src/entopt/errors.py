"""Exception hierarchy.  Every error carries a human-readable message."""


class EntoptError(Exception):
    """Base class for package errors."""


class ValidationError(EntoptError, ValueError):
    """Input violates a structural precondition."""


class NotPositiveDefinite(EntoptError, ValueError):
    """A Cholesky pivot fell below the relative threshold."""


class SingularBlock(EntoptError, ValueError):
    """A block that must be inverted is numerically singular."""


class NotDataFusion(ValidationError):
    """Operation needs ``B^T B`` positive definite."""


class DegenerateInstance(ValidationError):
    """A map would produce an instance outside its model (e.g. an all-zero row)."""


class TooLarge(EntoptError, ValueError):
    """Exhaustive enumeration would exceed the size guard."""


class Infeasible(EntoptError):
    """The relaxation objective is ``-inf`` at the starting point."""


class NumericError(EntoptError, ArithmeticError):
    """An iterative numeric routine failed to converge."""
