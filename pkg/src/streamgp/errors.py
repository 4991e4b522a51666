"""Exception types raised across the package."""


class ContractError(ValueError):
    """Inputs violate a documented precondition (shapes, finiteness, ranges)."""


class ConditioningError(ArithmeticError):
    """A Cholesky factorisation failed even after adding jitter."""

    def __init__(self, matrix_name, detail=""):
        self.matrix_name = matrix_name
        msg = f"Cholesky of {matrix_name} failed after jitter"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class InvalidMessageError(ConditioningError):
    """The old posterior is not narrower than the old prior.

    The streaming update needs ``S_a^{-1} - K_aa'^{-1}`` to be positive
    semi-definite; otherwise the implied likelihood message has negative
    precision and the combined system is not positive definite.
    """

    def __init__(self, detail=""):
        self.matrix_name = "old-posterior message"
        msg = "invalid old-posterior message"
        if detail:
            msg += f": {detail}"
        ArithmeticError.__init__(self, msg)
