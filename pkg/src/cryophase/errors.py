"""Exception taxonomy shared across the solver stack."""


class CryophaseError(Exception):
    """Base class for all library errors."""


class ValidationError(CryophaseError, ValueError):
    """Invalid configuration, parameters, or input data."""


class DomainError(CryophaseError, ValueError):
    """A constitutive function was evaluated outside its physical domain."""


class NonConvergence(CryophaseError, RuntimeError):
    """An iterative solver exhausted its iteration budget.

    Carries the iteration count and the last residual so callers can
    report whether a smaller time step or looser tolerance would help.
    """

    def __init__(self, what, iterations, residual, hint=""):
        self.what = what
        self.iterations = iterations
        self.residual = residual
        msg = f"{what} did not converge after {iterations} iterations " \
              f"(residual {residual:.3e})"
        if hint:
            msg += f"; {hint}"
        super().__init__(msg)


class LinearSolveFailure(NonConvergence):
    """The inner conjugate-gradient solve stalled or broke down."""


class OrderRegression(CryophaseError, RuntimeError):
    """A measured convergence order fell below its required threshold."""


class PositivityLossWarning(UserWarning):
    """The full-energy temperature update produced a non-positive value."""
