"""Exception hierarchy shared by all modules."""


class EKLError(Exception):
    """Base class. ``exit_code`` is what the CLI maps the error to."""

    exit_code = 2

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        return {"type": type(self).__name__, "message": str(self), "details": {k: str(v) for k, v in sorted(self.details.items())}}


class MalformedConfig(EKLError):
    pass


class InvariantViolation(EKLError):
    pass


class RankDeficient(EKLError):
    pass


class NotContained(EKLError):
    pass


class NotStable(EKLError):
    pass


class IllConditioned(EKLError):
    pass


class BudgetExceeded(EKLError):
    exit_code = 3


class OutsideConvergence(EKLError):
    pass


class PoleRequested(EKLError):
    """Raised at s = d when the dual-lattice delta condition holds.

    ``residue`` is the residue of K itself and ``finite_part`` the constant
    term of its Laurent expansion, both as EKValue-like objects.
    """

    exit_code = 1

    def __init__(self, message, residue=None, finite_part=None, completed_residue=None, **details):
        super().__init__(message, **details)
        self.residue = residue
        self.finite_part = finite_part
        self.completed_residue = completed_residue


class QuadratureNotConverged(EKLError):
    exit_code = 3


class NotCritical(EKLError):
    pass


class InconsistentCharacter(EKLError):
    pass


class CoprimalityViolation(EKLError):
    pass


class NotOrdinary(EKLError):
    pass


class BadFactorization(EKLError):
    pass


class LevelTooSmall(EKLError):
    pass


class NoDecompositionFound(EKLError):
    exit_code = 3


class OracleMismatch(EKLError):
    exit_code = 1
