"""Exception types raised by the toolkit."""


class KingError(ValueError):
    """Base class for all toolkit errors."""


class NonUnitVector(KingError):
    pass


class NonHermitian(KingError):
    pass


class FormMismatch(KingError):
    """The two closed forms of the coefficients disagree (implementation bug)."""


class DegenerateTriple(KingError):
    pass


class Infeasible(KingError):
    def __init__(self, message, sign_norms=None):
        super().__init__(message)
        self.sign_norms = sign_norms


class ROutOfRange(KingError):
    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class InvariantViolation(KingError):
    pass


class ProbabilityLeak(KingError):
    pass
