"""Exception hierarchy shared by every hyperfix module.

Errors fall into two families so the CLI can map them onto exit codes:
``NumericalFailure`` (a solver gave up) and ``PreconditionError`` (the
caller asked for something the mathematics does not allow).
"""


class HyperfixError(Exception):
    """Base class for all package errors."""


class NumericalFailure(HyperfixError):
    """A numerical routine stopped without meeting its target."""


class NoConvergence(NumericalFailure):
    """Iterative solver hit its iteration cap."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class IterationCap(NoConvergence):
    """Fixed-point engine exhausted its iteration budget."""


class PreconditionError(HyperfixError, ValueError):
    """Input violates a mathematical precondition of the operation."""


# -- hyperreal field ---------------------------------------------------------

class WindowMismatch(PreconditionError):
    pass


class WindowOverflow(HyperfixError, ArithmeticError):
    """An exponent left the representable window [-K, K]."""


class DivisionByZero(HyperfixError, ZeroDivisionError):
    pass


class NotBounded(PreconditionError):
    """Standard part requested for an unbounded hyperreal."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SingularMatrix(HyperfixError, ArithmeticError):
    pass


# -- spaces ------------------------------------------------------------------

class NotInPsiClass(PreconditionError):
    def __init__(self, message, invariant=None, index=None):
        super().__init__(message)
        self.invariant = invariant
        self.index = index


class NotStrictlyMonotone(PreconditionError):
    pass


# -- fixed point engines -----------------------------------------------------

class NotAContraction(PreconditionError):
    pass


class EpsOutOfRange(PreconditionError):
    pass


class AlphaOutOfRange(PreconditionError):
    pass


class DomainViolation(PreconditionError):
    pass
