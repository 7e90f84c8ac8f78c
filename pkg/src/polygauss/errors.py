"""Exception and warning types raised by polygauss."""


class PolyGaussError(Exception):
    """Base class for all polygauss failures."""


class InvalidPolyhedron(PolyGaussError, ValueError):
    pass


class LPNumericalFailure(PolyGaussError):
    """The simplex kernel cycled, hit its iteration cap, or lost feasibility."""


class EmptyPolyhedron(PolyGaussError):
    pass


class NotGeneralPosition(PolyGaussError):
    def __init__(self, witness=None):
        self.witness = witness
        msg = "family of half-spaces is not in general position"
        if witness is not None:
            msg += f" (witness J={sorted(witness)})"
        super().__init__(msg)


class SingularGram(PolyGaussError):
    """Cholesky of a Gram submatrix failed: the point is on (or near) the singular locus."""

    def __init__(self, face, pivot=None):
        self.face = tuple(face)
        self.pivot = pivot
        super().__init__(f"Gram submatrix for J={list(self.face)} is numerically singular"
                         + (f" (pivot {pivot:.3e})" if pivot is not None else ""))


class NonPositiveDefinite(PolyGaussError, ValueError):
    pass


class ShiftTooSmall(PolyGaussError):
    pass


class StepUnderflow(PolyGaussError):
    pass


class NonFiniteState(PolyGaussError):
    pass


class SingularLocusCrossing(PolyGaussError):
    pass


class DegenerateNearTie(UserWarning):
    """A rank or strictness decision fell within 10x of its threshold."""
