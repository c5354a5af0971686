"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`MMSpaceError`, so callers can catch one type.  The CLI maps the
``exit_code`` attribute onto its process exit status.
"""


class MMSpaceError(ValueError):
    exit_code = 2


# -- construction -----------------------------------------------------------

class BadWeights(MMSpaceError):
    def __init__(self, index, message="weights must be positive and sum to 1"):
        self.index = index
        super().__init__(f"{message} (offending index {index})")


class NonSymmetric(MMSpaceError):
    def __init__(self, i, j):
        self.i, self.j = i, j
        super().__init__(f"distance matrix is not symmetric at ({i}, {j})")


class TriangleViolation(MMSpaceError):
    def __init__(self, i, j, k):
        self.i, self.j, self.k = i, j, k
        super().__init__(
            f"triangle inequality fails: d({i},{k}) > d({i},{j}) + d({j},{k})")


class BadDistance(MMSpaceError):
    """Entry outside [0, 1], nonzero diagonal, or zero between distinct
    points of a space not flagged as pseudometric."""

    def __init__(self, i, j, message):
        self.i, self.j = i, j
        super().__init__(f"{message} at ({i}, {j})")


class SelfLoop(MMSpaceError):
    def __init__(self, i):
        self.i = i
        super().__init__(f"graph has a self-loop at vertex {i}")


class ZeroMultiplicity(MMSpaceError):
    def __init__(self, i):
        self.i = i
        super().__init__(f"multiplicity of point {i} must be a positive integer")


class BadDistribution(MMSpaceError):
    pass


class DimensionMismatch(MMSpaceError):
    pass


# -- computation ------------------------------------------------------------

class TooLarge(MMSpaceError):
    exit_code = 4

    def __init__(self, message, size=None, limit=None):
        self.size, self.limit = size, limit
        super().__init__(message)


class NonPositiveEpsilon(MMSpaceError):
    pass


class NonPositiveDelta(MMSpaceError):
    pass


class CliqueSearchBudgetExceeded(TooLarge):
    pass


class ExactBudgetExceeded(TooLarge):
    pass


class CoverBudgetExceeded(TooLarge):
    pass


class RefinementTooLarge(TooLarge):
    pass


class InfeasibleKappas(MMSpaceError):
    exit_code = 3


class BadTarget(MMSpaceError):
    pass


class NotLipschitz(MMSpaceError):
    pass


class GridMismatch(MMSpaceError):
    pass


class UnknownFamily(MMSpaceError):
    pass


class NotConverged(MMSpaceError):
    def __init__(self, which):
        self.which = which
        super().__init__(f"sequence {which!r} did not pass the convergence test")
