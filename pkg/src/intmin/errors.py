"""Exception hierarchy shared by every solver component."""


class IntminError(Exception):
    """Base class for all errors raised by this package."""


class StructuralError(IntminError):
    """A lattice or matrix argument violates a structural precondition."""


class PrecisionLoss(IntminError):
    """Integerizing a real matrix would need a shift larger than its trace."""


class InteriorViolation(IntminError):
    """A point handed to the barrier is not strictly inside the polytope."""

    def __init__(self, index, slack):
        super().__init__(f"constraint {index} has non-positive slack {slack!r}")
        self.index = index
        self.slack = slack


class NonConvergence(IntminError):
    """Newton centering hit its iteration cap."""

    def __init__(self, decrement, iterations):
        super().__init__(
            f"centering stopped after {iterations} iterations with decrement {decrement:.3e}")
        self.decrement = decrement
        self.iterations = iterations


class OracleInconsistency(IntminError):
    """The separation oracle returned a malformed or non-separating half-space."""


class MalformedOracle(OracleInconsistency):
    """An evaluation oracle returned something other than an integer."""


class EmptySlice(IntminError):
    """A hyperplane misses the ellipsoid it was supposed to slice."""


class InfeasibleSlab(IntminError):
    """The current slab contains no integral point (problem hypothesis violated)."""


class AmbiguousYes(IntminError):
    """The oracle accepted a non-integral point that could not be rounded safely."""

    def __init__(self, point):
        super().__init__("oracle answered YES at a non-integral point")
        self.point = point


class NonTermination(IntminError):
    """The block budget ran out before the search reached dimension one."""

    def __init__(self, message, transcript=None):
        super().__init__(message)
        self.transcript = transcript


class MalformedInstance(IntminError, ValueError):
    """An instance description cannot be parsed."""
