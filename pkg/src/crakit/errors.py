"""Exception types shared across the toolkit."""

from __future__ import annotations


class CrakitError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(CrakitError, ValueError):
    """Operands disagree on variable count or vector length."""


class MixedSign(CrakitError):
    """An input-gain entry has a certified range straddling zero, so the
    relative degree is ill-defined on the requested domain."""

    def __init__(self, channel: int, lo: float, hi: float):
        super().__init__(
            f"input gain channel {channel} has certified range "
            f"[{lo:.6g}, {hi:.6g}] straddling zero"
        )
        self.channel = channel
        self.lo = lo
        self.hi = hi


class MaxOrderExceeded(CrakitError):
    """No Lie-derivative order up to the configured cap exposes the input."""

    def __init__(self, cap: int):
        super().__init__(f"input does not appear up to Lie-derivative order {cap}")
        self.cap = cap


class PolicyNotPolynomial(CrakitError, TypeError):
    """Operation requires a closed-form polynomial policy."""


class NoFeasiblePolicy(CrakitError):
    """Policy search exhausted its budget without a feasible candidate."""


class PointwiseInfeasible(CrakitError):
    """The clamped minimum-norm input cannot satisfy the barrier constraint."""


class DesignInfeasible(CrakitError):
    """The parameter sweep exhausted its grid without a certified design.

    ``budget_exhausted`` counts grid points abandoned because a
    certification run hit its cell budget (distinct from certified
    infeasibility).
    """

    def __init__(self, message: str, grid_points: int = 0, budget_exhausted: int = 0):
        super().__init__(message)
        self.grid_points = grid_points
        self.budget_exhausted = budget_exhausted


class SpecFormatError(CrakitError, ValueError):
    """A structured input file is malformed; ``location`` names the field."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location
