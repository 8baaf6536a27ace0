"""Axis-aligned boxes and semialgebraic regions.

A ``Region`` is a box intersected with polynomial inequality constraints;
it is the common domain description for certification queries (state space,
safe set, level sets, and their complements' covering pieces).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Iterable, List, Sequence, Tuple

from .errors import DimensionMismatch

if TYPE_CHECKING:  # pragma: no cover
    from .poly import Polynomial


class Relation(Enum):
    """Constraint sense: the polynomial is required >= 0 or <= 0."""

    GE = ">=0"
    LE = "<=0"


@dataclass(frozen=True)
class Box:
    """Axis-aligned box  prod_i [lo_i, hi_i]."""

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi):
            raise DimensionMismatch("box bounds have different lengths")
        for l, h in zip(self.lo, self.hi):
            if l > h:
                raise ValueError(f"empty box: lower bound {l} exceeds upper {h}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def widths(self) -> Tuple[float, ...]:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    @property
    def midpoint(self) -> Tuple[float, ...]:
        return tuple(0.5 * (l + h) for l, h in zip(self.lo, self.hi))

    def contains(self, x: Sequence[float], tol: float = 0.0) -> bool:
        if len(x) != self.dim:
            raise DimensionMismatch("point dimension does not match box")
        return all(l - tol <= v <= h + tol for v, l, h in zip(x, self.lo, self.hi))

    def clamp(self, x: Sequence[float]) -> Tuple[float, ...]:
        if len(x) != self.dim:
            raise DimensionMismatch("point dimension does not match box")
        return tuple(min(max(v, l), h) for v, l, h in zip(x, self.lo, self.hi))

    def split(self, axis: int) -> Tuple["Box", "Box"]:
        """Bisect along ``axis`` at the midpoint."""
        mid = 0.5 * (self.lo[axis] + self.hi[axis])
        left_hi = list(self.hi)
        left_hi[axis] = mid
        right_lo = list(self.lo)
        right_lo[axis] = mid
        return Box(self.lo, tuple(left_hi)), Box(tuple(right_lo), self.hi)

    def widest_axis(self) -> int:
        widths = self.widths
        return max(range(self.dim), key=lambda i: (widths[i], -i))

    def vertices(self) -> Iterable[Tuple[float, ...]]:
        """All 2^dim corner points, lexicographic order."""
        n = self.dim
        for mask in range(1 << n):
            yield tuple(
                self.hi[i] if (mask >> i) & 1 else self.lo[i] for i in range(n)
            )

    @staticmethod
    def singleton(point: Sequence[float]) -> "Box":
        p = tuple(float(v) for v in point)
        return Box(p, p)


@dataclass(frozen=True)
class Region:
    """A box with polynomial side constraints.

    Each constraint is a pair ``(p, rel)`` meaning ``p(x) >= 0`` (GE) or
    ``p(x) <= 0`` (LE) must hold; the region is the subset of the box where
    every constraint is satisfied.
    """

    box: Box
    constraints: Tuple[Tuple["Polynomial", Relation], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for p, _ in self.constraints:
            if p.var_count != self.box.dim:
                raise DimensionMismatch(
                    "constraint polynomial dimension does not match box"
                )

    @property
    def dim(self) -> int:
        return self.box.dim

    def with_constraint(self, p: "Polynomial", rel: Relation) -> "Region":
        return Region(self.box, self.constraints + ((p, rel),))

    def with_constraints(
        self, extra: Iterable[Tuple["Polynomial", Relation]]
    ) -> "Region":
        return Region(self.box, self.constraints + tuple(extra))

    def contains(self, x: Sequence[float], tol: float = 0.0) -> bool:
        if not self.box.contains(x, tol):
            return False
        for p, rel in self.constraints:
            v = p.evaluate(x)
            if rel is Relation.GE and v < -tol:
                return False
            if rel is Relation.LE and v > tol:
                return False
        return True

    def constraint_values(self, x: Sequence[float]) -> List[float]:
        """Signed slack of each constraint at ``x`` (>= 0 means satisfied)."""
        out = []
        for p, rel in self.constraints:
            v = p.evaluate(x)
            out.append(v if rel is Relation.GE else -v)
        return out
