"""Control-affine plant description and the bundled cruise-control study.

A ``CpsSystem`` packages the polynomial dynamics xdot = f(x) + g(x) u, the
compact state region (a box, optionally intersected with a norm ball), the
input box, the scalar barrier polynomial h whose nonnegativity defines the
safe set, and the controller sampling period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Tuple

from .poly import (
    Polynomial,
    RelativeDegree,
    VectorField,
    input_gain,
    lie_chain,
    relative_degree,
)
from .regions import Box, Region, Relation


@dataclass(frozen=True, eq=False)
class CpsSystem:
    variables: Tuple[str, ...]
    f: VectorField
    g: Tuple[VectorField, ...]  # one column per input channel
    h: Polynomial
    state_box: Box
    input_box: Box
    epoch_seconds: float
    norm_ball: Optional[float] = None  # ||x||^2 <= norm_ball, if given
    max_order: int = 10

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "g", tuple(self.g))
        n = len(self.variables)
        if self.f.dim != n or self.h.var_count != n or self.state_box.dim != n:
            raise ValueError("state dimension mismatch across fields")
        if any(col.dim != n for col in self.g):
            raise ValueError("input columns must match the state dimension")
        if self.input_box.dim != len(self.g):
            raise ValueError("input box must match the number of input columns")
        if self.epoch_seconds <= 0.0:
            raise ValueError("epoch duration must be positive")

    @property
    def dim(self) -> int:
        return len(self.variables)

    @property
    def input_dim(self) -> int:
        return len(self.g)

    # cached views -------------------------------------------------------

    def _cache(self) -> dict:
        cache = self.__dict__.get("_memo")
        if cache is None:
            object.__setattr__(self, "_memo", {})
            cache = self.__dict__["_memo"]
        return cache

    def drift_derivative(self, order: int) -> Polynomial:
        """L_f^order h, cached."""
        cache = self._cache()
        key = ("drift", order)
        if key not in cache:
            cache[key] = lie_chain(self.h, self.f, order)
        return cache[key]

    def relative_degree(self) -> RelativeDegree:
        cache = self._cache()
        if "reldeg" not in cache:
            cache["reldeg"] = relative_degree(
                self.h, self.f, self.g, self.state_region(), self.max_order
            )
        return cache["reldeg"]

    def gain_row(self) -> Tuple[Polynomial, ...]:
        """Input gain row at the certified relative degree."""
        cache = self._cache()
        if "gain" not in cache:
            r = self.relative_degree().order
            cache["gain"] = input_gain(self.h, self.f, self.g, r)
        return cache["gain"]

    def state_region(self) -> Region:
        """The compact state region (box plus optional norm-ball constraint)."""
        cache = self._cache()
        if "state_region" not in cache:
            region = Region(self.state_box)
            if self.norm_ball is not None:
                ball = Polynomial.constant(self.dim, self.norm_ball)
                for i in range(self.dim):
                    v = Polynomial.variable(self.dim, i)
                    ball = ball - v * v
                region = region.with_constraint(ball, Relation.GE)
            cache["state_region"] = region
        return cache["state_region"]

    def safe_region(self) -> Region:
        """Safe set: the state region intersected with {h >= 0}."""
        cache = self._cache()
        if "safe_region" not in cache:
            cache["safe_region"] = self.state_region().with_constraint(
                self.h, Relation.GE
            )
        return cache["safe_region"]

    def zero_input_box(self) -> Box:
        return Box((0.0,) * self.input_dim, (0.0,) * self.input_dim)

    def vector_field_at(
        self, x: Sequence[float], u: Sequence[float]
    ) -> Tuple[float, ...]:
        """xdot = f(x) + g(x) u at a point."""
        out = list(self.f.evaluate(x))
        for j, col in enumerate(self.g):
            u_j = u[j]
            if u_j:
                for i, p in enumerate(col.entries):
                    out[i] += p.evaluate(x) * u_j
        return tuple(out)


def acc_system(
    lead_acceleration: float = 0.3,
    mass: float = 1.0,
    resistance: Tuple[float, float, float] = (0.0, 1.0, 0.5),
    state_norm_bound: float = 10.0,
    min_gap: float = 2.0,
    epoch_seconds: float = 0.1,
) -> CpsSystem:
    """Two-vehicle adaptive cruise control plant.

    State (v_l, v_f, D): lead velocity, following velocity, and gap.  The
    follower's acceleration is the input minus a quadratic rolling
    resistance, both scaled by mass; the barrier is the gap margin
    D - min_gap.
    """
    n = 3
    v_l = Polynomial.variable(n, 0)
    v_f = Polynomial.variable(n, 1)
    gap = Polynomial.variable(n, 2)
    f0, f1, f2 = resistance
    drag = (
        Polynomial.constant(n, f0) + v_f * f1 + v_f * v_f * f2
    ) * (-1.0 / mass)
    f = VectorField((Polynomial.constant(n, lead_acceleration), drag, v_l - v_f))
    g_col = VectorField(
        (Polynomial.zero(n), Polynomial.constant(n, 1.0 / mass), Polynomial.zero(n))
    )
    radius = math.sqrt(state_norm_bound)
    return CpsSystem(
        variables=("v_l", "v_f", "D"),
        f=f,
        g=(g_col,),
        h=gap - min_gap,
        state_box=Box((-radius,) * n, (radius,) * n),
        input_box=Box((-1.0,), (1.0,)),
        epoch_seconds=epoch_seconds,
        norm_ball=state_norm_bound,
    )
