"""Exact multivariate polynomial arithmetic and Lie-derivative calculus.

Polynomials are stored as canonical term lists (coefficient, exponent
vector) in graded lexicographic order.  Coefficients are double-precision
floats; the symbolic operations (sum, product, partial derivative) are
exact over that representation, so repeated Lie derivatives introduce no
approximation beyond the coefficients themselves.

The Lie derivative of a scalar ``p`` along a vector field ``F`` is

    L_F p = sum_i (dp/dx_i) F_i,

iterated derivatives ``L_f^i p`` follow by induction with ``L_f^0 p = p``,
and the input gain of order ``r`` is the row vector ``L_g L_f^{r-1} h``
with one entry per input column of ``g``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionMismatch, MaxOrderExceeded, MixedSign
from .regions import Box, Region

Exponents = Tuple[int, ...]
Term = Tuple[float, Exponents]


def _grlex_key(exps: Exponents) -> Tuple[int, Exponents]:
    return (sum(exps), exps)


class Polynomial:
    """Immutable multivariate polynomial with canonical term order.

    ``terms`` is a tuple of ``(coefficient, exponents)`` pairs with unique
    exponent vectors, no exact-zero coefficients, sorted in graded
    lexicographic order.  The zero polynomial has an empty term list.
    """

    __slots__ = ("var_count", "terms")

    def __init__(self, var_count: int, terms: Iterable[Term] = ()):
        if var_count < 0:
            raise ValueError("var_count must be nonnegative")
        merged: Dict[Exponents, float] = {}
        for coeff, exps in terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != var_count:
                raise DimensionMismatch(
                    f"term exponent vector has length {len(exps)}, expected {var_count}"
                )
            if any(e < 0 for e in exps):
                raise ValueError("exponents must be nonnegative")
            merged[exps] = merged.get(exps, 0.0) + float(coeff)
        canon = tuple(
            (c, e)
            for e, c in sorted(merged.items(), key=lambda kv: _grlex_key(kv[0]))
            if c != 0.0
        )
        object.__setattr__(self, "var_count", var_count)
        object.__setattr__(self, "terms", canon)

    def __setattr__(self, *_):  # pragma: no cover - guard only
        raise AttributeError("Polynomial is immutable")

    # -- constructors -----------------------------------------------------

    @staticmethod
    def zero(var_count: int) -> "Polynomial":
        return Polynomial(var_count)

    @staticmethod
    def constant(var_count: int, value: float) -> "Polynomial":
        return Polynomial(var_count, [(value, (0,) * var_count)])

    @staticmethod
    def variable(var_count: int, index: int) -> "Polynomial":
        if not 0 <= index < var_count:
            raise IndexError(f"variable index {index} out of range")
        exps = tuple(1 if i == index else 0 for i in range(var_count))
        return Polynomial(var_count, [(1.0, exps)])

    # -- predicates --------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((sum(e) for _, e in self.terms), default=0)

    def constant_value(self) -> float:
        """Value if the polynomial is constant; raises otherwise."""
        if self.is_zero:
            return 0.0
        if len(self.terms) == 1 and sum(self.terms[0][1]) == 0:
            return self.terms[0][0]
        raise ValueError("polynomial is not constant")

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other: Union["Polynomial", float, int]) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.var_count != self.var_count:
                raise DimensionMismatch("polynomials have different variable counts")
            return other
        return Polynomial.constant(self.var_count, float(other))

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        return Polynomial(self.var_count, self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.var_count, [(-c, e) for c, e in self.terms])

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, float)):
            return Polynomial(self.var_count, [(c * other, e) for c, e in self.terms])
        other = self._coerce(other)
        out: Dict[Exponents, float] = {}
        for c1, e1 in self.terms:
            for c2, e2 in other.terms:
                exps = tuple(a + b for a, b in zip(e1, e2))
                out[exps] = out.get(exps, 0.0) + c1 * c2
        return Polynomial(self.var_count, [(c, e) for e, c in out.items()])

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.var_count == other.var_count
            and self.terms == other.terms
        )

    def __hash__(self) -> int:
        return hash((self.var_count, self.terms))

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, x: Sequence[float]) -> float:
        """Value at a single point (pure-Python fast path)."""
        if len(x) != self.var_count:
            raise DimensionMismatch(
                f"point has dimension {len(x)}, expected {self.var_count}"
            )
        total = 0.0
        for c, exps in self.terms:
            v = c
            for xi, e in zip(x, exps):
                if e:
                    v *= xi**e
            total += v
        return total

    def evaluate_many(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized values at an (N, var_count) array of points."""
        pts = np.asarray(pts, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.var_count:
            raise DimensionMismatch("expected an (N, var_count) array")
        out = np.zeros(pts.shape[0])
        for c, exps in self.terms:
            v = np.full(pts.shape[0], c)
            for i, e in enumerate(exps):
                if e:
                    v = v * pts[:, i] ** e
            out += v
        return out

    # -- calculus -------------------------------------------------------------

    def partial_derivative(self, index: int) -> "Polynomial":
        """Exact partial derivative with respect to variable ``index``."""
        if not 0 <= index < self.var_count:
            raise IndexError(f"variable index {index} out of range")
        terms = []
        for c, exps in self.terms:
            e = exps[index]
            if e:
                new = list(exps)
                new[index] = e - 1
                terms.append((c * e, tuple(new)))
        return Polynomial(self.var_count, terms)

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for c, exps in self.terms:
            mono = "*".join(
                f"x{i}" if e == 1 else f"x{i}^{e}" for i, e in enumerate(exps) if e
            )
            parts.append(f"{c:g}" if not mono else f"{c:g}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = __str__


@dataclass(frozen=True)
class VectorField:
    """Polynomial vector field on R^n: one entry per state component."""

    entries: Tuple[Polynomial, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ValueError("vector field needs at least one entry")
        n = self.entries[0].var_count
        if any(p.var_count != n for p in self.entries):
            raise DimensionMismatch("vector field entries disagree on variable count")
        if len(self.entries) != n:
            raise DimensionMismatch(
                f"vector field has {len(self.entries)} entries for {n} variables"
            )

    @property
    def dim(self) -> int:
        return len(self.entries)

    def evaluate(self, x: Sequence[float]) -> Tuple[float, ...]:
        return tuple(p.evaluate(x) for p in self.entries)


def lie_derivative(p: Polynomial, field: VectorField) -> Polynomial:
    """L_F p = sum_i (dp/dx_i) F_i, exact."""
    if field.dim != p.var_count:
        raise DimensionMismatch("vector field dimension does not match polynomial")
    out = Polynomial.zero(p.var_count)
    for i, f_i in enumerate(field.entries):
        out = out + p.partial_derivative(i) * f_i
    return out


def lie_chain(h: Polynomial, f: VectorField, order: int) -> Polynomial:
    """Iterated drift derivative: order 0 returns ``h`` itself."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    p = h
    for _ in range(order):
        p = lie_derivative(p, f)
    return p


def input_gain(
    h: Polynomial, f: VectorField, g: Sequence[VectorField], order: int
) -> Tuple[Polynomial, ...]:
    """Gain row at order ``r``: L_{g_j} L_f^{r-1} h for each input column."""
    if order < 1:
        raise ValueError("order must be at least 1")
    base = lie_chain(h, f, order - 1)
    return tuple(lie_derivative(base, g_j) for g_j in g)


@dataclass(frozen=True)
class RelativeDegree:
    """Certified relative degree: the lowest order whose gain row is
    provably nonvanishing on the domain, with the certifying range bounds
    per input channel."""

    order: int
    gain_bounds: Tuple[Tuple[float, float], ...]
    cells_expanded: int


def relative_degree(
    h: Polynomial,
    f: VectorField,
    g: Sequence[VectorField],
    domain: Union[Box, Region],
    max_order: int = 10,
    tol: float = 1e-9,
    budget: int = 20000,
) -> RelativeDegree:
    """Smallest order r with L_g L_f^i h identically zero for i < r-1 and
    the order-r gain certified bounded away from zero on ``domain``.

    Raises ``MixedSign`` if the first symbolically nonzero gain row has a
    certified range containing zero on the domain, and ``MaxOrderExceeded``
    if every row up to ``max_order`` is identically zero.
    """
    from .certify import bound_range  # deferred: certify depends on poly

    region = domain if isinstance(domain, Region) else Region(domain)
    for r in range(1, max_order + 1):
        row = input_gain(h, f, g, r)
        if all(p.is_zero for p in row):
            continue
        bounds = []
        cells = 0
        nonvanishing = False
        for j, p in enumerate(row):
            lo, hi, used = bound_range(p, region, tol=tol, budget=budget)
            bounds.append((lo, hi))
            cells += used
            if lo > tol or hi < -tol:
                nonvanishing = True
        if nonvanishing:
            return RelativeDegree(r, tuple(bounds), cells)
        worst = max(range(len(bounds)), key=lambda j: bounds[j][1] - bounds[j][0])
        raise MixedSign(worst, bounds[worst][0], bounds[worst][1])
    raise MaxOrderExceeded(max_order)


def monomial_basis(var_count: int, degree: int) -> List[Exponents]:
    """All exponent vectors of total degree <= ``degree``, graded lex order."""
    out = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(var_count), total):
            exps = [0] * var_count
            for i in combo:
                exps[i] += 1
            out.append(tuple(exps))
    # combinations_with_replacement already yields each multiset once
    return sorted(set(out), key=_grlex_key)
