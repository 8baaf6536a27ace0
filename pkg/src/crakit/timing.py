"""Segment recurrence and interval conditions for attack-cycle timing.

During segment j of an attack cycle the top-order barrier derivative is
bounded below by a constant rate s_j, so every lower-order derivative is
bounded by the polynomial obtained from repeated integration.  The
recurrence

    a[0][i] = c_i
    a[j][r-p] = sum_{i=1..p} a[j-1][r-i] tau_j^{p-i} / (p-i)!  +  s_j tau_j^p / p!

propagates guaranteed derivative bounds across segment boundaries; the
segment polynomial in sigma = t - xi_j,

    sum_{d=0..r-1} a[j-1][d] sigma^d / d!  +  s_j sigma^r / r!,

must stay nonnegative on [0, tau_j] for the barrier itself to stay
nonnegative, and the cycle restores the level set when the final row
dominates the initial one.

Nonnegativity on an interval is certified by Bernstein-coefficient
subdivision: on each cell the polynomial's Bernstein coefficients bound it
from below, all coefficients >= -tol certifies the cell, and any sampled
value below -tol is a concrete counterexample.  For univariate polynomials
this decision is exact in the limit of subdivision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .errors import DimensionMismatch
from .poly import Polynomial
from .verdict import CheckResult, Verdict


@dataclass(frozen=True)
class LevelSet:
    """Nonnegative thresholds c_0..c_{r-1}, one per derivative order."""

    c: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        if not self.c:
            raise ValueError("level set needs at least one threshold")
        if any(v < 0.0 for v in self.c):
            raise ValueError("level-set thresholds must be nonnegative")

    @property
    def order(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class RateVector:
    """Per-segment certified rates s_1..s_k."""

    s: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(float(v) for v in self.s))
        if any(not math.isfinite(v) for v in self.s):
            raise ValueError("rates must be finite")

    @property
    def segments(self) -> int:
        return len(self.s)


@dataclass(frozen=True)
class RecurrenceTable:
    """Rows a[0..k], each holding bounds a[j][0..r-1] indexed by derivative
    order, plus the segment boundary times xi_1..xi_{k+1}."""

    a: Tuple[Tuple[float, ...], ...]
    xi: Tuple[float, ...]

    @property
    def segments(self) -> int:
        return len(self.a) - 1

    @property
    def order(self) -> int:
        return len(self.a[0])


def partial_sums(timings: Sequence[float], t1: float = 0.0) -> Tuple[float, ...]:
    """Segment boundaries: xi_1 = t1, xi_{j+1} = xi_j + tau_j."""
    xi = [float(t1)]
    for tau in timings:
        if tau < 0.0:
            raise ValueError("segment durations must be nonnegative")
        xi.append(xi[-1] + float(tau))
    return tuple(xi)


def recurrence(
    level: LevelSet,
    rates: RateVector,
    timings: Sequence[float],
    order: Optional[int] = None,
) -> RecurrenceTable:
    """Propagate the guaranteed derivative bounds across all segments."""
    r = level.order if order is None else order
    if r != level.order:
        raise DimensionMismatch("order does not match level-set length")
    if rates.segments != len(timings):
        raise DimensionMismatch("rates and timings disagree on segment count")
    rows: List[Tuple[float, ...]] = [level.c]
    for s_j, tau in zip(rates.s, timings):
        prev = rows[-1]
        row = [0.0] * r
        for p in range(1, r + 1):
            acc = s_j * tau**p / math.factorial(p)
            for i in range(1, p + 1):
                acc += prev[r - i] * tau ** (p - i) / math.factorial(p - i)
            row[r - p] = acc
        rows.append(tuple(row))
    return RecurrenceTable(tuple(rows), partial_sums(timings))


def segment_polynomial(a_row: Sequence[float], s_j: float, order: int) -> Polynomial:
    """Guaranteed barrier lower bound on one segment, as a univariate
    polynomial in sigma = t - xi_j."""
    if len(a_row) != order:
        raise DimensionMismatch("row length does not match order")
    terms = [(a_row[d] / math.factorial(d), (d,)) for d in range(order)]
    terms.append((s_j / math.factorial(order), (order,)))
    return Polynomial(1, terms)


# ---------------------------------------------------------------------------
# Bernstein certification
# ---------------------------------------------------------------------------


def _power_coeffs(p: Polynomial) -> List[float]:
    if p.var_count != 1:
        raise DimensionMismatch("expected a univariate polynomial")
    deg = p.degree
    coeffs = [0.0] * (deg + 1)
    for c, (e,) in p.terms:
        coeffs[e] += c
    return coeffs


def _bernstein_coeffs(coeffs: List[float], lo: float, width: float) -> List[float]:
    """Bernstein coefficients of the polynomial on [lo, lo + width]."""
    d = len(coeffs) - 1
    # Taylor shift to lo, then scale the variable by the width.
    shifted = [0.0] * (d + 1)
    for j, a_j in enumerate(coeffs):
        if a_j == 0.0:
            continue
        for k in range(j + 1):
            shifted[k] += a_j * math.comb(j, k) * lo ** (j - k)
    scaled = [shifted[k] * width**k for k in range(d + 1)]
    return [
        sum(
            math.comb(i, j) / math.comb(d, j) * scaled[j] for j in range(i + 1)
        )
        for i in range(d + 1)
    ]


def check_segment_nonnegative(
    p: Polynomial,
    lo: float,
    hi: float,
    tol: float = 1e-9,
    max_cells: int = 10_000,
) -> CheckResult:
    """Certified nonnegativity of a univariate polynomial on [lo, hi].

    HOLDS certifies p >= -tol on the whole interval (all Bernstein
    coefficients of every leaf cell at least -tol); FAILS carries a sampled
    point with value below -tol; UNKNOWN means the subdivision budget ran
    out with the worst pending Bernstein bound still inside (-tol, 0).
    """
    if lo > hi:
        raise ValueError("empty interval")
    coeffs = _power_coeffs(p)

    def value_at(t: float) -> float:
        v = 0.0
        for c in reversed(coeffs):
            v = v * t + c
        return v

    if hi == lo:
        v = value_at(lo)
        if v < -tol:
            return CheckResult(Verdict.FAILS, v, (lo,))
        return CheckResult(Verdict.HOLDS, v)

    stack = [(lo, hi)]
    cells = 0
    certified_min = math.inf
    worst_pending = math.inf
    while stack:
        a, b = stack.pop()
        cells += 1
        for t in (a, 0.5 * (a + b), b):
            v = value_at(t)
            if v < -tol:
                return CheckResult(Verdict.FAILS, v, (t,))
        bern = _bernstein_coeffs(coeffs, a, b - a)
        low = min(bern)
        if low >= -tol:
            certified_min = min(certified_min, low)
            continue
        if cells >= max_cells:
            worst_pending = min(worst_pending, low)
            continue
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            # interval at float resolution; endpoint samples above were clean
            certified_min = min(certified_min, min(value_at(a), value_at(b)))
            continue
        stack.append((mid, b))
        stack.append((a, mid))
    if worst_pending < math.inf:
        return CheckResult(Verdict.UNKNOWN, worst_pending, note="budget exhausted")
    return CheckResult(Verdict.HOLDS, certified_min)


def check_return(table: RecurrenceTable, level: LevelSet, tol: float = 1e-9) -> bool:
    """Final row dominates the level-set thresholds (within float slack)."""
    if table.order != level.order:
        raise DimensionMismatch("table order does not match level set")
    return all(a_k >= c_i - tol for a_k, c_i in zip(table.a[-1], level.c))


@dataclass(frozen=True)
class TimingReport:
    """Aggregate feasibility of one (level set, rates, timings) triple."""

    verdict: Verdict
    table: RecurrenceTable
    segment_results: Tuple[CheckResult, ...]
    return_ok: bool
    return_margin: float

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS


def timing_feasible(
    level: LevelSet,
    rates: RateVector,
    timings: Sequence[float],
    tol: float = 1e-9,
    max_cells: int = 10_000,
) -> TimingReport:
    """Check all segment-nonnegativity conditions and the return condition.

    The return condition is pure arithmetic and is evaluated first so that
    infeasible timing tuples are rejected cheaply during sweeps; segment
    certificates are only computed when it passes.
    """
    if rates.segments != len(timings):
        raise DimensionMismatch("rates and timings disagree on segment count")
    table = recurrence(level, rates, timings)
    return_margin = min(
        (a_k - c_i for a_k, c_i in zip(table.a[-1], level.c)), default=math.inf
    )
    return_ok = check_return(table, level, tol)
    if not return_ok:
        return TimingReport(Verdict.FAILS, table, (), False, return_margin)
    results = []
    r = level.order
    for j, (s_j, tau) in enumerate(zip(rates.s, timings)):
        seg = segment_polynomial(table.a[j], s_j, r)
        results.append(check_segment_nonnegative(seg, 0.0, tau, tol, max_cells))
    if any(res.verdict is Verdict.FAILS for res in results):
        verdict = Verdict.FAILS
    elif any(res.verdict is Verdict.UNKNOWN for res in results):
        verdict = Verdict.UNKNOWN
    else:
        verdict = Verdict.HOLDS
    return TimingReport(verdict, table, tuple(results), True, return_margin)
