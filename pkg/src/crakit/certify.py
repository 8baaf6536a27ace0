"""Certified polynomial bounds over semialgebraic regions.

This is the feasibility oracle behind every inequality check in the
toolkit: a deterministic branch-and-bound over axis-aligned cells with
interval enclosures.  Cells certifiably violating a region constraint are
discarded; the minimum of the surviving enclosure lower bounds is a valid
lower bound of the objective over the feasible set, and sampled feasible
points provide upper witnesses.  Splitting bisects the cell axis with the
largest smear (axis width times the gradient enclosure magnitude), falling
back to the widest axis, and cells are explored lowest-lower-bound first
with lexicographic tie-breaking, so results are reproducible run to run.

The same engine backs the architecture-independent rate bounds: for
objectives affine in the input, the minimizing input on a cell is resolved
per channel from the sign of the gain enclosure (a box-vertex rule), so the
input dimensions never need to be branched.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, List, Optional, Sequence, Tuple, Union

from .errors import (
    NoFeasiblePolicy,
    PointwiseInfeasible,
    PolicyNotPolynomial,
)
from .poly import Polynomial, monomial_basis
from .regions import Box, Region, Relation
from .verdict import CheckResult, Verdict

if TYPE_CHECKING:  # pragma: no cover
    from .system import CpsSystem
    from .timing import LevelSet

# Outward widening applied to every enclosure so plain float rounding can
# never push a reported lower bound above the true minimum.
_GUARD = 1e-12


# ---------------------------------------------------------------------------
# interval arithmetic
# ---------------------------------------------------------------------------


def _ipow(lo: float, hi: float, e: int) -> Tuple[float, float]:
    if e == 0:
        return 1.0, 1.0
    if e % 2 == 1 or lo >= 0.0:
        return lo**e, hi**e
    if hi <= 0.0:
        return hi**e, lo**e
    return 0.0, max(lo**e, hi**e)


def interval_eval(
    p: Polynomial, lo: Sequence[float], hi: Sequence[float]
) -> Tuple[float, float]:
    """Sound enclosure of ``p`` over the box [lo, hi]."""
    total_lo = 0.0
    total_hi = 0.0
    for c, exps in p.terms:
        t_lo, t_hi = c, c
        for i, e in enumerate(exps):
            if not e:
                continue
            p_lo, p_hi = _ipow(lo[i], hi[i], e)
            cands = (t_lo * p_lo, t_lo * p_hi, t_hi * p_lo, t_hi * p_hi)
            t_lo = min(cands)
            t_hi = max(cands)
        total_lo += t_lo
        total_hi += t_hi
    total_lo -= _GUARD * (1.0 + abs(total_lo))
    total_hi += _GUARD * (1.0 + abs(total_hi))
    return total_lo, total_hi


def _cell_feasible(
    constraints: Sequence[Tuple[Polynomial, Relation]],
    lo: Tuple[float, ...],
    hi: Tuple[float, ...],
) -> bool:
    """False only when the cell certifiably violates some constraint."""
    for p, rel in constraints:
        c_lo, c_hi = interval_eval(p, lo, hi)
        if rel is Relation.GE and c_hi < 0.0:
            return False
        if rel is Relation.LE and c_lo > 0.0:
            return False
    return True


# ---------------------------------------------------------------------------
# branch and bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CertifiedBound:
    """Result of a bounded minimization.

    ``lower_bound`` is always a valid lower bound of the objective over the
    feasible subset (+inf when the region is certifiably empty), whether or
    not the run ``converged`` within its cell budget.  ``witness`` is the
    best sampled feasible point and its objective value, if any was found.
    """

    lower_bound: float
    witness: Optional[Tuple[Tuple[float, ...], float]]
    cells_expanded: int
    converged: bool

    @property
    def upper_value(self) -> float:
        return self.witness[1] if self.witness else math.inf


EncloseFn = Callable[[Tuple[float, ...], Tuple[float, ...]], Tuple[float, float]]
PointValueFn = Callable[[Tuple[float, ...]], float]


def _sample_candidates(cell: Box):
    """Deterministic probe points: the midpoint, then quarter-offsets along
    each axis (midpoints alone often sit outside thin feasible sets)."""
    mid = cell.midpoint
    yield mid
    for i in range(cell.dim):
        quarter = 0.25 * (cell.hi[i] - cell.lo[i])
        if quarter == 0.0:
            continue
        for delta in (quarter, -quarter):
            probe = list(mid)
            probe[i] += delta
            yield tuple(probe)


def _branch_and_bound(
    box: Box,
    constraints: Sequence[Tuple[Polynomial, Relation]],
    enclose: EncloseFn,
    objective_grads: Sequence[Sequence[Polynomial]],
    point_value: PointValueFn,
    point_feasible: Callable[[Tuple[float, ...]], bool],
    tol: float,
    budget: int,
    lower_stop: Optional[float] = None,
    upper_stop: Optional[float] = None,
) -> CertifiedBound:
    n = box.dim
    cons_grads = [
        [p.partial_derivative(i) for i in range(n)] for p, _ in constraints
    ]

    def prepare(cell: Box):
        """Feasibility-screen a cell and pick its split axis.

        Returns None when the cell certifiably violates a constraint.
        The split axis maximizes width times the summed enclosure magnitude
        of the objective gradient plus the gradients of every constraint the
        cell still straddles: splitting where nothing varies is wasted work.
        """
        lo, hi = cell.lo, cell.hi
        straddling = []
        for idx, (p, rel) in enumerate(constraints):
            c_lo, c_hi = interval_eval(p, lo, hi)
            if rel is Relation.GE:
                if c_hi < 0.0:
                    return None
                if c_lo < 0.0:
                    straddling.append(idx)
            else:
                if c_lo > 0.0:
                    return None
                if c_hi > 0.0:
                    straddling.append(idx)
        best_axis, best_key = 0, (-1.0, -1.0)
        for i in range(n):
            w = hi[i] - lo[i]
            if w <= 0.0:
                continue
            mag = 0.0
            for grad in objective_grads[i]:
                g_lo, g_hi = interval_eval(grad, lo, hi)
                mag += max(abs(g_lo), abs(g_hi))
            for idx in straddling:
                g_lo, g_hi = interval_eval(cons_grads[idx][i], lo, hi)
                mag += max(abs(g_lo), abs(g_hi))
            key = (w * mag, w)
            if key > best_key:
                best_key, best_axis = key, i
        return best_axis

    best_ub = math.inf
    best_witness: Optional[Tuple[Tuple[float, ...], float]] = None
    floor_lb = math.inf  # bounds of cells too small to split further
    expanded = 0
    heap: List[Tuple[float, Tuple[float, ...], Tuple[float, ...], int]] = []

    def try_sample(cell: Box) -> None:
        nonlocal best_ub, best_witness
        for probe in _sample_candidates(cell):
            if not point_feasible(probe):
                continue
            value = point_value(probe)
            if value < best_ub:
                best_ub = value
                best_witness = (probe, value)

    def push(cell: Box) -> None:
        nonlocal floor_lb
        axis = prepare(cell)
        if axis is None:
            return
        lb = enclose(cell.lo, cell.hi)[0]
        try_sample(cell)
        if max(cell.widths) <= 0.0:
            floor_lb = min(floor_lb, lb)
            return
        heapq.heappush(heap, (lb, cell.lo, cell.hi, axis))

    push(box)
    while heap:
        lb, lo, hi, axis = heapq.heappop(heap)
        global_lb = min(lb, floor_lb)
        if upper_stop is not None and best_ub < upper_stop:
            return CertifiedBound(global_lb, best_witness, expanded, True)
        if lower_stop is not None and global_lb >= lower_stop:
            return CertifiedBound(global_lb, best_witness, expanded, True)
        if global_lb >= best_ub - tol:
            return CertifiedBound(global_lb, best_witness, expanded, True)
        if expanded >= budget:
            return CertifiedBound(global_lb, best_witness, expanded, False)
        expanded += 1
        mid = 0.5 * (lo[axis] + hi[axis])
        if mid <= lo[axis] or mid >= hi[axis]:
            floor_lb = min(floor_lb, lb)  # cell at float resolution
            continue
        left, right = Box(lo, hi).split(axis)
        push(left)
        push(right)

    if upper_stop is not None and best_ub < upper_stop:
        return CertifiedBound(floor_lb, best_witness, expanded, True)
    # heap exhausted: every cell was discarded or resolved
    return CertifiedBound(floor_lb, best_witness, expanded, True)


def bound_min_on_region(
    p: Polynomial,
    region: Region,
    tol: float = 1e-6,
    budget: int = 20000,
    lower_stop: Optional[float] = None,
    upper_stop: Optional[float] = None,
) -> CertifiedBound:
    """Certified lower bound (and sampled upper witness) of ``p`` over a
    region.  ``lower_bound`` is +inf when the region is certifiably empty."""
    grads = [[p.partial_derivative(i)] for i in range(p.var_count)]
    return _branch_and_bound(
        region.box,
        region.constraints,
        lambda lo, hi: interval_eval(p, lo, hi),
        grads,
        p.evaluate,
        region.contains,
        tol,
        budget,
        lower_stop,
        upper_stop,
    )


def bound_range(
    p: Polynomial, region: Region, tol: float = 1e-6, budget: int = 20000
) -> Tuple[float, float, int]:
    """Certified enclosure [lo, hi] of the range of ``p`` over a region."""
    low = bound_min_on_region(p, region, tol=tol, budget=budget)
    high = bound_min_on_region(-p, region, tol=tol, budget=budget)
    return low.lower_bound, -high.lower_bound, low.cells_expanded + high.cells_expanded


# ---------------------------------------------------------------------------
# policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlphaFunction:
    """Linear extended class-K function alpha(z) = gain * z, gain > 0."""

    gain: float = 1.0

    def __post_init__(self):
        if self.gain <= 0.0:
            raise ValueError("alpha gain must be positive")

    def __call__(self, z: float) -> float:
        return self.gain * z


@dataclass(frozen=True)
class PolynomialPolicy:
    """Closed-form state feedback: one polynomial per input channel."""

    channels: Tuple[Polynomial, ...]

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if not self.channels:
            raise ValueError("policy needs at least one channel")

    @property
    def input_dim(self) -> int:
        return len(self.channels)

    def evaluate(self, x: Sequence[float]) -> Tuple[float, ...]:
        return tuple(ch.evaluate(x) for ch in self.channels)

    @staticmethod
    def constant(var_count: int, values: Sequence[float]) -> "PolynomialPolicy":
        return PolynomialPolicy(
            tuple(Polynomial.constant(var_count, v) for v in values)
        )


@dataclass(frozen=True)
class MinNormPolicy:
    """Pointwise minimum-norm controller: at each state, the smallest input
    keeping the top-order barrier derivative above the class-K margin."""

    level: Tuple[float, ...]
    alpha: AlphaFunction = field(default_factory=AlphaFunction)


Policy = Union[PolynomialPolicy, MinNormPolicy]


def _require_polynomial(policy: Policy) -> PolynomialPolicy:
    if not isinstance(policy, PolynomialPolicy):
        raise PolicyNotPolynomial(
            "operation requires a closed-form polynomial policy"
        )
    return policy


# ---------------------------------------------------------------------------
# rate bounds (the segment constants of the timing recurrence)
# ---------------------------------------------------------------------------


def adversarial_rate_bound(
    system: "CpsSystem",
    input_box: Box,
    tol: float = 1e-3,
    budget: int = 20000,
) -> CertifiedBound:
    """Certified lower bound of the top-order barrier derivative over the
    safe set when the input ranges freely over ``input_box``.

    The derivative is affine in the input, so on every state cell the worst
    input per channel is a box endpoint chosen from the sign of the gain
    enclosure; the input dimensions are never branched.
    """
    r = system.relative_degree().order
    drift = system.drift_derivative(r)
    gains = system.gain_row()
    if input_box.dim != len(gains):
        raise ValueError("input box dimension does not match input channels")
    region = system.safe_region()

    def enclose(lo: Tuple[float, ...], hi: Tuple[float, ...]) -> Tuple[float, float]:
        t_lo, t_hi = interval_eval(drift, lo, hi)
        for j, gain in enumerate(gains):
            g_lo, g_hi = interval_eval(gain, lo, hi)
            u_lo, u_hi = input_box.lo[j], input_box.hi[j]
            prods = (g_lo * u_lo, g_lo * u_hi, g_hi * u_lo, g_hi * u_hi)
            t_lo += min(prods)
            # upper end of min_u g*u over the gain enclosure
            top = max(min(g_lo * u_lo, g_lo * u_hi), min(g_hi * u_lo, g_hi * u_hi))
            if g_lo < 0.0 < g_hi:
                top = max(top, 0.0)
            t_hi += top
        return t_lo, t_hi

    def worst_input(x: Tuple[float, ...]) -> Tuple[float, ...]:
        return tuple(
            input_box.lo[j] if gain.evaluate(x) > 0.0 else input_box.hi[j]
            for j, gain in enumerate(gains)
        )

    def point_value(x: Tuple[float, ...]) -> float:
        value = drift.evaluate(x)
        for gain, u_j in zip(gains, worst_input(x)):
            value += gain.evaluate(x) * u_j
        return value

    # smear of the input-optimized objective: drift gradient plus gain
    # gradients scaled by the largest admissible input magnitude
    u_mag = [max(abs(input_box.lo[j]), abs(input_box.hi[j])) for j in range(input_box.dim)]
    grads = []
    for i in range(system.dim):
        contributions = [drift.partial_derivative(i)]
        for j, gain in enumerate(gains):
            contributions.append(gain.partial_derivative(i) * u_mag[j])
        grads.append(contributions)

    bound = _branch_and_bound(
        region.box,
        region.constraints,
        enclose,
        grads,
        point_value,
        region.contains,
        tol,
        budget,
    )
    if bound.witness is not None:
        x, value = bound.witness
        bound = CertifiedBound(
            bound.lower_bound,
            (tuple(x) + worst_input(x), value),
            bound.cells_expanded,
            bound.converged,
        )
    return bound


def closed_loop_derivative(system: "CpsSystem", policy: PolynomialPolicy) -> Polynomial:
    """Top-order barrier derivative with the policy substituted for the input."""
    r = system.relative_degree().order
    expr = system.drift_derivative(r)
    for gain, lam in zip(system.gain_row(), policy.channels):
        expr = expr + gain * lam
    return expr


def closed_loop_rate_bound(
    system: "CpsSystem",
    policy: Policy,
    region: Region,
    tol: float = 1e-3,
    budget: int = 20000,
) -> CertifiedBound:
    """Certified lower bound of the closed-loop top-order derivative over
    one region piece.  Requires a polynomial policy."""
    lam = _require_polynomial(policy)
    return bound_min_on_region(
        closed_loop_derivative(system, lam), region, tol=tol, budget=budget
    )


def recovery_rate_bound(
    system: "CpsSystem",
    policy: Policy,
    level: "LevelSet",
    tol: float = 1e-3,
    budget: int = 20000,
) -> Tuple[CertifiedBound, List[CertifiedBound]]:
    """Closed-loop rate over the safe set minus the level set.

    The complement is covered by one piece per derivative order
    (safe set intersected with {i-th derivative <= c_i}); the overall bound
    is the piecewise minimum.  Overlap between pieces is harmless, it only
    makes the bound conservative.
    """
    lam = _require_polynomial(policy)
    expr = closed_loop_derivative(system, lam)
    pieces: List[CertifiedBound] = []
    for i, c_i in enumerate(level.c):
        piece = system.safe_region().with_constraint(
            Polynomial.constant(system.dim, c_i) - system.drift_derivative(i),
            Relation.GE,
        )
        pieces.append(bound_min_on_region(expr, piece, tol=tol, budget=budget))
    overall_lb = min((b.lower_bound for b in pieces), default=math.inf)
    overall_wit = None
    for b in pieces:
        if b.witness and (overall_wit is None or b.witness[1] < overall_wit[1]):
            overall_wit = b.witness
    cells = sum(b.cells_expanded for b in pieces)
    converged = all(b.converged for b in pieces)
    return CertifiedBound(overall_lb, overall_wit, cells, converged), pieces


def level_region(system: "CpsSystem", level: "LevelSet") -> Region:
    """The level set: safe set intersected with {i-th derivative >= c_i}."""
    region = system.safe_region()
    for i, c_i in enumerate(level.c):
        region = region.with_constraint(
            system.drift_derivative(i) - Polynomial.constant(system.dim, c_i),
            Relation.GE,
        )
    return region


def verify_inside_condition(
    system: "CpsSystem",
    policy: Policy,
    level: "LevelSet",
    alpha: AlphaFunction,
    tol: float = 1e-9,
    budget: int = 20000,
) -> CheckResult:
    """Certified check that, inside the level set, the closed-loop top-order
    derivative dominates -alpha applied to the top-level margin.  This is
    the forward-invariance condition for the level set."""
    lam = _require_polynomial(policy)
    r = system.relative_degree().order
    expr = closed_loop_derivative(system, lam) + (
        system.drift_derivative(r - 1)
        - Polynomial.constant(system.dim, level.c[r - 1])
    ) * alpha.gain
    bound = bound_min_on_region(
        expr, level_region(system, level), tol=tol, budget=budget,
        lower_stop=-tol, upper_stop=-tol,
    )
    if math.isinf(bound.lower_bound) and bound.witness is None:
        return CheckResult(Verdict.HOLDS, math.inf, note="empty region")
    if bound.witness and bound.witness[1] < -tol:
        return CheckResult(Verdict.FAILS, bound.witness[1], bound.witness[0])
    if bound.converged and bound.lower_bound >= -tol:
        return CheckResult(Verdict.HOLDS, bound.lower_bound)
    return CheckResult(Verdict.UNKNOWN, bound.lower_bound, note="budget exhausted")


def verify_policy_range(
    policy: Policy,
    region: Region,
    input_box: Box,
    tol: float = 1e-9,
    budget: int = 20000,
) -> CheckResult:
    """Certified containment of every policy channel in the input box over
    the state region."""
    lam = _require_polynomial(policy)
    if lam.input_dim != input_box.dim:
        raise ValueError("policy channels do not match input box dimension")
    worst = math.inf
    for j, ch in enumerate(lam.channels):
        for expr, side in (
            (ch - Polynomial.constant(region.dim, input_box.lo[j]), "min"),
            (Polynomial.constant(region.dim, input_box.hi[j]) - ch, "max"),
        ):
            bound = bound_min_on_region(
                expr, region, tol=tol, budget=budget,
                lower_stop=-tol, upper_stop=-tol,
            )
            if bound.witness and bound.witness[1] < -tol:
                return CheckResult(
                    Verdict.FAILS,
                    bound.witness[1],
                    bound.witness[0],
                    note=f"channel {j} violates input {side}",
                )
            if not (bound.converged and bound.lower_bound >= -tol):
                return CheckResult(
                    Verdict.UNKNOWN, bound.lower_bound, note="budget exhausted"
                )
            worst = min(worst, bound.lower_bound)
    return CheckResult(Verdict.HOLDS, worst)


# ---------------------------------------------------------------------------
# policy synthesis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthesisConfig:
    template_degree: int = 0
    max_evals: int = 60
    min_step: float = 1e-2
    tol: float = 1e-9
    rate_tol: float = 1e-3
    budget: int = 20000


def synthesize_policy(
    system: "CpsSystem",
    level: "LevelSet",
    alpha: AlphaFunction,
    config: SynthesisConfig = SynthesisConfig(),
) -> Tuple[PolynomialPolicy, float]:
    """Best feasible polynomial policy of the template degree, by certified
    derivative-free search.

    The objective is the certified closed-loop rate over the safe set minus
    the level set; feasibility requires the inside condition and input-range
    containment to hold.  Multi-start: the zero policy and the saturated
    constant policy at every input-box vertex, refined by a coordinate
    pattern search with shrinking steps.  Raises ``NoFeasiblePolicy`` when
    nothing feasible is found within the evaluation budget.
    """
    n = system.dim
    m = len(system.gain_row())
    basis = monomial_basis(n, config.template_degree)
    width = len(basis)
    zero_exp = (0,) * n
    const_idx = basis.index(zero_exp)
    u_box = system.input_box

    def make_policy(theta: Tuple[float, ...]) -> PolynomialPolicy:
        channels = []
        for j in range(m):
            coeffs = theta[j * width : (j + 1) * width]
            channels.append(
                Polynomial(n, [(c, e) for c, e in zip(coeffs, basis) if c != 0.0])
            )
        return PolynomialPolicy(tuple(channels))

    evals = 0
    cache = {}

    def score(theta: Tuple[float, ...]) -> float:
        """Certified rate if feasible, -inf otherwise."""
        nonlocal evals
        if theta in cache:
            return cache[theta]
        evals += 1
        policy = make_policy(theta)
        value = -math.inf
        if verify_policy_range(
            policy, system.safe_region(), u_box, config.tol, config.budget
        ).holds and verify_inside_condition(
            system, policy, level, alpha, config.tol, config.budget
        ).holds:
            bound, _ = recovery_rate_bound(
                system, policy, level, config.rate_tol, config.budget
            )
            value = bound.lower_bound
        cache[theta] = value
        return value

    starts = [tuple(0.0 for _ in range(m * width))]
    for vertex in u_box.vertices():
        theta = [0.0] * (m * width)
        for j in range(m):
            theta[j * width + const_idx] = vertex[j]
        starts.append(tuple(theta))

    best_theta = None
    best_value = -math.inf
    for theta in starts:
        v = score(theta)
        if v > best_value:
            best_value, best_theta = v, theta

    if best_theta is None or best_value == -math.inf:
        raise NoFeasiblePolicy(
            f"no feasible policy among {len(starts)} starts (degree "
            f"{config.template_degree})"
        )

    scales = [
        max(u_box.hi[j] - u_box.lo[j], 1.0) for j in range(m) for _ in range(width)
    ]
    step = 0.5
    while step >= config.min_step and evals < config.max_evals:
        improved = False
        for idx in range(m * width):
            for sign in (1.0, -1.0):
                if evals >= config.max_evals:
                    break
                cand = list(best_theta)
                cand[idx] += sign * step * scales[idx]
                v = score(tuple(cand))
                if v > best_value:
                    best_value, best_theta = v, tuple(cand)
                    improved = True
        if not improved:
            step *= 0.5

    return make_policy(best_theta), best_value


# ---------------------------------------------------------------------------
# pointwise minimum-norm input (single-channel)
# ---------------------------------------------------------------------------


def pointwise_min_norm_input(
    system: "CpsSystem",
    level: "LevelSet",
    alpha: AlphaFunction,
    x: Sequence[float],
    tol: float = 1e-9,
) -> float:
    """Smallest-magnitude input keeping the top-order barrier derivative no
    less than -alpha of the top-level margin, clamped to the input box.

    Single-input systems only; the constraint is affine in u, so the
    minimizer is 0 when the uncontrolled margin b is already nonnegative and
    the constraint boundary otherwise.
    """
    gains = system.gain_row()
    if len(gains) != 1:
        raise PointwiseInfeasible("minimum-norm input requires a single channel")
    r = system.relative_degree().order
    g = gains[0].evaluate(x)
    if g == 0.0:
        raise PointwiseInfeasible("input gain vanishes at the queried state")
    b = system.drift_derivative(r).evaluate(x) + alpha(
        system.drift_derivative(r - 1).evaluate(x) - level.c[r - 1]
    )
    # constraint: g*u >= -b
    if g < 0.0:
        u = min(0.0, b / -g)
    else:
        u = max(0.0, -b / g)
    u = min(max(u, system.input_box.lo[0]), system.input_box.hi[0])
    if g * u + b < -tol:
        raise PointwiseInfeasible(
            f"clamped input {u:.6g} violates the barrier constraint by {g * u + b:.3g}"
        )
    return u
