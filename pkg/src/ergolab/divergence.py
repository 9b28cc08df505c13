"""Inductive construction of perturbed block sequences with divergent averages.

Given a decreasing f and levels s_k -> inf, a_k is the largest L with mean of
f over (0, L] above s_k/2. The arcs J_k = [p_k, p_{k+1}) laid end to end
(p_k = a_{k0} + ... + a_k mod 1) wrap around the circle whenever sum a_k
diverges. Stage k appends a block B_k of l_k consecutive integers and d_k
witness times D_k that keep the average of f large on J_{k-1}.

The g_s family, its membership rule and its criterion series live here too.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .blockseq import Classification, CriterionReport, PerturbedBlockSequence
from .errors import (
    DomainError,
    EntryTimeBudgetExceeded,
    NoValidEps,
    NoWitness,
    ScheduleDegenerate,
    ScheduleExhausted,
    StageFailed,
)
from .levelset import construct_witness, m_lambda, m_lambda_path
from .numerics import MonotoneFunction
from .rotation import (
    MASK,
    ONE,
    CircleArc,
    CirclePoint,
    RotationSystem,
    average_table,
    offsets_u64,
)

log = logging.getLogger(__name__)

K0 = 16
EPS_LADDER = (2.0 * math.exp(-math.e), 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
STAGE_CONSTANT = 0.25


# ----------------------------------------------------------------------
# the g_s family
# ----------------------------------------------------------------------

def _gs_formula(x: np.ndarray, s: float) -> np.ndarray:
    L = np.log(2.0 / x)
    LL = np.log(L)
    return (LL + 1.0) / ((x / 2.0) * L ** (s + 1.0) * LL ** (s + 1.0))


def _gs_primitive(x: float, s: float) -> float:
    # d/dx of (2/s) (log(2/x) loglog(2/x))^{-s} is the formula above
    L = math.log(2.0 / x)
    return (2.0 / s) * (L * math.log(L)) ** (-s)


def choose_eps_s(s: float, grid_points: int = 10**4) -> float:
    """Largest ladder value on which g_s is strictly decreasing (grid-checked)."""
    if not s > 0:
        raise DomainError("g_s needs s > 0")
    for eps in EPS_LADDER:
        if not math.log(math.log(2.0 / eps)) > 0:
            continue
        with np.errstate(all="ignore"):
            geo = _gs_formula(np.geomspace(eps * 1e-12, eps, grid_points), s)
            lin = _gs_formula(np.linspace(eps / grid_points, eps, grid_points), s)
        if (np.all(np.isfinite(geo)) and np.all(np.diff(geo) < 0)
                and np.all(np.diff(lin) < 0)):
            return eps
    raise NoValidEps(f"no ladder value makes g_{s:g} monotone")


@dataclass(frozen=True)
class GsFunction:
    s: float
    eps_s: float

    @classmethod
    def make(cls, s: float) -> "GsFunction":
        return cls(float(s), choose_eps_s(s))

    def __call__(self, x):
        return gs_eval(self, x)

    def as_monotone(self) -> MonotoneFunction:
        s, eps = self.s, self.eps_s

        def ev(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            m = (x <= eps) & (x > 0)
            if m.any():
                out[m] = _gs_formula(x[m], s)
            out[x <= 0] = np.inf
            return out

        return MonotoneFunction(
            evaluator=ev,
            support_right_endpoint=eps,
            primitive=lambda t: _gs_primitive(min(t, eps), s),
            declared_convex=True,
            name=f"gs:{s:g}",
        )


def gs_eval(g: GsFunction, x: float) -> float:
    if not x > 0:
        raise DomainError("g_s is defined for x > 0")
    if x > g.eps_s:
        return 0.0
    return float(_gs_formula(np.float64(x), g.s))


def gs_prefix_mean(g: GsFunction, lam: float) -> float:
    """Closed form of (1/lam) * integral of g_s over (0, lam]."""
    if not 0 < lam <= 1:
        raise DomainError("need 0 < lambda <= 1")
    return _gs_primitive(min(lam, g.eps_s), g.s) / lam


def fit_prefix_mean_exponent(f: MonotoneFunction, lams: Sequence[float]) -> float:
    """Least-squares slope of log(mean of f over (0, lam]) against log(lam)."""
    from .numerics import prefix_average
    x = np.log(np.asarray(lams, dtype=float))
    # f(lam) <= mean, so scaling by it makes the tolerance relative
    y = np.log([prefix_average(f, float(l), 1e-8 * max(1.0, float(f(float(l)))))
                for l in lams])
    return float(np.polyfit(x, y, 1)[0])


# ----------------------------------------------------------------------
# schedules
# ----------------------------------------------------------------------

def example_s_k(s: float, k: int) -> float:
    lk = math.log(k)
    return k / (lk ** (s - 1.0) * math.log(lk) ** s)


def example_c_k(s: float, k: int) -> float:
    return math.log(math.log(k)) / example_s_k(s, k)


def _to_bits(a: float) -> int:
    from fractions import Fraction
    q = Fraction(a)
    return min(ONE, (q.numerator * ONE) // q.denominator)


@dataclass
class DivergenceSchedule:
    """Per-stage scalars for k = k0 .. K (a and delta also carry k = K+1).

    p_points[i] is p_{k0-1+i} with p_{k0-1} = 0, and j_arcs[i] is
    J_{k0-1+i} = [p_{k0-1+i}, p_{k0+i}), whose length is a_{k0+i}.
    """

    k0: int
    K: int
    s: List[float]
    c: List[float]
    a: List[float]
    p_points: List[CirclePoint]
    j_arcs: List[CircleArc]
    delta: List[float]

    def _i(self, k: int) -> int:
        i = k - self.k0
        if not 0 <= i < len(self.a):
            raise IndexError(f"stage {k} outside the schedule")
        return i

    def s_at(self, k: int) -> float:
        return self.s[self._i(k)]

    def c_at(self, k: int) -> float:
        return self.c[self._i(k)]

    def a_at(self, k: int) -> float:
        return self.a[self._i(k)]

    def delta_at(self, k: int) -> float:
        return self.delta[self._i(k)]

    def J(self, k: int) -> CircleArc:
        """J_k; defined for k0 - 1 <= k <= K."""
        return self.j_arcs[k - self.k0 + 1]


def _a_values(f: MonotoneFunction, s_vals: Sequence[float], tol: float) -> List[float]:
    lams = [sk / 2.0 for sk in s_vals]
    if all(b >= a for a, b in zip(lams, lams[1:])):
        return m_lambda_path(f, lams, tol)
    return [m_lambda(f, lam, tol) for lam in lams]


def schedule_from_sequences(s_vals: Sequence[float], c_vals: Sequence[float], k0: int,
                            f: MonotoneFunction, tol: float = 1e-10,
                            allow_degenerate: bool = False,
                            delta_fraction: float = 0.1) -> DivergenceSchedule:
    """Schedule from explicit s_k, c_k for k = k0 .. k0+len-1.

    One more s value than stages is needed because delta_k = a_{k+1}/10.
    """
    if len(s_vals) < 2 or len(c_vals) < len(s_vals) - 1:
        raise ValueError("need s for k0..K+1 and c for k0..K")
    a = _a_values(f, s_vals, tol)
    K = k0 + len(s_vals) - 2
    if not allow_degenerate:
        for i, ak in enumerate(a):
            if ak <= 0.0:
                raise ScheduleDegenerate(f"a_{k0 + i} = 0: the prefix mean never exceeds s_k/2")
    bits = [_to_bits(ak) for ak in a]
    p = [CirclePoint(0)]
    for b in bits:
        p.append(CirclePoint((p[-1].bits + b) & MASK))
    arcs = [CircleArc(p[i], bits[i]) for i in range(len(bits))]
    delta = [delta_fraction * a[i + 1] for i in range(len(a) - 1)] + [delta_fraction * a[-1]]
    return DivergenceSchedule(k0, K, list(map(float, s_vals)), list(map(float, c_vals)), a, p,
                              arcs, delta)


def schedule_from_example(s: float, K: int, f: MonotoneFunction, tol: float = 1e-10,
                          allow_degenerate: bool = False) -> DivergenceSchedule:
    """s_k = k / ((log k)^{s-1} (loglog k)^s), c_k = loglog k / s_k, k = 16..K."""
    if K < K0:
        raise DomainError(f"K must be >= {K0}")
    ks = range(K0, K + 2)
    return schedule_from_sequences([example_s_k(s, k) for k in ks],
                                   [example_c_k(s, k) for k in ks], K0, f, tol,
                                   allow_degenerate)


@dataclass
class PreconditionReport:
    partial_sums: List[float]
    sum_a: float
    pointwise_ok: bool
    failures: List[int]
    diverging_evidence: bool


def divergence_precondition_check(f: MonotoneFunction, schedule: DivergenceSchedule,
                                  K: Optional[int] = None) -> PreconditionReport:
    """Partial sums of a_k and the comparison a_k >= 1/(k log k)."""
    K = schedule.K if K is None else K
    sums, fails = [], []
    total = 0.0
    for k in range(schedule.k0, K + 1):
        ak = schedule.a_at(k)
        total += ak
        sums.append(total)
        if not ak >= 1.0 / (k * math.log(k)):
            fails.append(k)
    ok = not fails
    return PreconditionReport(sums, total, ok, fails, ok)


# ----------------------------------------------------------------------
# the construction
# ----------------------------------------------------------------------

@dataclass
class ConstructionOptions:
    beta: float = 1e-2
    eps_fraction: float = 0.25       # eps = eps_fraction * delta_k
    target_fraction: float = 0.25    # witness target = target_fraction * s_k / 2
    first_min_d: int = 2
    max_total_elements: int = 10**7
    entry_budget: int = 10**8
    sample_count: int = 100
    seed: int = 0


@dataclass
class StageReport:
    k: int
    l_k: int
    d_k: int
    lower_bound_lhs: float
    lower_bound_rhs: float
    sample_points_checked: int
    passed: bool
    c_k: float = 0.0
    d_over_l: float = 0.0
    perturbation_part_min: float = 0.0
    witness_certified_measure: float = float("nan")
    arc_length: float = 0.0

    def csv_row(self) -> dict:
        return {"k": self.k, "l_k": self.l_k, "d_k": self.d_k,
                "lhs_min": repr(self.lower_bound_lhs), "rhs": repr(self.lower_bound_rhs),
                "passed": self.passed}


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _block_length(c: float, l_min: int, d_floor: int) -> Tuple[int, int]:
    """Smallest l >= l_min with d = round(c l) even and >= d_floor."""
    l = max(l_min, 1)
    d = _round_half_up(c * l)
    if d < d_floor:
        d = d_floor
    if d % 2:
        d += 1
    # round(c l) steps by at most one as l grows (c < 1), so d is reached exactly
    need = math.ceil((d - 0.5) / c) if c > 0 else l
    l = max(l, need)
    while _round_half_up(c * l) < d:
        l += 1
    d = _round_half_up(c * l)
    if d % 2:
        return _block_length(c, l + 1, d + 1)
    return l, d


def construct_divergent_sequence(sys: RotationSystem, f: MonotoneFunction,
                                 schedule: DivergenceSchedule, K: int,
                                 opts: Optional[ConstructionOptions] = None
                                 ) -> Tuple[PerturbedBlockSequence, List[StageReport]]:
    """Stages k0..K: block B_k then witness times D_k for the arc J_{k-1}.

    l_k is the smallest length with l_k >= k l_{k-1}, l_k > every earlier
    element and d_k = round(c_k l_k) even, so the witness splits into two
    equal groups. D_k is searched afresh beyond the end of B_k.
    """
    opts = opts or ConstructionOptions()
    if K > schedule.K:
        raise DomainError(f"schedule only reaches K={schedule.K}")
    seq = PerturbedBlockSequence((), ())
    reports: List[StageReport] = []
    l_prev: Optional[int] = None
    prev_max = 0
    total = 0
    for k in range(schedule.k0, K + 1):
        c = schedule.c_at(k)
        if c <= 0 or c >= 1:
            raise StageFailed(k, f"c_k = {c} must lie in (0, 1)")
        l_min = prev_max + 1 if l_prev is None else max(k * l_prev, prev_max + 1)
        l_k, d_k = _block_length(c, l_min, opts.first_min_d)
        if total + l_k + d_k > opts.max_total_elements:
            raise ScheduleExhausted(k, f"stage needs {total + l_k + d_k} elements, budget "
                                       f"{opts.max_total_elements}",
                                    {"l_k": l_k, "d_k": d_k, "total": total})
        start = prev_max + 1
        end = start + l_k - 1
        sk = schedule.s_at(k)
        arc = schedule.J(k - 1)
        dk_delta = schedule.delta_at(k)
        try:
            w = construct_witness(
                sys, f, sk / 2.0, arc, dk_delta, opts.eps_fraction * dk_delta, math.inf,
                opts.beta, n_start=end + 1, target=opts.target_fraction * sk / 2.0,
                r_min=d_k // 2, n_max=end + opts.entry_budget, max_refinements=0,
                require_measure=False)
        except (EntryTimeBudgetExceeded, NoWitness) as exc:
            raise StageFailed(k, str(exc), {"l_k": l_k, "d_k": d_k}) from exc
        if len(w.subsequence) != d_k:
            raise StageFailed(k, f"witness has {len(w.subsequence)} times, wanted {d_k}")
        seq = seq.extended(start, l_k, w.subsequence)
        total += l_k + d_k
        rep = stage_inequality_check(seq, sys, f, schedule, k, opts.sample_count, opts.seed)
        rep.witness_certified_measure = w.certified_measure
        reports.append(rep)
        log.info("stage %d: l=%d d=%d lhs_min=%.4g rhs=%.4g", k, l_k, d_k,
                 rep.lower_bound_lhs, rep.lower_bound_rhs)
        l_prev = l_k
        prev_max = seq.max_element
    return seq, reports


def trimmed_arc(arc: CircleArc, delta: float) -> CircleArc:
    """(J)_delta: the arc with delta/2 removed at each end."""
    cut = int(delta * ONE) // 2
    if 2 * cut >= arc.length_bits:
        return CircleArc(arc.start, 0)
    return CircleArc(CirclePoint((arc.start.bits + cut) & MASK), arc.length_bits - 2 * cut)


def stage_inequality_check(seq: PerturbedBlockSequence, sys: RotationSystem, f,
                           schedule: DivergenceSchedule, k: int, sample_count: int = 100,
                           seed: int = 0) -> StageReport:
    """Full average through stage k against (1/4)(d_k/total)(s_k/2) on (J_{k-1})_{delta_k}."""
    i = k - schedule.k0
    if not 0 <= i < len(seq.blocks):
        raise DomainError(f"stage {k} is not part of the sequence")
    upto = PerturbedBlockSequence(seq.blocks[:i + 1], seq.perturbations[:i + 1])
    elements = upto.elements()
    total = elements.size
    l_k, d_k = upto.l[-1], upto.d[-1]
    arc = trimmed_arc(schedule.J(k - 1), schedule.delta_at(k))
    rng = np.random.default_rng(seed)
    if arc.length_bits == 0 or sample_count <= 0:
        xs_bits: List[int] = []
    else:
        raw = rng.integers(0, 1 << 62, size=sample_count, dtype=np.int64).tolist()
        xs_bits = [(arc.start.bits + (arc.length_bits * u >> 62)) & MASK for u in raw]
    xs = np.array([b >> 64 for b in xs_bits], dtype=np.uint64)
    sk = schedule.s_at(k)
    rhs = STAGE_CONSTANT * (d_k / total) * (sk / 2.0)
    if xs.size:
        lhs = average_table(f, xs, offsets_u64(sys, elements))
        dpart = average_table(f, xs, offsets_u64(sys, np.asarray(upto.perturbations[-1],
                                                                 dtype=np.int64)))
        dpart = dpart * d_k / total
        lhs_min = float(lhs.min())
        passed = bool(np.all(lhs >= rhs))
        dmin = float(dpart.min())
    else:
        lhs_min, passed, dmin = math.nan, False, math.nan
    return StageReport(k, l_k, d_k, lhs_min, rhs, int(xs.size), passed,
                       c_k=schedule.c_at(k), d_over_l=d_k / l_k, perturbation_part_min=dmin,
                       arc_length=schedule.J(k - 1).length)


# ----------------------------------------------------------------------
# membership and criterion series for g_s
# ----------------------------------------------------------------------

class Membership(enum.Enum):
    IN_SPACE = "InSpace"
    NOT_IN_SPACE = "NotInSpace"


def membership_exponent_classifier(s: float, p: float) -> Membership:
    """g_s is in LLog^p L for s > p when s <= 1, and for s >= p when s > 1."""
    if not s > 0 or p < 0:
        raise DomainError("need s > 0 and p >= 0")
    inside = (s > p) if s <= 1 else (s >= p)
    return Membership.IN_SPACE if inside else Membership.NOT_IN_SPACE


def example_criterion_series(s: float, p: float, K: int) -> CriterionReport:
    """Partial sums of (loglog k)^{s+2} / (k (log k)^{p+1-s}) for k = 16..K.

    Classified by the integral test on the log exponent: convergent exactly
    when p + 1 - s > 1, since a power of loglog cannot rescue exponent <= 1.
    """
    if K < K0:
        raise DomainError(f"K must be >= {K0}")
    k = np.arange(K0, K + 1, dtype=float)
    lk = np.log(k)
    e = p + 1.0 - s
    terms = np.log(lk) ** (s + 2.0) / (k * lk ** e)
    partial = np.cumsum(terms)
    if p > s:  # e > 1, compared without the rounding of p + 1 - s
        cls, why = Classification.CONVERGENT, f"log exponent p+1-s = {e:g} > 1 (integral test)"
    else:
        cls, why = Classification.DIVERGENT, f"log exponent p+1-s = {e:g} <= 1 (integral test)"
    return CriterionReport(terms.tolist(), partial.tolist(), cls, why)
