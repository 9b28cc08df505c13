"""Level sets of finite subsequence averages on the circle.

For a decreasing f on (0, 1), a rotation T and times n_1 < ... < n_N, the
level set B = {x : (1/N) sum f(T^{n_k} x) >= lambda} is sandwiched between
inner and outer unions of grid cells. This module also holds the prefix
quantity M_lambda = sup{L : mean of f over (0, L] > lambda}, the
decomposition of B into arcs T^{-n_k}[0, a_k], and the construction of short
witness subsequences whose averages stay large on most of an arc.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DegenerateLevelSet,
    DomainError,
    EntryTimeBudgetExceeded,
    NoWitness,
    ToleranceNotReached,
)
from .numerics import MonotoneFunction, bisect_monotone, integrate_monotone, prefix_average
from .orlicz import OrliczFunction, membership_integral
from .rotation import (
    MASK,
    ONE,
    CircleArc,
    CirclePoint,
    RotationSystem,
    _chunk_hi_words,
    average_table,
    exact_offsets_u64,
    grid_words,
    offsets_u64,
    words_to_floats,
)

log = logging.getLogger(__name__)

DEFAULT_GRID = 10**5
DEFAULT_ENTRY_BUDGET = 10**8


# ----------------------------------------------------------------------
# exact arc arithmetic (integer intervals in [0, 2^128))
# ----------------------------------------------------------------------

def _arc_pieces(arc: CircleArc) -> List[Tuple[int, int]]:
    if arc.length_bits >= ONE:
        return [(0, ONE)]
    if arc.length_bits == 0:
        return []
    s, e = arc.start.bits, arc.start.bits + arc.length_bits
    if e <= ONE:
        return [(s, e)]
    return [(s, ONE), (0, e - ONE)]


def _union(pieces: List[Tuple[int, int]]) -> List[Tuple[int, int]]:
    out: List[Tuple[int, int]] = []
    for s, e in sorted(pieces):
        if out and s <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], e))
        else:
            out.append((s, e))
    return out


def _measure(pieces: List[Tuple[int, int]]) -> int:
    return sum(e - s for s, e in pieces)


def _intersect(u: List[Tuple[int, int]], v: List[Tuple[int, int]]) -> List[Tuple[int, int]]:
    i = j = 0
    out = []
    while i < len(u) and j < len(v):
        s, e = max(u[i][0], v[j][0]), min(u[i][1], v[j][1])
        if s < e:
            out.append((s, e))
        if u[i][1] < v[j][1]:
            i += 1
        else:
            j += 1
    return out


def union_bits(arcs: Sequence[CircleArc]) -> List[Tuple[int, int]]:
    pieces: List[Tuple[int, int]] = []
    for a in arcs:
        pieces.extend(_arc_pieces(a))
    return _union(pieces)


def arc_overlap_bits(a: CircleArc, b: CircleArc) -> int:
    """Exact measure (in units of 2^-128) of the intersection of two arcs."""
    return _measure(_intersect(_union(_arc_pieces(a)), _union(_arc_pieces(b))))


def _time_offsets(sys: RotationSystem, seq: Sequence[int]) -> np.ndarray:
    seq = np.asarray(seq, dtype=np.int64)
    if seq.size <= 20000:
        return exact_offsets_u64(sys, seq.tolist())
    return offsets_u64(sys, seq)


# ----------------------------------------------------------------------
# level sets
# ----------------------------------------------------------------------

@dataclass
class GridAverages:
    """A_N at the 2G half-grid points m/(2G): even m are cell ends, odd m midpoints."""

    grid_cells: int
    values: np.ndarray
    n_terms: int

    @property
    def ends(self) -> np.ndarray:
        return self.values[0::2]

    @property
    def mids(self) -> np.ndarray:
        return self.values[1::2]


def grid_averages(sys: RotationSystem, f, seq: Sequence[int],
                  grid_cells: int = DEFAULT_GRID) -> GridAverages:
    if grid_cells < 1:
        raise ValueError("grid_cells must be positive")
    seq = list(seq)
    if not seq:
        raise ValueError("empty sequence")
    xs = grid_words(2 * grid_cells)
    vals = average_table(f, xs, _time_offsets(sys, seq))
    return GridAverages(grid_cells, vals, len(seq))


@dataclass
class LevelSet:
    lam: float
    arcs: List[CircleArc]
    inner_measure: float
    outer_measure: float
    grid_cells: int
    n_terms: int = 0

    @property
    def resolution_slack(self) -> float:
        return 2.0 * (self.n_terms + len(self.arcs)) / self.grid_cells

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "arcs": [a.to_json() for a in self.arcs],
            "inner_measure": self.inner_measure,
            "outer_measure": self.outer_measure,
            "grid_cells": self.grid_cells,
        }


def _runs(mask: np.ndarray, circular: bool = True) -> List[Tuple[int, int]]:
    """Maximal runs (start, length) of True cells, merged across the wrap."""
    n = mask.size
    if not mask.any():
        return []
    if mask.all():
        return [(0, n)]
    m = mask.astype(np.int8)
    d = np.diff(np.concatenate(([0], m, [0])))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    runs = [(int(s), int(e - s)) for s, e in zip(starts, ends)]
    if circular and len(runs) > 1 and mask[0] and mask[-1]:
        s_last, l_last = runs.pop()
        s0, l0 = runs.pop(0)
        runs.append((s_last, l_last + l0))
    return runs


def _cell_arc(start_cell: int, n_cells: int, G: int) -> CircleArc:
    if n_cells >= G:
        return CircleArc.full()
    a = (start_cell * ONE) // G
    b = ((start_cell + n_cells) * ONE) // G
    return CircleArc(CirclePoint(a & MASK), b - a)


def level_set_from_averages(avg: GridAverages, lam: float) -> LevelSet:
    G = avg.grid_cells
    e = avg.ends >= lam
    m = avg.mids >= lam
    e_next = np.roll(e, -1)
    inner = e & e_next & m
    outer = e | e_next | m
    arcs = [_cell_arc(s, l, G) for s, l in _runs(outer)]
    return LevelSet(float(lam), arcs, float(inner.sum()) / G, float(outer.sum()) / G, G, avg.n_terms)


def compute_level_set(sys: RotationSystem, f, seq: Sequence[int], lam: float,
                      grid_cells: int = DEFAULT_GRID,
                      averages: Optional[GridAverages] = None) -> LevelSet:
    """Inner/outer grid sandwich of {x : A_N f(x) >= lam}.

    A cell is inner when both endpoints and the midpoint satisfy the bound and
    outer when any of them does; arcs are the maximal runs of outer cells.
    """
    if averages is None:
        averages = grid_averages(sys, f, seq, grid_cells)
    return level_set_from_averages(averages, lam)


# ----------------------------------------------------------------------
# decomposition into arcs T^{-n_k}[0, a_k]
# ----------------------------------------------------------------------

@dataclass
class DecompositionResult:
    a_values: List[float]
    s_arcs: List[CircleArc]
    union_measure: float
    symdiff_vs_levelset: float
    max_overlap_bits: int = 0
    level_set: Optional[LevelSet] = None

    @property
    def disjoint(self) -> bool:
        return self.max_overlap_bits == 0


def decompose_level_set(sys: RotationSystem, f, seq: Sequence[int], lam: float,
                        grid_cells: int = DEFAULT_GRID,
                        averages: Optional[GridAverages] = None) -> DecompositionResult:
    """Split the level set by which orbit point T^{n_k} y sits lowest.

    For every sample y of the level set, k(y) is the index minimising
    T^{n_k} y; a_k is the largest T^{n_k} y over samples with k(y) = k and
    S_k = T^{-n_k}[0, a_k]. Shifting such a y down by t <= a_k lowers every
    orbit point by t without wrapping, so S_k only holds points whose minimum
    index is k and the arcs are disjoint.
    """
    seq = [int(n) for n in seq]
    if averages is None:
        averages = grid_averages(sys, f, seq, grid_cells)
    G = averages.grid_cells
    lvl = level_set_from_averages(averages, lam)
    N = len(seq)
    idx = np.flatnonzero(averages.values >= lam)
    if idx.size == 0:
        err = DegenerateLevelSet(f"level set at lambda={lam} is empty")
        err.result = DecompositionResult([0.0] * N, [], 0.0, lvl.outer_measure, 0, lvl)
        raise err
    a_bits = sys.alpha.bits
    y_bits = [(int(m) * ONE) // (2 * G) for m in idx]
    y_words = np.array([b >> 64 for b in y_bits], dtype=np.uint64)
    offs = exact_offsets_u64(sys, seq)
    with np.errstate(over="ignore"):
        W = y_words[:, None] + offs[None, :]
    # add one unit of slack for the dropped low words before comparing
    order = np.argsort(W, axis=1, kind="stable")
    kmin = order[:, 0].copy()
    if N > 1:
        rows = np.arange(W.shape[0])
        gap = W[rows, order[:, 1]] - W[rows, order[:, 0]]
        for r in np.flatnonzero(gap <= np.uint64(2)):
            yb = y_bits[r]
            kmin[r] = min(range(N), key=lambda k: (yb + seq[k] * a_bits) & MASK)
    arcs: List[CircleArc] = []
    a_vals: List[float] = []
    for k in range(N):
        rows_k = np.flatnonzero(kmin == k)
        if rows_k.size == 0:
            a_vals.append(0.0)
            continue
        wk = W[rows_k, k]
        top = wk.max()
        cand = rows_k[wk >= (top - np.uint64(2) if top >= 2 else np.uint64(0))]
        best = max(((y_bits[r] + seq[k] * a_bits) & MASK) for r in cand)
        a_vals.append(best / ONE)
        start = (-seq[k] * a_bits) & MASK
        arcs.append(CircleArc(CirclePoint(start), min(ONE, best + 1)))
    overlap = 0
    for i in range(len(arcs)):
        for j in range(i + 1, len(arcs)):
            overlap = max(overlap, arc_overlap_bits(arcs[i], arcs[j]))
    u = union_bits(arcs)
    b = union_bits(lvl.arcs)
    inter = _measure(_intersect(u, b))
    symdiff = (_measure(u) + _measure(b) - 2 * inter) / ONE
    return DecompositionResult(a_vals, arcs, _measure(u) / ONE, symdiff, overlap, lvl)


# ----------------------------------------------------------------------
# M_lambda and the weak bound
# ----------------------------------------------------------------------

def m_lambda(f: MonotoneFunction, lam: float, tol: float = 1e-10,
             quad_tol: float = 1e-10) -> float:
    """sup{L : mean of f over (0, L] > lam}; 1 if even L = 1 qualifies, 0 if no L does."""
    return _m_lambda_with_primitive(f, lam, tol, quad_tol)[0]


def _m_lambda_with_primitive(f: MonotoneFunction, lam: float, tol: float, quad_tol: float,
                             start: Optional[Tuple[float, float]] = None) -> Tuple[float, float]:
    """M_lambda together with F(M_lambda), F(L) = integral of f over (0, L].

    F is concave (f decreases), so h(L) = F(L) - lam L is concave with
    h(0) = 0. Newton's method on h started to the right of the crossing
    stays to the right and converges monotonically; each step only needs
    the integral of f over [L_new, L_old], which avoids the singularity.
    """
    if not lam > 0:
        raise DomainError("m_lambda needs lambda > 0")
    if start is None:
        L, F = 1.0, integrate_monotone(f, 0.0, 1.0, quad_tol * max(lam, 1.0)).value
        if F > lam:
            return 1.0, F
    else:
        L, F = start
        if F > lam * L:
            if L >= 1.0:
                return 1.0, F
            # a warm start left of the crossing is useless: start cold
            return _m_lambda_with_primitive(f, lam, tol, quad_tol)
    # nonempty iff the mean near 0 exceeds lam
    if float(f(tol)) <= lam and prefix_average(f, tol, quad_tol) <= lam:
        return 0.0, 0.0
    for _ in range(500):
        h = F - lam * L
        slope = float(f(L)) - lam
        if slope >= 0.0:
            slope = -lam * 1e-12  # flat top: creep left
        step = h / slope
        if step <= tol:
            return L, F
        L_new = max(L - step, 0.5 * tol)
        F -= integrate_monotone(f, L_new, L, quad_tol * lam * max(L - L_new, tol)).value
        L = L_new
        if L <= tol:
            return L, F
    raise ToleranceNotReached("prefix crossing did not converge")


def m_lambda_path(f: MonotoneFunction, lams: Sequence[float], tol: float = 1e-10,
                  quad_tol: float = 1e-10) -> List[float]:
    """M_lambda for nondecreasing lambdas, warm-starting each from the previous crossing."""
    out: List[float] = []
    state: Optional[Tuple[float, float]] = None
    prev = -math.inf
    for lam in lams:
        if lam < prev:
            raise ValueError("lambdas must be nondecreasing")
        prev = lam
        if state is not None and state[0] > 0.0:
            M, F = _m_lambda_with_primitive(f, lam, tol, quad_tol, state)
        else:
            M, F = _m_lambda_with_primitive(f, lam, tol, quad_tol)
        out.append(M)
        if M > 0.0:
            state = (M, F)
    return out


@dataclass
class WeakBoundCheck:
    measure_outer: float
    M: float
    holds: bool
    slack: float


def verify_weak_bound(sys: RotationSystem, f: MonotoneFunction, seq: Sequence[int], lam: float,
                      grid_cells: int = DEFAULT_GRID,
                      averages: Optional[GridAverages] = None,
                      M: Optional[float] = None) -> WeakBoundCheck:
    """|B_lambda| <= M_lambda at grid resolution."""
    lvl = compute_level_set(sys, f, seq, lam, grid_cells, averages)
    if M is None:
        M = m_lambda(f, lam)
    slack = lvl.resolution_slack
    return WeakBoundCheck(lvl.outer_measure, M, lvl.outer_measure <= M + slack, slack)


# ----------------------------------------------------------------------
# witness subsequences
# ----------------------------------------------------------------------

@dataclass
class WitnessResult:
    subsequence: List[int]
    r: int
    epsilon: float
    eta: float
    beta: float
    certified_arc: CircleArc
    certified_measure: float
    min_average_on_arc: float
    target: float
    arc: CircleArc
    refinements: int = 0
    cell_width: float = 0.0

    def to_json(self) -> dict:
        return {
            "subsequence": list(self.subsequence),
            "r": self.r,
            "epsilon": self.epsilon,
            "eta": self.eta,
            "beta": self.beta,
            "certified_arc": self.certified_arc.to_json(),
            "certified_measure": self.certified_measure,
            "min_average_on_arc": self.min_average_on_arc,
            "target": self.target,
        }


def witness_size(f: MonotoneFunction, M: float, eps: float, eta: float, r_min: int = 1) -> int:
    """Smallest r whose equal-width Riemann bracket of f on [eps, M] is <= eta wide."""
    spread = max(0.0, float(f(eps)) - float(f(min(M, 1.0))))
    need = 1 if not math.isfinite(eta) or spread == 0.0 else math.ceil(spread * (M - eps) / eta)
    return max(int(r_min), need, 1)


def _assign_times(sys: RotationSystem, lefts: List[int], width: int, n_start: int,
                  n_max: int, expect: int) -> List[int]:
    """Give every arc [left, left+width) of n*alpha values its own time n >= n_start.

    Arcs of equal width are served in order of their left end, each taking the
    lowest unused orbit value inside it (interval-point matching). The search
    window doubles until every arc is served.
    """
    margin = 2.0 ** -44  # shrink arcs so float screening implies exact membership
    wf = width / ONE - 2 * margin
    if wf <= 0:
        raise DomainError("proximity arc too narrow")
    lf = np.array([(l / ONE + margin) % 1.0 for l in lefts])
    order_arcs = np.argsort(lf, kind="stable")
    # start small and double: every served time lies below n_start + T
    T = max(64, min(expect, len(lefts)))
    while True:
        if n_start + T - 1 > n_max:
            T = n_max - n_start + 1
            if T <= 0:
                raise EntryTimeBudgetExceeded(f"no room for times in [{n_start}, {n_max}]")
        words = _chunk_hi_words(sys, n_start, T)
        pos = words_to_floats(words, round_up=False)
        pos[words == 0] = 0.0
        porder = np.argsort(pos, kind="stable")
        p2 = np.concatenate((pos[porder], pos[porder] + 1.0))
        t2 = np.concatenate((porder, porder))
        q0 = np.searchsorted(p2, lf[order_arcs], side="left").tolist()
        p2l = p2.tolist()
        t2l = t2.tolist()
        used = bytearray(T)
        got = [-1] * len(lefts)
        ptr = 0
        L2 = len(p2l)
        missing = 0
        for rank, ai in enumerate(order_arcs.tolist()):
            q = max(ptr, q0[rank])
            while q < L2 and used[t2l[q]]:
                q += 1
            right = lf[ai] + wf
            if q < L2 and p2l[q] < right:
                used[t2l[q]] = 1
                got[ai] = n_start + t2l[q]
                ptr = q + 1
            else:
                ptr = q
                missing += 1
        if missing == 0:
            break
        if n_start + T - 1 >= n_max:
            raise EntryTimeBudgetExceeded(
                f"{missing} of {len(lefts)} arcs unserved within n <= {n_max}")
        T *= 2
    a = sys.alpha.bits
    for n, l in zip(got, lefts):
        if ((n * a - l) & MASK) >= width:
            raise AssertionError("entry time failed exact membership")  # pragma: no cover
    return got


def _certify(sys: RotationSystem, f, times: Sequence[int], arc: CircleArc, cell_bits: int,
             target: float):
    """Cellwise lower bounds of the average over an arc, and the longest good run."""
    M_bits = arc.length_bits
    n_cells = max(1, -(-M_bits // cell_bits))
    ends = [min(c * cell_bits, M_bits) for c in range(n_cells + 1)]
    full = M_bits >= ONE
    xs = np.array([((arc.start.bits + e) & MASK) >> 64 for e in ends], dtype=np.uint64)
    offs = exact_offsets_u64(sys, times)
    floor_value = float(f(1.0))
    sums = np.zeros(n_cells, dtype=np.float64)
    col = max(1, (1 << 21) // (n_cells + 1))
    with np.errstate(over="ignore"):
        for c0 in range(0, len(offs), col):
            o = offs[c0:c0 + col]
            w = xs[:, None] + o[None, :]
            # f decreases, so the right end (rounded up) bounds each term from below;
            # a term that wraps through 0 inside the cell is still >= f(1)
            right = np.asarray(f(words_to_floats(w[1:], round_up=True)), dtype=float)
            wrapped = w[1:] < w[:-1]
            sums += np.where(wrapped, floor_value, right).sum(axis=1)
    lower = sums / len(offs)
    runs = _runs(lower >= target, circular=full)
    if not runs:
        return lower, None, 0, float(lower.max()) if lower.size else 0.0
    s, ln = max(runs, key=lambda t: (t[1], -t[0]))
    if ln >= n_cells:
        cert = CircleArc(arc.start, M_bits)
        return lower, cert, M_bits, float(lower.min())
    a0 = ends[s]
    stop = s + ln
    if stop <= n_cells:
        a1 = ends[stop]
        length = a1 - a0
        cells = lower[s:stop]
    else:
        length = (M_bits - a0) + ends[stop - n_cells]
        cells = np.concatenate((lower[s:], lower[:stop - n_cells]))
    cert = CircleArc(CirclePoint((arc.start.bits + a0) & MASK), length)
    return lower, cert, length, float(cells.min())


def sampled_minimum_average(sys: RotationSystem, f, times: Sequence[int], arc: CircleArc,
                            step: float) -> float:
    """Minimum of the average over ``times`` at points of ``arc`` spaced by ``step``."""
    if arc.length_bits == 0:
        return math.inf
    step_bits = max(1, int(step * ONE))
    count = max(1, -(-arc.length_bits // step_bits))
    xs = np.array([((arc.start.bits + min(i * step_bits, arc.length_bits - 1)) & MASK) >> 64
                   for i in range(count + 1)], dtype=np.uint64)
    return float(average_table(f, xs, exact_offsets_u64(sys, times)).min())


def construct_witness(sys: RotationSystem, f: MonotoneFunction, lam: float, I: CircleArc,
                      delta: float, eps: float, eta: float, beta_prox: float,
                      n_start: int = 1, *, target: Optional[float] = None, r_min: int = 1,
                      n_max: int = DEFAULT_ENTRY_BUDGET, max_refinements: int = 3,
                      require_measure: bool = True) -> WitnessResult:
    """Finite subsequence whose average of f stays >= target on most of I.

    [eps, M] (M = |I|) is cut into r equal cells I_1..I_r, I_1 rightmost with
    right ends b_j and left ends a_j. One group of times sends the right end
    of I into [b_j - beta, b_j), the other sends I's point at offset eps into
    [a_j - beta, a_j); both sides are one-sided so f only increases. The
    result is certified cellwise on I and refined (halving eps, eta, beta)
    until the certified part reaches M - delta.
    """
    if target is None:
        target = lam / 2.0
    M = I.length
    if M <= 0.0:
        raise NoWitness("the target arc is empty (M_lambda = 0)")
    if not 0.0 < eps < M:
        raise DomainError(f"need 0 < eps < |I|, got eps={eps}, |I|={M}")
    if beta_prox <= 0.0:
        raise DomainError("beta_prox must be positive")
    reach = prefix_average(f, min(M, 1.0))
    if target > reach + (eta if math.isfinite(eta) else 0.0):
        raise NoWitness(f"target {target:g} exceeds the prefix mean {reach:g} of f over |I|")
    last = None
    for ref in range(max_refinements + 1):
        res = _witness_once(sys, f, I, eps, eta, beta_prox, n_start, target, r_min, n_max)
        res.refinements = ref
        last = res
        if res.certified_measure >= M - delta or not require_measure:
            return res
        log.info("witness certified %.4g < %.4g; refining", res.certified_measure, M - delta)
        eps, eta, beta_prox = eps / 2, eta / 2, beta_prox / 2
    raise NoWitness(f"certified measure {last.certified_measure:.6g} stayed below {M - delta:.6g}")


def _witness_once(sys, f, I, eps, eta, beta, n_start, target, r_min, n_max) -> WitnessResult:
    M_bits = I.length_bits
    M = I.length
    eps_bits = int(eps * ONE)
    beta_bits = max(1, int(beta * ONE))
    r = witness_size(f, M, eps, eta, r_min)
    h_bits = (M_bits - eps_bits) // r
    a = sys.alpha.bits
    right_anchor = (I.start.bits + M_bits) & MASK
    eps_anchor = (I.start.bits + eps_bits) & MASK
    lefts = []
    for j in range(1, r + 1):
        b_j = M_bits - (j - 1) * h_bits
        lefts.append((b_j - beta_bits - right_anchor) & MASK)
    for j in range(1, r + 1):
        a_j = M_bits - j * h_bits
        lefts.append((a_j - beta_bits - eps_anchor) & MASK)
    expect = int(4 * r / max(M, 1e-12)) + int(8 / beta)
    times = sorted(_assign_times(sys, lefts, beta_bits, n_start, n_max, expect))
    cell_bits = max(1, beta_bits // 2)
    _, cert, length, mn = _certify(sys, f, times, I, cell_bits, target)
    if cert is None:
        cert = CircleArc(I.start, 0)
        mn = float("nan")
    return WitnessResult(times, r, eps, eta, beta, cert, length / ONE, mn, target, I,
                         cell_width=cell_bits / ONE)


# ----------------------------------------------------------------------
# empirical weak (Phi) inequality
# ----------------------------------------------------------------------

@dataclass
class WeakScanRow:
    lam: float
    measure: float
    phi_integral: float
    empirical_C: float


@dataclass
class WeakScanResult:
    rows: List[WeakScanRow]
    max_C: float


def weak_phi_inequality_scan(sys: RotationSystem, f: MonotoneFunction, phi: OrliczFunction,
                             seq_family: Sequence[Sequence[int]], lam_grid: Sequence[float],
                             grid_cells: int = 10**4, tol: float = 1e-8) -> WeakScanResult:
    """mu{max over the family of A_N f >= lam} against the integral of phi(f/lam)."""
    if not seq_family:
        raise ValueError("empty sequence family")
    best = None
    for seq in seq_family:
        avg = grid_averages(sys, f, seq, grid_cells)
        best = avg.values if best is None else np.maximum(best, avg.values)
    sup_avg = GridAverages(grid_cells, best, max(len(s) for s in seq_family))
    rows = []
    for lam in lam_grid:
        if not lam > 0:
            raise DomainError("lambda values must be positive")
        meas = level_set_from_averages(sup_avg, lam).outer_measure
        integral = membership_integral(phi, f.scaled(1.0 / lam), tol).value
        C = meas / integral if integral > 0 else 0.0
        rows.append(WeakScanRow(float(lam), meas, integral, C))
    return WeakScanResult(rows, max((r.empirical_C for r in rows), default=0.0))
