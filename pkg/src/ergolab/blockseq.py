"""Perturbed block sequences and the convergence criteria built on them.

A perturbed block sequence is a union of integer blocks B_k = [start_k,
start_k + l_k - 1] together with finite sets D_k sitting strictly between
B_k and B_{k+1}. Counts are exact Python integers throughout.
"""

from __future__ import annotations

import bisect
import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyPrefix
from .orlicz import OrliczFunction
from .rotation import CirclePoint, RotationSystem, ergodic_average


@dataclass(frozen=True)
class PerturbedBlockSequence:
    blocks: Tuple[Tuple[int, int], ...]
    perturbations: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple((int(s), int(l)) for s, l in self.blocks)
        perts = tuple(tuple(sorted(int(u) for u in d)) for d in self.perturbations)
        if len(perts) < len(blocks):
            perts = perts + ((),) * (len(blocks) - len(perts))
        if len(perts) != len(blocks):
            raise ValueError("one perturbation set per block")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "perturbations", perts)
        prev_end = -1
        for k, ((start, length), d) in enumerate(zip(blocks, perts)):
            if length < 1:
                raise ValueError(f"block {k} has length {length}")
            if start <= prev_end:
                raise ValueError(f"block {k} overlaps what precedes it")
            end = start + length - 1
            nxt = blocks[k + 1][0] if k + 1 < len(blocks) else None
            if len(set(d)) != len(d):
                raise ValueError(f"duplicate entries in D_{k}")
            if d and (d[0] <= end or (nxt is not None and d[-1] >= nxt)):
                raise ValueError(f"D_{k} must lie strictly between block {k} and block {k + 1}")
            prev_end = d[-1] if d else end

    @property
    def l(self) -> List[int]:
        return [length for _, length in self.blocks]

    @property
    def d(self) -> List[int]:
        return [len(p) for p in self.perturbations]

    @property
    def total(self) -> int:
        return sum(self.l) + sum(self.d)

    @property
    def max_element(self) -> int:
        if not self.blocks:
            return -1
        start, length = self.blocks[-1]
        d = self.perturbations[-1]
        return d[-1] if d else start + length - 1

    def elements(self) -> np.ndarray:
        """All elements in increasing order (int64)."""
        parts = []
        for (start, length), d in zip(self.blocks, self.perturbations):
            parts.append(np.arange(start, start + length, dtype=np.int64))
            parts.append(np.asarray(d, dtype=np.int64))
        if not parts:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(parts)

    def extended(self, start: int, length: int, d: Sequence[int]) -> "PerturbedBlockSequence":
        return PerturbedBlockSequence(self.blocks + ((start, length),),
                                      self.perturbations + (tuple(d),))

    # text form "B:1,3; D:{5}; B:10,6"
    def to_text(self) -> str:
        items = []
        for (start, length), d in zip(self.blocks, self.perturbations):
            items.append(f"B:{start},{length}")
            if d:
                items.append("D:{" + ",".join(str(u) for u in d) + "}")
        return "; ".join(items)

    @classmethod
    def from_text(cls, text: str) -> "PerturbedBlockSequence":
        blocks: List[Tuple[int, int]] = []
        perts: List[Tuple[int, ...]] = []
        for raw in text.split(";"):
            item = raw.strip()
            if not item:
                continue
            m = re.fullmatch(r"B:\s*(-?\d+)\s*,\s*(\d+)", item)
            if m:
                blocks.append((int(m.group(1)), int(m.group(2))))
                perts.append(())
                continue
            m = re.fullmatch(r"D:\s*\{([\d,\s]*)\}", item)
            if m and blocks:
                body = m.group(1).strip()
                perts[-1] = perts[-1] + tuple(int(v) for v in body.split(",") if v.strip())
                continue
            raise ValueError(f"cannot parse sequence item {item!r}")
        return cls(tuple(blocks), tuple(perts))


@dataclass(frozen=True)
class CountingProfile:
    n: int
    b_n: int
    c_n: int


def elements_upto(seq: PerturbedBlockSequence, n: int) -> Tuple[List[int], CountingProfile]:
    """Elements <= n, with b_n (block elements) and c_n (perturbation elements)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    out: List[int] = []
    b = c = 0
    for (start, length), d in zip(seq.blocks, seq.perturbations):
        if start > n:
            break
        top = min(start + length - 1, n)
        out.extend(range(start, top + 1))
        b += top - start + 1
        cut = bisect.bisect_right(d, n)
        out.extend(d[:cut])
        c += cut
    return out, CountingProfile(n=n, b_n=b, c_n=c)


@dataclass(frozen=True)
class AverageDecomposition:
    w_B: Fraction
    A_B: float
    w_D: Fraction
    A_D: float
    A_total: float


def decompose_average(seq: PerturbedBlockSequence, sys: RotationSystem, f,
                      x: CirclePoint, n: int) -> AverageDecomposition:
    """Split the average over elements <= n into its block and perturbation parts."""
    _, prof = elements_upto(seq, n)
    if prof.b_n + prof.c_n == 0:
        raise EmptyPrefix(f"no elements <= {n}")
    block_part: List[int] = []
    pert_part: List[int] = []
    for (start, length), d in zip(seq.blocks, seq.perturbations):
        if start > n:
            break
        block_part.extend(range(start, min(start + length - 1, n) + 1))
        pert_part.extend(d[:bisect.bisect_right(d, n)])
    total = prof.b_n + prof.c_n
    w_B = Fraction(prof.b_n, total)
    w_D = Fraction(prof.c_n, total)
    A_B = ergodic_average(sys, f, block_part, x) if block_part else 0.0
    A_D = ergodic_average(sys, f, pert_part, x) if pert_part else 0.0
    A_total = float(w_B) * A_B + float(w_D) * A_D
    return AverageDecomposition(w_B, A_B, w_D, A_D, A_total)


# ----------------------------------------------------------------------
# series classification
# ----------------------------------------------------------------------

class Classification(enum.Enum):
    CONVERGENT = "Convergent"
    DIVERGENT = "Divergent"
    UNDETERMINED = "Undetermined"


@dataclass
class CriterionReport:
    terms: List[float]
    partial_sums: List[float]
    classification: Classification
    rationale: str


RATIO_CERT = 0.9


def classify_series(terms: Sequence[float]) -> CriterionReport:
    """Grade a nonnegative series from its first K terms.

    Convergent: all terms zero, or the term ratio stays <= 0.9 over the last
    half. Divergent: t_k >= 1/k over the last half with k*t_k nondecreasing
    there. Anything else is left undetermined.
    """
    terms = [float(t) for t in terms]
    partial = list(np.cumsum(terms)) if terms else []
    partial = [float(p) for p in partial]
    K = len(terms)
    if K == 0:
        return CriterionReport(terms, partial, Classification.UNDETERMINED, "no terms")
    if all(t == 0.0 for t in terms):
        return CriterionReport(terms, partial, Classification.CONVERGENT, "all terms vanish")
    tail = range(K // 2, K)
    ratios = [terms[k] / terms[k - 1] for k in tail if k >= 1 and terms[k - 1] > 0]
    if ratios and len(ratios) == len([k for k in tail if k >= 1]) and max(ratios) <= RATIO_CERT:
        return CriterionReport(terms, partial, Classification.CONVERGENT,
                               f"ratio test: max tail ratio {max(ratios):.4g} <= {RATIO_CERT}")
    idx = [k + 1 for k in tail]  # 1-based index
    if all(terms[k] >= 1.0 / i for k, i in zip(tail, idx)):
        kt = [terms[k] * i for k, i in zip(tail, idx)]
        if all(b >= a * (1 - 1e-12) for a, b in zip(kt, kt[1:])):
            return CriterionReport(terms, partial, Classification.DIVERGENT,
                                   "comparison with sum 1/k: t_k >= 1/k and k*t_k nondecreasing on the tail")
    return CriterionReport(terms, partial, Classification.UNDETERMINED,
                           "no ratio or comparison certificate on the sampled tail")


def perturbation_criterion(phi: OrliczFunction, l: Sequence[int], d: Sequence[int],
                           K: int) -> CriterionReport:
    """Terms 1/phi((l_1+..+l_k)/(d_1+..+d_k)) for k <= K, graded by classify_series."""
    if len(l) < K or len(d) < K:
        raise ValueError("need at least K entries in l and d")
    terms = []
    L = D = 0
    for k in range(K):
        if l[k] < 1 or d[k] < 0:
            raise ValueError("need l_k >= 1 and d_k >= 0")
        L += l[k]
        D += d[k]
        if D == 0:
            terms.append(0.0)  # 1/phi(inf)
        else:
            val = phi(L / D)
            terms.append(1.0 / val if val > 0 else float("inf"))
    return classify_series(terms)


@dataclass
class SufficientConditionsReport:
    cond_growth: bool
    cond_ratio: List[float]
    sum1: CriterionReport
    sum2: CriterionReport
    first_growth_failure: Optional[int] = None


def proposition_conditions(phi: OrliczFunction, l: Sequence[float], d: Sequence[float],
                           C: float, K: int) -> SufficientConditionsReport:
    """Sufficient conditions: l_1+..+l_k <= C l_{k+1}, and the two series
    sum 1/phi(l_{k+1}/l_k), sum 1/phi(1/c_k) with c_k = d_k/l_k."""
    if len(l) < K or len(d) < K:
        raise ValueError("need at least K entries in l and d")
    growth_fail = None
    running = 0
    for k in range(K - 1):
        running += l[k]
        if running > C * l[k + 1]:
            growth_fail = k + 1
            break
    c = [d[k] / l[k] for k in range(K)]
    t1 = [1.0 / phi(l[k + 1] / l[k]) for k in range(K - 1)]
    t2 = [0.0 if ck == 0 else 1.0 / phi(1.0 / ck) for ck in c]
    return SufficientConditionsReport(growth_fail is None, c, classify_series(t1), classify_series(t2),
                             growth_fail)


@dataclass
class ReinholdReport:
    ratios: List[Fraction]
    bounded: bool
    limit_zero: bool


def reinhold_ratio(l: Sequence[int], d: Sequence[int], K: int,
                   bound: Optional[float] = None) -> ReinholdReport:
    """r_k = (d_1+..+d_k)/(l_1+..+l_k) exactly.

    bounded: max r_k <= bound when a bound is given, otherwise no new running
    maximum in the second half of the range. limit_zero: the second half is
    nonincreasing and r_K <= 3/4 r_{K/2}.
    """
    ratios: List[Fraction] = []
    L = D = 0
    for k in range(K):
        L += int(l[k])
        D += int(d[k])
        ratios.append(Fraction(D, L))
    if not ratios:
        return ReinholdReport(ratios, True, False)
    half = K // 2
    if bound is not None:
        bounded = max(ratios) <= Fraction(bound)
    else:
        head = max(ratios[:max(half, 1)])
        bounded = all(r <= head for r in ratios[half:])
    tail = ratios[half:]
    limit_zero = (all(b <= a for a, b in zip(tail, tail[1:]))
                  and ratios[-1] <= Fraction(3, 4) * ratios[max(half - 1, 0)])
    return ReinholdReport(ratios, bounded, limit_zero)
