"""Circle rotation x -> x + alpha (mod 1) in 128-bit fixed point.

Circle points are integers in [0, 2^128); adding and multiplying them with
Python integers is exact, so orbit points T^n x are exact for every n the lab
uses. Floats appear only when a function of the position is evaluated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .numerics import MonotoneFunction

log = logging.getLogger(__name__)

FRAC_BITS = 128
ONE = 1 << FRAC_BITS
MASK = ONE - 1
# positions that land exactly on 0 are nudged here before f is evaluated
SINGULARITY_DODGE = 2.0 ** -100

_TWO64 = float(2 ** 64)
_TWO_M53 = 2.0 ** -53


def _from_fraction(q: Fraction) -> int:
    q = q % 1
    return (q.numerator * ONE) // q.denominator


@dataclass(frozen=True, order=True)
class CirclePoint:
    bits: int

    def __post_init__(self):
        if not 0 <= self.bits < ONE:
            raise ValueError("circle point bits out of range")

    @classmethod
    def from_float(cls, x: float) -> "CirclePoint":
        return cls(_from_fraction(Fraction(x)))

    @classmethod
    def from_fraction(cls, q) -> "CirclePoint":
        return cls(_from_fraction(Fraction(q)))

    @classmethod
    def from_decimal(cls, text: str) -> "CirclePoint":
        return cls(_from_fraction(Fraction(Decimal(text))))

    def __float__(self) -> float:
        # int true division rounds to nearest; clamp so 1 - 2^-129 stays below 1
        return min(self.bits / ONE, 1.0 - _TWO_M53)

    def __add__(self, other: "CirclePoint") -> "CirclePoint":
        return CirclePoint((self.bits + other.bits) & MASK)

    def __sub__(self, other: "CirclePoint") -> "CirclePoint":
        return CirclePoint((self.bits - other.bits) & MASK)

    def to_decimal(self, digits: int = 40) -> str:
        return _bits_to_decimal(self.bits, digits)


def _bits_to_decimal(bits: int, digits: int = 40) -> str:
    with localcontext() as ctx:
        ctx.prec = digits + 10
        val = Decimal(bits) / Decimal(ONE)
        if val == 0:
            return "0"
        ctx.prec = digits
        return format(+val, "f") if val >= Decimal("1e-6") else format(+val, "e")


@dataclass(frozen=True)
class CircleArc:
    """Half-open arc [start, start + length) on the circle.

    ``length_bits`` lies in [0, 2^128]; 2^128 is the full circle.
    """

    start: CirclePoint
    length_bits: int

    def __post_init__(self):
        if not 0 <= self.length_bits <= ONE:
            raise ValueError("arc length out of range")

    @classmethod
    def from_floats(cls, start: float, length: float) -> "CircleArc":
        if not 0.0 <= length <= 1.0:
            raise ValueError("arc length must lie in [0, 1]")
        return cls(CirclePoint.from_float(start % 1.0), min(ONE, _from_fraction_len(length)))

    @classmethod
    def full(cls) -> "CircleArc":
        return cls(CirclePoint(0), ONE)

    @property
    def length(self) -> float:
        return self.length_bits / ONE

    @property
    def end(self) -> CirclePoint:
        return CirclePoint((self.start.bits + self.length_bits) & MASK)

    def contains(self, p: CirclePoint) -> bool:
        return ((p.bits - self.start.bits) & MASK) < self.length_bits

    def shifted(self, delta_bits: int) -> "CircleArc":
        return CircleArc(CirclePoint((self.start.bits + delta_bits) & MASK), self.length_bits)

    def to_json(self, digits: int = 40) -> dict:
        return {"start": self.start.to_decimal(digits),
                "length": _bits_to_decimal(self.length_bits, digits) if self.length_bits < ONE else "1"}

    @classmethod
    def from_json(cls, data: dict) -> "CircleArc":
        length = Fraction(Decimal(data["length"]))
        return cls(CirclePoint.from_decimal(data["start"]), min(ONE, (length.numerator * ONE) // length.denominator))


def _from_fraction_len(x: float) -> int:
    q = Fraction(x)
    return (q.numerator * ONE) // q.denominator


# ----------------------------------------------------------------------
# the system
# ----------------------------------------------------------------------

def _golden_bits() -> int:
    # (sqrt 5 - 1) / 2, truncated
    return (isqrt(5 << (2 * FRAC_BITS)) - ONE) // 2


def _sqrt2_bits() -> int:
    return isqrt(2 << (2 * FRAC_BITS)) - ONE


@dataclass(frozen=True)
class RotationSystem:
    alpha: CirclePoint
    descriptor: str

    @classmethod
    def golden(cls) -> "RotationSystem":
        return cls(CirclePoint(_golden_bits()), "golden")

    @classmethod
    def sqrt2(cls) -> "RotationSystem":
        return cls(CirclePoint(_sqrt2_bits()), "sqrt2")

    @classmethod
    def rational(cls, p: int, q: int) -> "RotationSystem":
        if q <= 0 or gcd(p, q) == 0:
            raise ValueError("bad rational rotation")
        # nearest 128-bit value; exact when q is a power of two
        bits = ((p % q) * ONE * 2 + q) // (2 * q) & MASK
        return cls(CirclePoint(bits), f"rational:{p}/{q}")

    @classmethod
    def from_bits(cls, bits: int) -> "RotationSystem":
        return cls(CirclePoint(bits & MASK), f"bits:{bits & MASK:032x}")

    @classmethod
    def parse(cls, text: str) -> "RotationSystem":
        t = text.strip()
        low = t.lower()
        if low == "golden":
            return cls.golden()
        if low in ("sqrt2", "sqrt2-1"):
            return cls.sqrt2()
        if low.startswith("rational:"):
            num, _, den = low[len("rational:"):].partition("/")
            try:
                return cls.rational(int(num), int(den))
            except ValueError:
                raise ValueError(f"bad rational descriptor {text!r}") from None
        if low.startswith("bits:"):
            try:
                bits = int(low[len("bits:"):], 16)
            except ValueError:
                raise ValueError(f"bad hex in {text!r}") from None
            if not 0 <= bits < ONE:
                raise ValueError("bits descriptor must fit in 128 bits")
            return cls.from_bits(bits)
        raise ValueError(f"unknown rotation descriptor {text!r}")

    @property
    def is_rational_preset(self) -> bool:
        return self.descriptor.startswith("rational:")

    @property
    def alpha_float(self) -> float:
        return float(self.alpha)


def orbit_point(sys: RotationSystem, x: CirclePoint, n: int) -> CirclePoint:
    """T^n x, exact."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return CirclePoint((x.bits + n * sys.alpha.bits) & MASK)


def orbit_bits(sys: RotationSystem, x: CirclePoint, ns: Iterable[int]) -> List[int]:
    a, xb = sys.alpha.bits, x.bits
    return [(xb + n * a) & MASK for n in ns]


def bits_to_unit_floats(bits: Sequence[int]) -> np.ndarray:
    """Fixed-point positions to floats in [0, 1), with 0 nudged off the origin."""
    shift = FRAC_BITS - 53
    out = np.array([b >> shift for b in bits], dtype=np.float64) * _TWO_M53
    zero = out == 0.0
    if zero.any():
        log.debug("%d orbit point(s) at 0 nudged by 2^-100", int(zero.sum()))
        out[zero] = SINGULARITY_DODGE
    return out


def orbit_floats(sys: RotationSystem, x: CirclePoint, ns: Iterable[int]) -> np.ndarray:
    return bits_to_unit_floats(orbit_bits(sys, x, ns))


def ergodic_average(sys: RotationSystem, f, seq: Sequence[int], x: CirclePoint) -> float:
    """(1/N) sum of f(T^{n_k} x) over the given times."""
    seq = list(seq)
    if not seq:
        raise ValueError("empty sequence")
    vals = np.asarray(f(orbit_floats(sys, x, seq)), dtype=float)
    return float(vals.sum() / len(seq))


# ----------------------------------------------------------------------
# bulk evaluation in 64-bit arithmetic
# ----------------------------------------------------------------------

def shift_table_u64(sys: RotationSystem, ns: np.ndarray) -> np.ndarray:
    """Top 64 bits of n*alpha (mod 1) for many n at once.

    Uses alpha truncated to 64 bits, so each entry is low by at most
    n * 2^-64; this is only used where positions feed a float average.
    """
    a64 = np.uint64(sys.alpha.bits >> 64)
    ns = np.asarray(ns, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return ns * a64


def u64_to_unit_floats(u: np.ndarray) -> np.ndarray:
    out = (u >> np.uint64(11)).astype(np.float64) * _TWO_M53
    out[out == 0.0] = SINGULARITY_DODGE
    return out


def point_u64(x: CirclePoint) -> np.uint64:
    return np.uint64(x.bits >> 64)


# ----------------------------------------------------------------------
# entry times
# ----------------------------------------------------------------------

def _chunk_hi_words(sys: RotationSystem, n0: int, count: int) -> np.ndarray:
    """Approximate top 64 bits of n*alpha for n in [n0, n0+count); error <= 1 unit."""
    a = sys.alpha.bits
    p0 = (n0 * a) & MASK
    p0_hi, p0_lo = p0 >> 64, p0 & ((1 << 64) - 1)
    a_hi, a_lo = a >> 64, a & ((1 << 64) - 1)
    j = np.arange(count, dtype=np.uint64)
    carry = np.floor(p0_lo / _TWO64 + j.astype(np.float64) * (a_lo / _TWO64)).astype(np.uint64)
    with np.errstate(over="ignore"):
        return np.uint64(p0_hi) + j * np.uint64(a_hi) + carry


def first_entry_times(sys: RotationSystem, targets: Sequence[Tuple[CirclePoint, CircleArc]],
                      n_min: int, n_max: int, distinct: bool = False,
                      chunk: int = 1 << 18) -> List[Optional[int]]:
    """For each (x, arc), the smallest n in [n_min, n_max] with T^n x in arc.

    With ``distinct`` the targets are served in order and no time is handed
    out twice (each gets the smallest time not already taken). Candidates are
    screened in 64-bit arithmetic and confirmed exactly.
    """
    if n_min > n_max:
        raise ValueError("need n_min <= n_max")
    a = sys.alpha.bits
    # T^n x in [s, s+L)  <=>  n*alpha in [s - x, s - x + L)
    shift_arcs = [(((arc.start.bits - x.bits) & MASK), arc.length_bits) for x, arc in targets]
    result: List[Optional[int]] = [None] * len(targets)
    pending = [i for i, (_, ln) in enumerate(shift_arcs) if ln > 0]
    used = set()
    n0 = n_min
    size = min(chunk, 1 << 14)
    while pending and n0 <= n_max:
        count = min(size, n_max - n0 + 1)
        hi = _chunk_hi_words(sys, n0, count)
        order = np.argsort(hi, kind="stable")
        sorted_hi = hi[order]
        still = []
        for i in pending:
            s, ln = shift_arcs[i]
            if ln >= ONE or (((s + ln) >> 64) - (s >> 64)) + 4 >= (1 << 64):
                cand = np.arange(count)
            else:
                lo64 = (s >> 64) - 2
                hi64 = ((s + ln) >> 64) + 2
                cand = _window(sorted_hi, order, lo64, hi64)
            found = None
            if len(cand):
                for j in np.sort(cand):
                    n = n0 + int(j)
                    if distinct and n in used:
                        continue
                    if ((n * a - s) & MASK) < ln:
                        found = n
                        break
            if found is None:
                still.append(i)
            else:
                result[i] = found
                if distinct:
                    used.add(found)
        pending = still
        n0 += count
        size = min(chunk, size * 2)
    return result


def _window(sorted_hi: np.ndarray, order: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Indices (into the chunk) whose word lies in [lo, hi] modulo 2^64."""
    top = 1 << 64
    lo %= top
    hi %= top
    if lo <= hi:
        a = np.searchsorted(sorted_hi, np.uint64(lo), side="left")
        b = np.searchsorted(sorted_hi, np.uint64(hi), side="right")
        return order[a:b]
    a = np.searchsorted(sorted_hi, np.uint64(lo), side="left")
    b = np.searchsorted(sorted_hi, np.uint64(hi), side="right")
    return np.concatenate((order[a:], order[:b]))


def first_entry_time(sys: RotationSystem, x: CirclePoint, arc: CircleArc,
                     n_min: int, n_max: int) -> Optional[int]:
    """Smallest n in [n_min, n_max] with T^n x in arc, or None."""
    return first_entry_times(sys, [(x, arc)], n_min, n_max)[0]


def interval_visit_fraction(sys: RotationSystem, x: CirclePoint, arc: CircleArc, N: int) -> float:
    """Fraction of n in [0, N) with T^n x in arc (exact membership)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    a, s, ln = sys.alpha.bits, arc.start.bits, arc.length_bits
    if ln >= ONE:
        return 1.0
    pos = (x.bits - s) & MASK
    hits = 0
    for _ in range(N):
        if pos < ln:
            hits += 1
        pos = (pos + a) & MASK
    return hits / N


# ----------------------------------------------------------------------
# bulk averages on grids of base points
# ----------------------------------------------------------------------

_EXACT_ABOVE = 1 << 50


def offsets_u64(sys: RotationSystem, ns) -> np.ndarray:
    """Top 64 bits of n*alpha mod 1 for arbitrary n >= 0; error <= 1 unit.

    Splits alpha into 64-bit halves; the carry out of the low half is
    estimated in floating point, which can be off by one near an integer.
    """
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size and ns.min() < 0:
        raise ValueError("times must be nonnegative")
    if ns.size and ns.max() >= _EXACT_ABOVE:
        # the float carry loses whole units past ~2^50
        return exact_offsets_u64(sys, ns.tolist())
    a = sys.alpha.bits
    a_hi, a_lo = a >> 64, a & ((1 << 64) - 1)
    n_u = ns.astype(np.uint64)
    carry = np.floor(ns.astype(np.float64) * (a_lo / _TWO64)).astype(np.uint64)
    with np.errstate(over="ignore"):
        return n_u * np.uint64(a_hi) + carry


def exact_offsets_u64(sys: RotationSystem, ns: Iterable[int]) -> np.ndarray:
    """Top 64 bits of n*alpha mod 1, exact (Python integer arithmetic)."""
    a = sys.alpha.bits
    return np.array([((int(n) * a) & MASK) >> 64 for n in ns], dtype=np.uint64)


def grid_words(count: int, start_bits: int = 0, span_bits: int = ONE) -> np.ndarray:
    """Top 64 bits of start + i*span/count for i in [0, count)."""
    return np.array([((start_bits + (i * span_bits) // count) & MASK) >> 64 for i in range(count)],
                    dtype=np.uint64) if count <= 4096 else _grid_words_fast(count, start_bits, span_bits)


def _grid_words_fast(count: int, start_bits: int, span_bits: int) -> np.ndarray:
    # i*span/count to 64-bit resolution: q and the remainder fraction handled in uint64
    step = (span_bits << 0) // count  # 128-bit step, truncated
    s_hi = np.uint64(start_bits >> 64)
    st_hi, st_lo = step >> 64, step & ((1 << 64) - 1)
    i = np.arange(count, dtype=np.uint64)
    carry = np.floor(np.arange(count, dtype=np.float64) * (st_lo / _TWO64)
                     + (start_bits & ((1 << 64) - 1)) / _TWO64).astype(np.uint64)
    with np.errstate(over="ignore"):
        return s_hi + i * np.uint64(st_hi) + carry


def words_to_floats(w: np.ndarray, round_up: bool = False) -> np.ndarray:
    out = (w >> np.uint64(11)).astype(np.float64) * _TWO_M53
    if round_up:
        out += _TWO_M53
    else:
        out[out == 0.0] = SINGULARITY_DODGE
    return out


def average_table(f, base_words: np.ndarray, offsets: np.ndarray,
                  block: int = 1 << 21) -> np.ndarray:
    """Mean over offsets of f(base + offset) for every base word.

    Both inputs are top-64-bit circle words; the sum wraps mod 1 exactly.
    """
    base_words = np.asarray(base_words, dtype=np.uint64)
    offsets = np.asarray(offsets, dtype=np.uint64)
    nb, no = base_words.size, offsets.size
    if no == 0:
        raise ValueError("empty sequence")
    sums = np.zeros(nb, dtype=np.float64)
    col = max(1, min(no, block))
    rows = max(1, block // col)
    with np.errstate(over="ignore"):
        for c0 in range(0, no, col):
            off = offsets[c0:c0 + col]
            for r0 in range(0, nb, rows):
                pos = base_words[r0:r0 + rows, None] + off[None, :]
                vals = np.asarray(f(words_to_floats(pos)), dtype=float)
                sums[r0:r0 + rows] += vals.sum(axis=1)
    return sums / no
