"""Bracketing quadrature and bisection for monotone functions on (0, 1).

Every integral in the lab is of a nonnegative, monotone decreasing function,
possibly with an integrable singularity at the left endpoint. Monotonicity
alone gives rigorous Riemann brackets; functions that also declare convexity
get the (much tighter) midpoint/trapezoid bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NonIntegrableDetected, NotMonotoneDetected, ToleranceNotReached

DEFAULT_QUAD_TOL = 1e-8
DEFAULT_BISECT_TOL = 1e-10
DIVERGENCE_CAP = 1e9
PANEL_BUDGET = 10**6

# geometric panels examined before the singular tail is judged
_MIN_LEVELS = 4
_MAX_LEVELS = 1000
# panel lower bounds that fail to decay over this many levels certify divergence
_STALL_LEVELS = 100
# levels of geometric panels used before an exact primitive closes the tail
_PRIMITIVE_LEVELS = 8


@dataclass(frozen=True)
class MonotoneFunction:
    """A nonnegative function on (0, 1), zero beyond ``support_right_endpoint``.

    ``evaluator`` must accept floats and numpy arrays. ``primitive``, when
    given, is the exact antiderivative x -> integral of f over (0, x]; it is
    only used to close the singular tail at 0. ``declared_convex`` unlocks the
    second-order bracket and must only be set for convex f on the support.
    """

    evaluator: Callable
    declared_monotone_decreasing: bool = True
    support_right_endpoint: float = 1.0
    primitive: Optional[Callable[[float], float]] = None
    declared_convex: bool = False
    name: str = "f"

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            val = np.asarray(self.evaluator(arr), dtype=float)
            if self.support_right_endpoint < 1.0:
                val = np.where(arr > self.support_right_endpoint, 0.0, val)
        if val.ndim == 0:
            return float(val)
        return val

    def scaled(self, c: float) -> "MonotoneFunction":
        c = float(c)
        if c < 0:
            raise ValueError("scale factor must be nonnegative")
        prim = None
        if self.primitive is not None:
            base = self.primitive
            prim = lambda t, base=base: c * base(t)
        ev = self.evaluator
        return MonotoneFunction(
            evaluator=lambda x, ev=ev: c * np.asarray(ev(x), dtype=float),
            declared_monotone_decreasing=self.declared_monotone_decreasing,
            support_right_endpoint=self.support_right_endpoint,
            primitive=prim,
            declared_convex=self.declared_convex,
            name=f"{c:g}*{self.name}",
        )


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    lower_bound: float
    upper_bound: float
    panels: int = field(default=0, compare=False)

    @property
    def width(self) -> float:
        return self.upper_bound - self.lower_bound


# ----------------------------------------------------------------------
# stock functions
# ----------------------------------------------------------------------

def constant(c: float) -> MonotoneFunction:
    c = float(c)
    return MonotoneFunction(
        evaluator=lambda x: np.full_like(np.asarray(x, dtype=float), c),
        primitive=lambda t: c * t,
        declared_convex=True,
        name=f"const:{c:g}",
    )


def power(c: float) -> MonotoneFunction:
    """x -> x^{-c} for c >= 0."""
    c = float(c)
    if c < 0:
        raise ValueError("power exponent must be >= 0 for a decreasing function")
    prim = None
    if c < 1:
        prim = lambda t: t ** (1.0 - c) / (1.0 - c)
    return MonotoneFunction(
        evaluator=lambda x: np.power(x, -c),
        primitive=prim,
        declared_convex=True,
        name=f"power:{c:g}",
    )


def one_minus_x() -> MonotoneFunction:
    return MonotoneFunction(
        evaluator=lambda x: 1.0 - np.asarray(x, dtype=float),
        primitive=lambda t: t - 0.5 * t * t,
        declared_convex=True,
        name="oneminusx",
    )


def identity() -> MonotoneFunction:
    """x -> x. Increasing, so usable for averages but not for quadrature."""
    return MonotoneFunction(
        evaluator=lambda x: np.asarray(x, dtype=float) * 1.0,
        declared_monotone_decreasing=False,
        name="identity",
    )


# ----------------------------------------------------------------------
# quadrature
# ----------------------------------------------------------------------

def _panel_brackets(f: MonotoneFunction, u: np.ndarray, v: np.ndarray,
                    m: np.ndarray, convex: bool):
    """Lower/upper bracket of the integral over each [u_j, v_j] split m_j ways."""
    total = int(m.sum())
    owner = np.repeat(np.arange(len(m)), m)
    starts = np.concatenate(([0], np.cumsum(m)[:-1]))
    idx = np.arange(total) - starts[owner]
    h = (v - u) / m
    left = u[owner] + idx * h[owner]
    right = np.where(idx + 1 == m[owner], v[owner], left + h[owner])
    fl = f(left)
    fr = f(right)
    hw = h[owner]
    if convex:
        fm = f(0.5 * (left + right))
        lo_terms = hw * fm
        hi_terms = hw * 0.5 * (fl + fr)
    else:
        lo_terms = hw * fr
        hi_terms = hw * fl
    lo = np.bincount(owner, weights=lo_terms, minlength=len(m))
    hi = np.bincount(owner, weights=hi_terms, minlength=len(m))
    return lo, np.maximum(hi, lo)


def _refine(f, u, v, budget_tol, convex, max_panels):
    """Split each panel until the summed bracket width is <= budget_tol."""
    order = 2.0 if convex else 1.0
    m = np.ones(len(u), dtype=np.int64)
    lo, hi = _panel_brackets(f, u, v, m, convex)
    for _ in range(60):
        w = hi - lo
        total = float(w.sum())
        if total <= budget_tol:
            return lo, hi, int(m.sum())
        # Lagrange allocation for widths ~ W_j / m_j^order, then a safety factor
        per = np.power(np.maximum(w * m ** order, 0.0), 1.0 / (order + 1.0))
        s = float(per.sum())
        if s <= 0:
            return lo, hi, int(m.sum())
        target = per * (s / budget_tol) ** (1.0 / order)
        new_m = np.maximum(m, np.ceil(1.1 * target).astype(np.int64))
        new_m = np.where(w > 0, new_m, m)
        if np.array_equal(new_m, m):
            new_m = np.where(w > 0, 2 * m, m)
        m = new_m
        if int(m.sum()) > max_panels:
            raise ToleranceNotReached(
                f"bracket width {total:.3g} > {budget_tol:.3g} needs more than "
                f"{max_panels} panels")
        lo, hi = _panel_brackets(f, u, v, m, convex)
    raise ToleranceNotReached("panel refinement did not converge")


def integrate_monotone(f: MonotoneFunction, a: float, b: float,
                       tol: float = DEFAULT_QUAD_TOL,
                       divergence_cap: float = DIVERGENCE_CAP,
                       max_panels: int = PANEL_BUDGET) -> IntegralEstimate:
    """Bracketed integral of a monotone decreasing f over [a, b].

    Panels are geometric toward ``a``: [a + 2^{-j}(b-a), a + 2^{-j+1}(b-a)].
    When a = 0 the remaining tail (0, t] is closed by the primitive if one is
    attached, and otherwise by comparison with a geometric series fitted to the
    decay of the last panels.
    """
    if not (0.0 <= a < b <= 1.0):
        raise ValueError(f"need 0 <= a < b <= 1, got a={a}, b={b}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not f.declared_monotone_decreasing:
        raise ValueError(f"{f.name} is not declared monotone decreasing")
    b_eff = min(b, f.support_right_endpoint)
    if b_eff <= a:
        return IntegralEstimate(0.0, 0.0, 0.0, 0)
    length = b_eff - a

    tail_lo = tail_hi = 0.0
    if a > 0.0:
        fa = f(a)
        levels = _MIN_LEVELS
        while True:
            t = length * 2.0 ** -levels
            tail_lo = f(a + t) * t
            tail_hi = fa * t
            if tail_hi - tail_lo <= tol / 4 or levels >= 64:
                break
            levels += 1
    elif f.primitive is not None:
        levels = _PRIMITIVE_LEVELS
        t = length * 2.0 ** -levels
        tail_lo = tail_hi = float(f.primitive(t))
    else:
        levels, tail_lo, tail_hi = _singular_tail(f, length, tol, divergence_cap)

    j = np.arange(1, levels + 1, dtype=float)
    u = a + length * 2.0 ** -j
    v = a + length * 2.0 ** (1.0 - j)
    v[0] = b_eff
    budget = max(tol - (tail_hi - tail_lo), tol / 2)
    lo, hi, panels = _refine(f, u, v, budget, f.declared_convex, max_panels)
    lower = float(lo.sum()) + tail_lo
    upper = float(hi.sum()) + tail_hi
    if lower > divergence_cap:
        raise NonIntegrableDetected(f"partial lower bound {lower:.3g} exceeds cap")
    return IntegralEstimate(0.5 * (lower + upper), lower, upper, panels)


def _singular_tail(f, length, tol, cap):
    """Choose how many geometric levels to resolve and bound what is left.

    Returns (levels, tail_lower, tail_upper) for the interval (0, length*2^-levels].
    """
    crude_lo = []
    crude_hi = []
    running = 0.0
    stall = 0
    for level in range(1, _MAX_LEVELS + 1):
        u = length * 2.0 ** -level
        v = length * 2.0 ** (1 - level)
        w = v - u
        fu = f(u)
        if not math.isfinite(fu):
            raise NonIntegrableDetected(f"f is infinite at {u:.3g}")
        crude_hi.append(fu * w)
        crude_lo.append(f(v) * w)
        running += crude_lo[-1]
        if running > cap:
            raise NonIntegrableDetected(f"partial lower bounds exceed cap {cap:g}")
        if level >= 2 and crude_lo[-2] > 0 and crude_lo[-1] >= crude_lo[-2] * (1 - 1e-9):
            stall += 1
        else:
            stall = 0
        if stall >= _STALL_LEVELS:
            raise NonIntegrableDetected(
                f"panel integrals stop decaying toward 0 ({_STALL_LEVELS} levels)")
        if level < _MIN_LEVELS:
            continue
        recent = crude_hi[-min(8, level - 1) - 1:]
        ratios = [q / p for p, q in zip(recent, recent[1:]) if p > 0]
        if not ratios:
            return level, 0.0, 0.0
        rho = max(ratios)
        if rho >= 1.0:
            continue
        tail_hi = crude_hi[-1] * rho / (1.0 - rho)
        if tail_hi <= tol / 2:
            t = u
            return level, f(t) * t, tail_hi
    raise ToleranceNotReached("singular tail could not be bounded")


def prefix_average(f: MonotoneFunction, L: float, tol: float = DEFAULT_QUAD_TOL) -> float:
    """Mean of f over (0, L]."""
    if not (0.0 < L <= 1.0):
        raise ValueError(f"need 0 < L <= 1, got {L}")
    return integrate_monotone(f, 0.0, L, tol * L).value / L


# ----------------------------------------------------------------------
# bisection
# ----------------------------------------------------------------------

def bisect_monotone(g: Callable[[float], float], target: float, lo: float, hi: float,
                    tol: float = DEFAULT_BISECT_TOL, slack: float = 1e-9) -> float:
    """Locate where the monotone map g crosses ``target`` on [lo, hi].

    If g stays strictly above target on the whole interval the result is
    ``hi``; strictly below gives ``lo``. ``slack`` is the amount by which
    sampled values may break monotonicity before NotMonotoneDetected is raised.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    glo, ghi = g(lo), g(hi)
    if min(glo, ghi) > target:
        return hi
    if max(glo, ghi) < target:
        return lo
    decreasing = glo >= ghi
    a, b, ga, gb = lo, hi, glo, ghi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        gm = g(mid)
        pad = slack * max(1.0, abs(ga), abs(gb))
        if gm > max(ga, gb) + pad or gm < min(ga, gb) - pad:
            raise NotMonotoneDetected(
                f"g({mid:.6g})={gm:.6g} outside [{min(ga, gb):.6g}, {max(ga, gb):.6g}]")
        above = gm > target if decreasing else gm >= target
        if above == decreasing:
            a, ga = mid, gm
        else:
            b, gb = mid, gm
    return 0.5 * (a + b)
