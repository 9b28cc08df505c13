"""Orlicz growth functions, the Luxemburg norm and membership integrals."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Tuple

import numpy as np

from .errors import NonIntegrableDetected, NormInfinite, ToleranceNotReached
from .numerics import (
    IntegralEstimate,
    MonotoneFunction,
    bisect_monotone,
    integrate_monotone,
)


class Family(enum.Enum):
    POWER = "power"
    LLOG_BETA = "llog"
    COMPOSITE = "composite"


@dataclass(frozen=True)
class OrliczFunction:
    """Even growth function.

    power(p):          |t|^p
    llog(beta):        |t| log(|t|+1)^beta
    composite(s, p):   |t|^s log(|t|+1)^p
    """

    family: Family
    params: Tuple[float, ...]

    def __post_init__(self):
        if self.family is Family.POWER:
            (p,) = self.params
            if p < 1:
                raise ValueError("power family needs p >= 1")
        elif self.family is Family.LLOG_BETA:
            (beta,) = self.params
            if beta <= 0:
                raise ValueError("LLog^beta needs beta > 0")
        else:
            s, p = self.params
            if s < 1 or p <= 0:
                raise ValueError("composite family needs s >= 1 and p > 0")

    @classmethod
    def power(cls, p: float) -> "OrliczFunction":
        return cls(Family.POWER, (float(p),))

    @classmethod
    def llog(cls, beta: float) -> "OrliczFunction":
        return cls(Family.LLOG_BETA, (float(beta),))

    @classmethod
    def composite(cls, s: float, p: float) -> "OrliczFunction":
        return cls(Family.COMPOSITE, (float(s), float(p)))

    @classmethod
    def parse(cls, text: str) -> "OrliczFunction":
        """Parse 'power:2', 'llog:1' or 'composite:1,0.5'."""
        tag, _, rest = text.strip().partition(":")
        try:
            nums = [float(v) for v in rest.split(",")] if rest else []
        except ValueError:
            raise ValueError(f"bad Orlicz parameters in {text!r}") from None
        tag = tag.lower()
        if tag == "power" and len(nums) == 1:
            return cls.power(nums[0])
        if tag in ("llog", "llogbeta") and len(nums) == 1:
            return cls.llog(nums[0])
        if tag == "composite" and len(nums) == 2:
            return cls.composite(*nums)
        raise ValueError(f"unknown Orlicz function {text!r}")

    @property
    def is_convex(self) -> bool:
        if self.family is Family.POWER:
            return True
        if self.family is Family.LLOG_BETA:
            return self.params[0] >= 1
        s, p = self.params
        return p >= 1

    def __call__(self, t):
        a = np.abs(np.asarray(t, dtype=float))
        if self.family is Family.POWER:
            out = np.power(a, self.params[0])
        elif self.family is Family.LLOG_BETA:
            out = a * np.power(np.log1p(a), self.params[0])
        else:
            s, p = self.params
            out = np.power(a, s) * np.power(np.log1p(a), p)
        if out.ndim == 0:
            return float(out)
        return out

    def __str__(self):
        return f"{self.family.value}:{','.join(f'{v:g}' for v in self.params)}"


def phi_eval(phi: OrliczFunction, t: float) -> float:
    return float(phi(t))


def compose(phi: OrliczFunction, f: MonotoneFunction) -> MonotoneFunction:
    """x -> phi(f(x)); decreasing because phi is nondecreasing on [0, inf)."""
    ev = f.evaluator
    return MonotoneFunction(
        evaluator=lambda x: phi(np.asarray(ev(x), dtype=float)),
        support_right_endpoint=f.support_right_endpoint,
        declared_convex=phi.is_convex and f.declared_convex,
        name=f"{phi}({f.name})",
    )


def membership_integral(phi: OrliczFunction, f: MonotoneFunction,
                        tol: float = 1e-8) -> IntegralEstimate:
    """Integral of phi(f) over (0, 1); raises NonIntegrableDetected on divergence."""
    return integrate_monotone(compose(phi, f), 0.0, 1.0, tol)


def _is_zero(f: MonotoneFunction) -> bool:
    # decreasing and nonnegative: zero near 0 means zero everywhere
    return f(2.0 ** -60) == 0.0


def luxemburg_norm(phi: OrliczFunction, f: MonotoneFunction, tol: float = 1e-8) -> float:
    """inf{k > 0 : integral of phi(f/k) <= 1}, to relative tolerance ``tol``."""
    if _is_zero(f):
        return 0.0
    quad_tol = max(tol * 0.05, 1e-12)

    def modular(k: float) -> float:
        try:
            return membership_integral(phi, f.scaled(1.0 / k), quad_tol).value
        except (NonIntegrableDetected, ToleranceNotReached):
            return math.inf

    # probe k = 2^j, j in [-60, 60]; the modular is nonincreasing in k
    j = 0
    if modular(1.0) <= 1.0:
        while j > -60 and modular(2.0 ** (j - 1)) <= 1.0:
            j -= 1
        if j == -60:
            return 2.0 ** -60
    else:
        while j < 60 and not modular(2.0 ** j) <= 1.0:
            j += 1
        if not modular(2.0 ** j) <= 1.0:
            raise NormInfinite(f"integral of {phi}({f.name}/k) exceeds 1 for all k <= 2^60")
    lo, hi = 2.0 ** (j - 1), 2.0 ** j

    def g(k):
        v = modular(k)
        return 1e300 if math.isinf(v) else v

    return bisect_monotone(g, 1.0, lo, hi, tol=tol * lo, slack=100 * quad_tol)


@dataclass
class SawyerCheckReport:
    C: float
    p_exponent: float
    violations: List[Tuple[float, float]] = field(default_factory=list)
    max_ratio: float = 0.0
    filtered: List[Tuple[float, float]] = field(default_factory=list)
    checked: int = 0


def sawyer_growth_check(phi: OrliczFunction, C: float, p: float,
                        grid: Iterable[Tuple[float, float]]) -> SawyerCheckReport:
    """Test phi(xy) <= C phi(y)^p phi(x) on the points with y >= 1, x >= 1/y."""
    report = SawyerCheckReport(C=float(C), p_exponent=float(p))
    for x, y in grid:
        x, y = float(x), float(y)
        if not (y >= 1.0 and x >= 1.0 / y):
            report.filtered.append((x, y))
            continue
        report.checked += 1
        lhs = phi(x * y)
        base = phi(y) ** p * phi(x)
        if base > 0:
            report.max_ratio = max(report.max_ratio, lhs / base)
        if lhs > C * base:
            report.violations.append((x, y))
    return report
