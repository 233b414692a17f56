"""Pearson correlation with a Student-t p-value, and least-squares fits."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

from .errors import TooFewSamples, ZeroVariance

_BETACF_EPS = 1e-10
_BETACF_MAX_ITER = 300
_TINY = 1e-300
_PERFECT_R = 1e-12


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    n: int
    t_stat: float
    p_value: float

    def to_dict(self) -> dict:
        d = asdict(self)
        # JSON has no infinity literal.
        if math.isinf(self.t_stat):
            d["t_stat"] = None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> CorrelationResult:
        t = d.get("t_stat")
        r = float(d["r"])
        return cls(r, int(d["n"]), math.copysign(math.inf, r) if t is None else float(t), float(d["p_value"]))


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # The fraction converges fast only below the mean; use symmetry above it.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_tailed(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return min(1.0, max(0.0, betainc(df / 2.0, 0.5, x)))


def _centered(xs: Sequence[float], ys: Sequence[float]):
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(v * v for v in dx)
    syy = math.fsum(v * v for v in dy)
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    return mx, my, sxx, syy, sxy


def _check_pair(xs, ys, min_n: int):
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    if len(xs) != len(ys):
        raise ValueError(f"series lengths differ: {len(xs)} vs {len(ys)}")
    if len(xs) < min_n:
        raise TooFewSamples(f"need at least {min_n} samples, got {len(xs)}")
    return xs, ys


def pearson(xs: Sequence[float], ys: Sequence[float]) -> CorrelationResult:
    """Product-moment correlation with a two-tailed t-test p-value.

    Raises:
        TooFewSamples: fewer than 3 pairs.
        ZeroVariance: either series is constant.
    """
    xs, ys = _check_pair(xs, ys, 3)
    if min(xs) == max(xs) or min(ys) == max(ys):
        raise ZeroVariance("correlation undefined for a constant series")
    n = len(xs)
    _, _, sxx, syy, sxy = _centered(xs, ys)
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    df = n - 2
    if 1.0 - abs(r) <= _PERFECT_R:
        return CorrelationResult(r, n, math.copysign(math.inf, r), 0.0)
    t = r * math.sqrt(df / (1.0 - r * r))
    return CorrelationResult(r, n, t, student_t_two_tailed(t, df))


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares ``(slope, intercept)``."""
    xs, ys = _check_pair(xs, ys, 2)
    if min(xs) == max(xs):
        raise ZeroVariance("x series is constant")
    mx, my, sxx, _, sxy = _centered(xs, ys)
    slope = sxy / sxx
    return slope, my - slope * mx
