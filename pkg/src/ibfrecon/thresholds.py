"""Full-extraction threshold constants ``c_h`` and under/over-threshold classification."""
from __future__ import annotations

import enum
import math
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

# Published constants; h=2 has no derivation and is fixed at 2.
C_TABLE: dict[int, Fraction] = {
    2: Fraction(2),
    3: Fraction("1.222"),
    4: Fraction("1.295"),
    5: Fraction("1.425"),
    6: Fraction("1.570"),
    7: Fraction("1.721"),
}


class Regime(str, enum.Enum):
    UNDER = "under_threshold"
    OVER = "over_threshold"


def _phi(x, h: int, alpha: float):
    # x - 1 + exp(-h alpha x^(h-1)); expm1 keeps precision near x = 0
    return x + np.expm1(-h * alpha * np.power(x, h - 1))


def predicate_margin(h: int, alpha: float, grid: int = 10_000) -> float:
    """Minimum of ``x - 1 + exp(-h*alpha*x**(h-1))`` over ``x`` in (0, 1).

    ``alpha`` is admissible iff the margin is positive.
    """
    xs = np.linspace(0.0, 1.0, grid + 2)[1:-1]
    vals = _phi(xs, h, alpha)
    k = int(np.argmin(vals))
    lo = xs[k - 1] if k > 0 else xs[0] / 2
    hi = xs[k + 1] if k + 1 < len(xs) else (xs[-1] + 1) / 2
    res = minimize_scalar(
        lambda t: float(_phi(t, h, alpha)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(min(vals[k], res.fun))


def compute_c_h(h: int, tol: float = 1e-6, grid: int = 10_000) -> float:
    """Bisect for the largest admissible ``alpha`` and return ``1 / alpha``."""
    if h < 3:
        raise ValueError("c_h is only defined by the supremum for h >= 3; use C_TABLE for h=2")
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = 0.0, 1.0
    # |d(1/alpha)| = |d alpha| / alpha^2 and alpha > 1/2 for h <= 7
    while (hi - lo) / max(lo, 0.25) ** 2 > tol:
        mid = (lo + hi) / 2
        if predicate_margin(h, mid, grid) > 0:
            lo = mid
        else:
            hi = mid
    return 1.0 / ((lo + hi) / 2)


def c_h(h: int) -> Fraction:
    """Threshold constant used for sizing and classification."""
    try:
        return C_TABLE[h]
    except KeyError:
        if h < 2:
            raise ValueError("h must be at least 2") from None
        return Fraction(round(compute_c_h(h), 3)).limit_denominator(1000)


def threshold_size(N: int, h: int) -> Fraction:
    """Largest load ``N / c_h`` still considered under threshold."""
    return Fraction(N) / c_h(h)


def classify(N: int, f: int, h: int) -> Regime:
    if h < 2:
        raise ValueError("classification needs h >= 2")
    return Regime.UNDER if f <= threshold_size(N, h) else Regime.OVER


def cells_for(d_estimate: int, h: int) -> int:
    """Cell count ``ceil(c_h * d)``, rounded up to a multiple of ``h``."""
    n = math.ceil(c_h(h) * d_estimate)
    return -(-n // h) * h
