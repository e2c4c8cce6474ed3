"""Closed-form optimal constants, bounds and the small 1-D optimizations behind them.

Everything with integer inputs is computed with :class:`fractions.Fraction`
and only converted to ``float`` on the way out, so golden tests can compare
exactly via the ``exact`` attribute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import DimensionTooSmall, TooFewPoles
from .geometry import check_dimension


class Attained(str, Enum):
    NOT_ATTAINED = "NotAttained"
    ATTAINED = "Attained"
    UNKNOWN = "Unknown"


class Placement(str, Enum):
    INTERIOR = "InteriorWholeSpace"
    BOUNDARY = "BoundaryBallOrHalfSpace"


class QuadraticVariant(str, Enum):
    INTERIOR = "Interior"
    HALF_SPACE = "HalfSpace"


@dataclass(frozen=True)
class ConstantResult:
    value: float
    setting: str
    attained_claim: Attained
    exact: Fraction
    d: int
    n: int | None = None


@dataclass(frozen=True)
class AlphaOptimum:
    argmax: float
    max_value: float
    feasible_interval: tuple  # (lo, hi); unbounded ends are +-inf


def _result(exact, setting, claim, d, n=None):
    return ConstantResult(float(exact), setting, Attained(claim), exact, d, n)


def _count(n):
    if int(n) != n:
        raise ValueError(f"pole count must be an integer, got {n!r}")
    n = int(n)
    if n < 2:
        raise TooFewPoles(f"n={n}; the multipolar setting needs n >= 2")
    return n


def hardy_interior_constant(d):
    d = check_dimension(d, 3)
    return _result(Fraction((d - 2) ** 2, 4), "hardy_interior", "NotAttained", d)


def hardy_boundary_constant(d):
    """Best constant for domains contained in a half-space with the pole on the boundary."""
    d = check_dimension(d, 2)
    return _result(Fraction(d * d, 4), "hardy_boundary", "NotAttained", d)


def multipolar_constant(d, n, placement):
    placement = Placement(placement)
    n = _count(n)
    if placement is Placement.INTERIOR:
        d = check_dimension(d, 3)
        claim = "NotAttained" if n == 2 else "Unknown"
        value = Fraction((d - 2) ** 2, n * n)
        setting = "multipolar_interior"
    else:
        d = check_dimension(d, 2)
        claim = "Attained" if n >= 3 else "NotAttained"
        value = Fraction(d * d, n * n)
        setting = "multipolar_boundary"
    return _result(value, setting, claim, d, n)


def multipolar_bounds(d, n, placement):
    """(strict lower, non-strict upper) bound on the multipolar best constant.

    For interior poles with n = 2 the constant is known exactly, so n >= 3 is
    required there.
    """
    placement = Placement(placement)
    n = _count(n)
    if placement is Placement.INTERIOR:
        d = check_dimension(d, 3)
        if n < 3:
            raise TooFewPoles("interior bounds need n >= 3; for n = 2 the constant is exact")
        lo, hi = Fraction((d - 2) ** 2, n * n), Fraction((d - 2) ** 2, 4 * n - 4)
    else:
        d = check_dimension(d, 2)
        lo, hi = Fraction((d - 2) ** 2, n * n), Fraction(d * d, 4 * n - 4)
    return float(lo), float(hi)


def rellich_constant(d):
    d = check_dimension(d, 5)
    return _result(Fraction(d * d * (d - 4) ** 2, 16), "rellich", "Unknown", d)


def hardy_rellich_constant(d):
    d = check_dimension(d, 3)
    if d >= 5:
        value = Fraction(d * d, 4)
    elif d == 4:
        value = Fraction(3)
    else:
        value = Fraction(25, 36)
    return _result(value, "hardy_rellich", "NotAttained", d)


def maximize_hardy_quadratic(d, variant):
    """Vertex of -a(a+d-2) (interior) or -a(a+d) (half-space)."""
    variant = QuadraticVariant(variant)
    if variant is QuadraticVariant.INTERIOR:
        d = check_dimension(d, 3)
        shift = d - 2
    else:
        d = check_dimension(d, 2)
        shift = d
    a = Fraction(-shift, 2)
    value = -a * (a + shift)
    return AlphaOptimum(float(a), float(value), (-math.inf, math.inf))


def rellich_quartic(d, alpha):
    """f(a) = a (a-2)(d-2+a)(d-4+a), the coefficient in the bilaplacian of |x|^a."""
    return alpha * (alpha - 2) * (d - 2 + alpha) * (d - 4 + alpha)


def rellich_quartic_derivative(d, alpha):
    # f = (b^2 - c^2)(b^2 - e^2) in b = a + (d-4)/2 with c = (d-4)/2, e = d/2
    b = alpha + (d - 4) / 2
    c2, e2 = ((d - 4) / 2) ** 2, (d / 2) ** 2
    return 2 * b * (b * b - e2) + 2 * b * (b * b - c2)


def rellich_critical_points(d):
    """The three roots of f', increasing."""
    d = check_dimension(d, 5)
    root = math.sqrt(d * d - 4 * d + 8)
    mid = -(d - 4) / 2
    return ((-(d - 4) - root) / 2, mid, (-(d - 4) + root) / 2)


def maximize_rellich_quartic(d):
    """Maximise f over the admissible interval [-(d-2), 0].

    Candidates are the endpoints plus the critical points that fall inside the
    interval; the winner is evaluated exactly when it is rational.
    """
    d = check_dimension(d, 5)
    lo, hi = -(d - 2), 0
    candidates = [Fraction(lo), Fraction(hi), Fraction(-(d - 4), 2)]
    candidates += [a for a in rellich_critical_points(d) if lo <= a <= hi]
    best = max(candidates, key=lambda a: rellich_quartic(d, a))
    value = rellich_quartic(d, best)
    return AlphaOptimum(float(best), float(value), (float(lo), float(hi)))


def coulomb_lower_bound(d, Z):
    """inf over r > 0 of mu*/r^2 - Z/r with mu* the interior Hardy constant."""
    mu = hardy_interior_constant(d).exact
    if not Z > 0:
        raise ValueError("Z must be positive")
    if isinstance(Z, int):
        return float(-Fraction(Z * Z) / (4 * mu))
    return -Z * Z / (4 * float(mu))


@dataclass(frozen=True)
class EpsilonTradeoff:
    argmin: float
    min_value: float
    implied_constant: float
    exact_min: Fraction

    def __iter__(self):
        return iter((self.argmin, self.min_value))


def hardy_rellich_epsilon_tradeoff(d):
    """Minimise (1/e - 4) 4/d^2 + e over (0, 1/4].

    The interior minimiser is 2/d (inside the interval once d >= 8).  The
    minimum is 4(d-4)/d^2; the Hardy-Rellich constant delivered by the
    argument is (d-4)/min = d^2/4.
    """
    d = check_dimension(d, 2)
    if d < 8:
        raise DimensionTooSmall(f"d={d}; the minimiser 2/d lies in (0, 1/4] only for d >= 8")
    eps = Fraction(2, d)
    value = (1 / eps - 4) * Fraction(4, d * d) + eps
    return EpsilonTradeoff(float(eps), float(value), float((d - 4) / value), value)


def constants_table(d_min, d_max, n_max=6):
    """Every constant defined for d in [d_min, d_max], as ConstantResult rows."""
    if d_max < d_min:
        raise ValueError("d_max must be >= d_min")
    rows = []
    for d in range(d_min, d_max + 1):
        for fn in (hardy_interior_constant, hardy_boundary_constant, hardy_rellich_constant,
                   rellich_constant):
            try:
                rows.append(fn(d))
            except DimensionTooSmall:
                pass
        for placement in Placement:
            for n in range(2, n_max + 1):
                try:
                    rows.append(multipolar_constant(d, n, placement))
                except DimensionTooSmall:
                    pass
    return rows
