"""Minimizing sequences and their Rayleigh quotients.

Every quotient is reduced to 1-D radial integrals (or, for the multipolar
ball minimizer, to an n-D QMC integral with pole exclusions) and reported as
a :class:`QuotientReport` carrying both integrals and their error estimates.

Limits of a sweep are estimated from the secants ``(N_i - N_j)/(D_i - D_j)``
of consecutive members rather than from the quotients themselves: along these
families N and D both blow up while ``N - mu D`` stays bounded, so the secants
approach mu much faster than the quotients do (the quotients converge only
logarithmically for the interior Hardy family).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize, special

from . import constants
from .errors import NonIntegrable, TooFewPoles
from .geometry import PoleSet, PotentialSpec, check_dimension
from .quadrature import (
    Box,
    Exclusion,
    IntegralResult,
    angular_moment,
    integrate_1d,
    integrate_nd,
    sphere_area,
)

RADIAL_TOL = 1e-11


# --------------------------------------------------------------------------
# Cutoffs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CutoffSpec:
    """theta = 1 on [0, R], 0 on [2R, inf), monotone in between.

    ``SmoothBump`` is the C-infinity transition 1 - s(t) with
    s = e^(-1/t) / (e^(-1/t) + e^(-1/(1-t))), t = (r-R)/R.
    ``PolySmoothstep`` is 1 - I_t(order+1, order+1) (regularised incomplete
    beta), which is C^order at both junctions.
    """

    kind: str = "SmoothBump"
    R: float = 1.0
    order: int = 3

    def __post_init__(self):
        if self.kind not in ("SmoothBump", "PolySmoothstep"):
            raise ValueError(f"unknown cutoff kind {self.kind!r}")
        if not self.R > 0:
            raise ValueError("cutoff radius must be > 0")
        if self.kind == "PolySmoothstep" and self.order < 2:
            raise ValueError("PolySmoothstep needs order >= 2 (two derivatives are used)")

    def rescaled(self, lam):
        return CutoffSpec(self.kind, self.R * lam, self.order)

    def __call__(self, r):
        """(theta, theta', theta'') at r; scalars in, scalars out."""
        t = (np.asarray(r, dtype=float) - self.R) / self.R
        inside = (t > 0) & (t < 1)
        tt = np.where(inside, t, 0.5)
        if self.kind == "SmoothBump":
            z = 1.0 / tt - 1.0 / (1.0 - tt)
            s = special.expit(-z)
            w = 1.0 / tt**2 + 1.0 / (1.0 - tt) ** 2
            wp = -2.0 / tt**3 + 2.0 / (1.0 - tt) ** 3
            s1 = s * (1.0 - s) * w
            s2 = (1.0 - 2.0 * s) * s1 * w + s * (1.0 - s) * wp
        else:
            k = self.order + 1
            s = special.betainc(k, k, tt)
            beta = special.beta(k, k)
            s1 = tt ** (k - 1) * (1.0 - tt) ** (k - 1) / beta
            s2 = (k - 1) * (tt ** (k - 2) * (1.0 - tt) ** (k - 1)
                            - tt ** (k - 1) * (1.0 - tt) ** (k - 2)) / beta
        theta = np.where(inside, 1.0 - s, np.where(t <= 0, 1.0, 0.0))
        d1 = np.where(inside, -s1 / self.R, 0.0)
        d2 = np.where(inside, -s2 / self.R**2, 0.0)
        if np.ndim(theta) == 0:
            return float(theta), float(d1), float(d2)
        return theta, d1, d2

    def to_json(self):
        out = {"kind": self.kind, "R": self.R}
        if self.kind == "PolySmoothstep":
            out["order"] = self.order
        return out


@dataclass(frozen=True)
class SphericalHarmonicDeg1:
    """phi_1(sigma) = normalization * (sigma . direction), unit L^2 norm on the sphere."""

    d: int
    direction: tuple = None
    normalization: float = None

    def __post_init__(self):
        d = check_dimension(self.d, 2)
        e = np.zeros(d)
        e[-1] = 1.0
        direction = e if self.direction is None else np.asarray(self.direction, dtype=float)
        if direction.shape != (d,):
            raise ValueError("direction must have length d")
        direction = direction / np.linalg.norm(direction)
        object.__setattr__(self, "direction", tuple(direction))
        if self.normalization is None:
            object.__setattr__(self, "normalization", math.sqrt(d / sphere_area(d)))

    @property
    def eigenvalue(self):
        """Laplace-Beltrami eigenvalue of a degree-one harmonic."""
        return self.d - 1

    def __call__(self, sigma):
        return self.normalization * (np.asarray(sigma) @ np.asarray(self.direction))


FAMILIES = ("HardyInterior", "HalfSpace", "HardyRellich")


@dataclass(frozen=True)
class MinimizingFamily:
    kind: str
    d: int
    cutoff: CutoffSpec = field(default_factory=CutoffSpec)
    harmonic: Optional[SphericalHarmonicDeg1] = None

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"unknown family {self.kind!r}")
        minimum = {"HardyInterior": 3, "HalfSpace": 2, "HardyRellich": 3}[self.kind]
        check_dimension(self.d, minimum)
        if self.kind == "HardyRellich":
            needs = self.d in (3, 4)
            if needs and self.harmonic is None:
                object.__setattr__(self, "harmonic", SphericalHarmonicDeg1(self.d))
            if not needs and self.harmonic is not None:
                raise ValueError("the degree-one harmonic factor is only used for d in {3, 4}")

    def limit_constant(self):
        """The optimal constant the family is built to approach."""
        if self.kind == "HardyInterior":
            return constants.hardy_interior_constant(self.d).value
        if self.kind == "HalfSpace":
            return constants.hardy_boundary_constant(self.d).value
        return constants.hardy_rellich_constant(self.d).value

    def quotient(self, eps, tol=RADIAL_TOL):
        if self.kind == "HardyInterior":
            return quotient_hardy_interior(self.d, eps, self.cutoff, tol)
        if self.kind == "HalfSpace":
            return quotient_halfspace(self.d, eps, tol)
        return quotient_hardy_rellich(self.d, eps, self.cutoff, self.harmonic, tol)


@dataclass(frozen=True)
class QuotientReport:
    numerator: IntegralResult
    denominator: IntegralResult
    quotient: float
    eps: float

    @classmethod
    def of(cls, num, den, eps):
        if not den.value > 0:
            raise NonIntegrable("denominator integral is not positive")
        return cls(num, den, num.value / den.value, eps)

    @property
    def error(self):
        q = abs(self.quotient)
        return q * (self.numerator.error_estimate / abs(self.numerator.value)
                    + self.denominator.error_estimate / self.denominator.value)


def _piecewise(f, breaks, tol, **kwargs):
    total = None
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        part = integrate_1d(f, a, b, tol, **kwargs)
        total = part if total is None else total + part
    return total


def _check_eps(eps):
    if not eps > 0:
        raise ValueError("eps must be > 0")


# --------------------------------------------------------------------------
# Families
# --------------------------------------------------------------------------


def quotient_hardy_interior(d, eps, cutoff=None, tol=RADIAL_TOL):
    """u = (r^2 + eps^2)^(-(d-2)/4) theta(r); grad energy over int u^2/|x|^2."""
    d = check_dimension(d, 3)
    _check_eps(eps)
    cutoff = cutoff or CutoffSpec()
    k = (d - 2) / 4.0
    R = cutoff.R

    def parts(r):
        th, dth, _ = cutoff(r)
        base = (r * r + eps * eps) ** (-k)
        dbase = -2.0 * k * r * base / (r * r + eps * eps)
        return base * th, dbase * th + base * dth

    breaks = sorted({0.0, min(eps, R), R, 2 * R})
    num = _piecewise(lambda r: parts(r)[1] ** 2 * r ** (d - 1), breaks, tol)
    den = _piecewise(lambda r: parts(r)[0] ** 2 * r ** (d - 3), breaks, tol)
    area = sphere_area(d)
    return QuotientReport.of(num.scaled(area), den.scaled(area), eps)


def quotient_halfspace(d, eps, tol=RADIAL_TOL):
    """u = x_d on the unit half-ball, x_d |x|^(-d/2-eps) outside it.

    Inner contributions are exact: |grad x_d|^2 = 1 gives the half-ball
    volume, and the weighted mass is (half-sphere moment)/d.  Outer pieces are
    radial integrals on [1, inf) times the half-sphere moments.
    """
    d = check_dimension(d, 2)
    if not eps > 0:
        raise NonIntegrable("the outer profile needs decay faster than |x|^(-d/2)")
    q = -d / 2.0 - eps
    h1 = angular_moment(d, "HalfSphereOne")
    h2 = angular_moment(d, "HalfSphereLastCoordSquared")
    inner_num = IntegralResult(h2, 0.0, 0)
    inner_den = IntegralResult(h2 / d, 0.0, 0)
    radial = integrate_1d(lambda r: r ** (2 * q + d - 1), 1.0, math.inf, tol)
    # |grad u|^2 = r^(2q) (1 + (2q + q^2) sigma_d^2); u^2/|x|^2 = r^(2q) sigma_d^2
    outer_num = radial.scaled(h1 + (2 * q + q * q) * h2)
    outer_den = radial.scaled(h2)
    return QuotientReport.of(inner_num + outer_num, inner_den + outer_den, eps)


def quotient_hardy_rellich(d, eps, cutoff=None, harmonic=None, tol=RADIAL_TOL):
    """u = r^p theta(r) [phi_1(sigma)] with p = -(d-4)/2 + eps.

    The angular factor (present for d = 3, 4) separates with eigenvalue d-1.
    Both integrands are r^(2 eps - 1) times a smooth function, and that power
    is integrated analytically.
    """
    d = check_dimension(d, 3)
    _check_eps(eps)
    cutoff = cutoff or CutoffSpec()
    if d in (3, 4):
        harmonic = harmonic or SphericalHarmonicDeg1(d)
        lam = harmonic.eigenvalue
        angular = harmonic.normalization**2 * angular_moment(d, "LastCoordSquared")
    else:
        if harmonic is not None:
            raise ValueError("the degree-one harmonic factor is only used for d in {3, 4}")
        lam, angular = 0.0, sphere_area(d)
    p = -(d - 4) / 2.0 + eps
    gamma = 2.0 * eps - 1.0
    if not gamma > -1:
        raise NonIntegrable(f"local power r^{gamma} is not integrable at the origin")
    R = cutoff.R
    c0 = p * (p - 1) + (d - 1) * p - lam
    c1 = 2 * p + d - 1

    def A(r):
        G, G1, G2 = cutoff(r)
        return c0 * G + c1 * r * G1 + r * r * G2

    def B(r):
        G, G1, _ = cutoff(r)
        return (p * G + r * G1) ** 2 + lam * G * G

    num = integrate_1d(lambda r: A(r) ** 2, 0.0, R, tol, weight_power=gamma) \
        + integrate_1d(lambda r: r**gamma * A(r) ** 2, R, 2 * R, tol)
    den = integrate_1d(B, 0.0, R, tol, weight_power=gamma) \
        + integrate_1d(lambda r: r**gamma * B(r), R, 2 * R, tol)
    return QuotientReport.of(num.scaled(angular), den.scaled(angular), eps)


def hardy_rellich_fields(d, eps, cutoff=None, harmonic=None):
    """Vectorised (|Laplacian u|^2, |grad u|^2/|x|^2) of the Hardy-Rellich family in R^d.

    Written directly in Cartesian form, independently of the separated radial
    formulas, so it can serve as a cross-check.
    """
    cutoff = cutoff or CutoffSpec()
    p = -(d - 4) / 2.0 + eps

    def fields(x):
        r = np.linalg.norm(x, axis=1)
        G, G1, G2 = cutoff(r)
        f = r**p * G
        f1 = p * r ** (p - 1) * G + r**p * G1
        f2 = p * (p - 1) * r ** (p - 2) * G + 2 * p * r ** (p - 1) * G1 + r**p * G2
        if d >= 5:
            lap = f2 + (d - 1) * f1 / r
            grad2 = f1**2
        else:
            h = harmonic or SphericalHarmonicDeg1(d)
            e = np.asarray(h.direction)
            # u = N h(r) (x . e) with h = f/r
            hh = f / r
            h1 = (f1 - hh) / r
            h2 = (f2 - 2 * h1) / r
            xe = x @ e
            lap = h.normalization * xe * (h2 + (d + 1) * h1 / r)
            grad = h.normalization * (hh[:, None] * e + (h1 * xe / r)[:, None] * x)
            grad2 = np.sum(grad**2, axis=1)
        return lap**2, grad2 / r**2

    return fields


# --------------------------------------------------------------------------
# Multipolar ball minimizer
# --------------------------------------------------------------------------


def quotient_multipolar_ball_minimizer(d, poles, center=None, radius=1.0, *,
                                       n_samples=1 << 20, seed=0, exclusion=0.05):
    """Quotient of phi = (radius^2 - |x-c|^2) prod |x-a_i|^(-d/n) on B_radius(c).

    The poles must lie on the sphere.  Near a pole both integrands behave like
    |x-a|^(-2d/n); ``exclusion`` (relative to the radius) sets the excluded
    ball whose mass is restored by that power law.
    """
    d = check_dimension(d, 2)
    poles = PoleSet(poles)
    if poles.d != d:
        raise ValueError("pole dimension does not match d")
    n = poles.n
    if n < 2:
        raise TooFewPoles("the multipolar quotient needs n >= 2")
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    on_sphere = np.linalg.norm(poles.poles - c, axis=1)
    if not np.allclose(on_sphere, radius, rtol=1e-9, atol=1e-12):
        raise ValueError("poles must lie on the boundary sphere")
    beta = -d / n
    local = 2 * beta
    if local + d <= 0:
        raise NonIntegrable(f"n={n}: the minimizer has infinite energy near each pole")
    V = PotentialSpec.multipolar(poles.poles)
    A = poles.poles

    def phi_parts(x):
        y = x - c
        w = radius**2 - np.sum(y**2, axis=1)
        diff = x[:, None, :] - A[None, :, :]
        r2 = np.sum(diff**2, axis=-1)
        P = np.exp(0.5 * beta * np.sum(np.log(r2), axis=1))
        G = beta * np.sum(diff / r2[:, :, None], axis=1)
        grad = -2.0 * y * P[:, None] + (w * P)[:, None] * G
        return w, w * P, grad

    def num(x):
        w, _, grad = phi_parts(x)
        return np.where(w > 0, np.sum(grad**2, axis=1), 0.0)

    def den(x):
        w, phi, _ = phi_parts(x)
        return np.where(w > 0, V.evaluate(x, check=False) * phi**2, 0.0)

    box = Box.cube(d, radius, c)
    excl = [Exclusion(tuple(a), exclusion * radius, local) for a in A]
    N = integrate_nd(num, box, excl, n_samples, seed)
    D = integrate_nd(den, box, excl, n_samples, seed)
    return QuotientReport.of(N, D, 0.0)


def regular_poles(d, n, radius=1.0):
    """Symmetric pole layouts on the sphere: equatorial n-gon, or a tetrahedron for d=3, n=4."""
    if d == 3 and n == 4:
        return np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) * radius / math.sqrt(3)
    out = np.zeros((n, d))
    ang = 2 * math.pi * np.arange(n) / n
    out[:, 0], out[:, 1] = radius * np.cos(ang), radius * np.sin(ang)
    return out


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    family: MinimizingFamily
    reports: tuple
    limit: float
    monotone: bool
    fit_exponent: Optional[float]
    secants: tuple

    @property
    def quotients(self):
        return [r.quotient for r in self.reports]


def power_fit(xs, ys):
    """Fit y = mu + a x^p through three points; returns (mu, p) or None."""
    (x1, x2, x3), (y1, y2, y3) = xs, ys
    if y2 == y3:
        return None
    target = (y1 - y2) / (y2 - y3)

    def g(p):
        return target - (x1**p - x2**p) / (x2**p - x3**p)

    try:
        p = optimize.brentq(g, 1e-6, 10.0)
    except ValueError:
        return None
    a = (y2 - y3) / (x2**p - x3**p)
    return y3 - a * x3**p, p


def _threads(n):
    cap = os.environ.get("HF_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n, limit))


def sweep(family, eps_list, tol=RADIAL_TOL):
    """Quotients along a strictly decreasing eps list, plus an extrapolated limit.

    The limit fits mu + a eps^p to the last three secants (placed at the
    geometric means of consecutive eps); with fewer points, or if the fit
    fails, the last secant (or quotient) is used.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("empty eps list")
    if any(e <= 0 for e in eps_list):
        raise ValueError("every eps must be > 0")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be strictly decreasing")
    with ThreadPoolExecutor(_threads(len(eps_list))) as pool:
        reports = tuple(pool.map(lambda e: family.quotient(e, tol), eps_list))
    q = [r.quotient for r in reports]
    monotone = all(b < a + r.error + s.error
                   for a, b, r, s in zip(q, q[1:], reports, reports[1:]))
    secants, mids = [], []
    for r, s in zip(reports, reports[1:]):
        dD = r.denominator.value - s.denominator.value
        if dD != 0:
            secants.append((r.numerator.value - s.numerator.value) / dD)
            mids.append(math.sqrt(r.eps * s.eps))
    limit, p = (secants[-1] if secants else q[-1]), None
    if len(secants) >= 3:
        fit = power_fit(mids[-3:], secants[-3:])
        if fit is not None:
            limit, p = fit
    return SweepResult(family, reports, float(limit), monotone, p, tuple(secants))
