"""Singularity-aware integration helpers.

* ``integrate_1d`` wraps QUADPACK (``scipy.integrate.quad``) and adds the two
  substitutions the rest of the package relies on: ``r = a + t/(1-t)`` for
  half-infinite ranges and ``x = a + (b-a) s^(1/(g+1))`` for an algebraic
  endpoint singularity ``(x-a)^g``.
* ``radial_integral`` and ``angular_moment`` do radial reduction with exact
  angular factors.
* ``integrate_nd`` is randomised QMC (scrambled Sobol, one independent
  scramble per batch) over a box, with exclusion balls around singular points
  whose missing mass is restored by a local power law.
* ``ball_rule`` is a deterministic Gauss product rule on the unit ball, used
  where QMC is far too noisy (identity checks at 1e-6).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, special
from scipy.stats import qmc

from .errors import ExponentMissing, MaxSubdivisions, NonIntegrable
from .geometry import check_dimension

DEFAULT_TOL = 1e-9
#: Exclusion balls at or below this radius may omit their local exponent.
NEGLIGIBLE_RADIUS = 1e-9


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise ValueError("error_estimate must be >= 0")

    def __add__(self, other):
        return IntegralResult(self.value + other.value,
                              self.error_estimate + other.error_estimate,
                              self.evaluations + other.evaluations)

    def scaled(self, c):
        return IntegralResult(c * self.value, abs(c) * self.error_estimate, self.evaluations)

    def to_json(self):
        return {"value": self.value, "error_estimate": self.error_estimate,
                "evaluations": self.evaluations}


@dataclass(frozen=True)
class GridSpec:
    """Log (or linear) radial shells times low-discrepancy directions.

    ``points(d)`` is deterministic given ``seed``.  With ``upper_half`` the
    directions are reflected into x_d > 0.
    """

    lo: float = 0.1
    hi: float = 10.0
    shells: int = 64
    spacing: str = "log"
    directions: int = 128
    seed: int = 0
    upper_half: bool = False
    center: Optional[tuple] = None

    def __post_init__(self):
        if not self.lo > 0:
            raise ValueError("grid lo must be > 0")
        if not self.hi >= self.lo:
            raise ValueError("grid hi must be >= lo")
        if self.shells < 2:
            raise ValueError("grid needs at least 2 shells")
        if self.directions < 1:
            raise ValueError("grid needs at least one direction")
        if self.spacing not in ("log", "linear"):
            raise ValueError("spacing is 'log' or 'linear'")

    def radii(self):
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, self.shells)
        return np.linspace(self.lo, self.hi, self.shells)

    def unit_directions(self, d):
        dirs = sphere_directions(d, self.directions, self.seed)
        if self.upper_half:
            dirs[:, -1] = np.abs(dirs[:, -1])
        return dirs

    def points(self, d):
        r = self.radii()
        pts = (r[:, None, None] * self.unit_directions(d)[None, :, :]).reshape(-1, d)
        if self.center is not None:
            pts = pts + np.asarray(self.center, dtype=float)
        return pts

    def describe(self):
        return {"radial": {"lo": self.lo, "hi": self.hi, "shells": self.shells,
                           "spacing": self.spacing},
                "angular": {"directions": self.directions, "seed": self.seed},
                "upper_half": self.upper_half,
                "center": None if self.center is None else list(self.center)}

    @classmethod
    def from_json(cls, obj):
        radial, angular = obj.get("radial", {}), obj.get("angular", {})
        center = obj.get("center")
        return cls(lo=radial.get("lo", 0.1), hi=radial.get("hi", 10.0),
                   shells=radial.get("shells", 64), spacing=radial.get("spacing", "log"),
                   directions=angular.get("directions", 128), seed=angular.get("seed", 0),
                   upper_half=obj.get("upper_half", False),
                   center=None if center is None else tuple(center))


def sphere_directions(d, count, seed):
    """``count`` scrambled-Sobol points pushed to S^(d-1) through the normal map."""
    u = qmc.Sobol(d, scramble=True, seed=np.random.default_rng(seed)).random(count)
    g = special.ndtri(np.clip(u, 1e-15, 1 - 1e-15))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


# --------------------------------------------------------------------------
# 1-D
# --------------------------------------------------------------------------


def integrate_1d(f, a, b, tol=DEFAULT_TOL, *, endpoint_power=None, weight_power=None,
                 points=None, limit=200):
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[a, b]``.

    ``tol`` is used as both the absolute and relative target.  ``b`` may be
    ``inf``.  ``endpoint_power=g`` tells the routine that ``f`` behaves like
    ``(x-a)^g`` near ``a``; ``weight_power=g`` means the integrand is
    ``(x-a)^g * f(x)`` with the power applied analytically, so ``f`` only
    needs to be smooth.  Both require ``g > -1`` and a finite ``b``.
    """
    if not a < b:
        raise ValueError("integrate_1d needs a < b")
    counter = [0]

    def counted(g):
        def h(x):
            counter[0] += 1
            return g(x)
        return h

    if endpoint_power is not None or weight_power is not None:
        if not math.isfinite(b):
            raise ValueError("endpoint substitution needs a finite upper limit")
        gamma = endpoint_power if endpoint_power is not None else weight_power
        if not gamma > -1:
            raise NonIntegrable(f"endpoint power {gamma} is not integrable")
        p = 1.0 / (gamma + 1.0)
        L = b - a
        if weight_power is not None:
            c = L ** (gamma + 1.0) / (gamma + 1.0)
            inner = counted(lambda s: f(a + L * s**p))
        else:
            c = 1.0
            inner = counted(lambda s: f(a + L * s**p) * L * p * s ** (p - 1.0))
        pts = None if points is None else [((x - a) / L) ** (gamma + 1.0) for x in points]
        val, err = _quad(inner, 0.0, 1.0, tol / max(abs(c), 1e-300), limit, pts)
        return IntegralResult(c * val, abs(c) * err, counter[0])

    if math.isinf(b):
        def mapped(t):
            if t >= 1.0:
                return 0.0
            s = 1.0 - t
            return f(a + t / s) / (s * s)
        pts = None if points is None else [(x - a) / (1.0 + x - a) for x in points]
        val, err = _quad(counted(mapped), 0.0, 1.0, tol, limit, pts)
        return IntegralResult(val, err, counter[0])

    val, err = _quad(counted(f), a, b, tol, limit, points)
    return IntegralResult(val, err, counter[0])


def _quad(f, a, b, tol, limit, points):
    if points is not None:
        points = [p for p in points if a < p < b] or None
    val, err, info, *rest = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=limit,
                                           points=points, full_output=1)
    ier = rest[0] if rest and isinstance(rest[0], str) else None
    if "last" in info and info["last"] >= limit and err > max(tol, tol * abs(val)):
        raise MaxSubdivisions(f"quadrature hit {limit} subintervals with error {err:.3g}"
                              + (f" ({ier})" if ier else ""))
    return float(val), float(err)


# --------------------------------------------------------------------------
# Radial reduction
# --------------------------------------------------------------------------


def sphere_area(d):
    """|S^(d-1)| = 2 pi^(d/2) / Gamma(d/2)."""
    d = check_dimension(d, 2)
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


ANGULAR_KINDS = ("One", "LastCoordSquared", "HalfSphereOne", "HalfSphereLastCoordSquared")


def angular_moment(d, kind):
    """Integral over S^(d-1), or its upper half, of 1 or (x_d/|x|)^2."""
    if kind not in ANGULAR_KINDS:
        raise ValueError(f"unknown angular moment {kind!r}")
    area = sphere_area(d)
    value = area / d if kind.endswith("LastCoordSquared") else area
    return value / 2 if kind.startswith("HalfSphere") else value


def radial_integral(g, d, lo, hi, tol=DEFAULT_TOL, **kwargs):
    """Integral over the shell lo < |x| < hi of the radial function G(|x|) = g(r)."""
    if lo < 0:
        raise ValueError("radial_integral needs lo >= 0")
    res = integrate_1d(lambda r: g(r) * r ** (d - 1), lo, hi, tol, **kwargs)
    return res.scaled(sphere_area(d))


# --------------------------------------------------------------------------
# n-D: randomised QMC with exclusions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Exclusion:
    """Ball removed from QMC sampling; ``exponent`` is the local power of the integrand."""

    center: tuple
    radius: float
    exponent: Optional[float] = None

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("exclusion radius must be > 0")


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    @property
    def d(self):
        return len(self.lo)

    @property
    def volume(self):
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    @classmethod
    def cube(cls, d, half_width=1.0, center=None):
        c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
        return cls(tuple(c - half_width), tuple(c + half_width))


def _pow2(n):
    return 1 << max(0, int(math.ceil(math.log2(max(n, 1)))))


def _eval_chunked(f, pts, chunk=1 << 16):
    out = np.empty(len(pts))
    for i in range(0, len(pts), chunk):
        out[i:i + chunk] = f(pts[i:i + chunk])
    return out


def integrate_nd(f, box, exclusions=(), n_samples=1 << 17, seed=0, *, batches=8,
                 shell_samples=1 << 14):
    """RQMC estimate of the integral of a vectorised ``f`` over ``box``.

    Points inside an exclusion ball are dropped.  For an exclusion with local
    exponent ``b`` (``f ~ |x-c|^b`` times an angular factor) the mass of the
    ball is recovered from the shell ``[r, 2r]`` as ``shell / (2^(b+d) - 1)``.
    The value is the mean over independently scrambled batches; the error
    estimate is the pooled within-batch standard error.
    """
    d = box.d
    lo, hi = np.asarray(box.lo, dtype=float), np.asarray(box.hi, dtype=float)
    exclusions = [e if isinstance(e, Exclusion) else Exclusion(*e) for e in exclusions]
    for e in exclusions:
        if e.exponent is None and e.radius > NEGLIGIBLE_RADIUS:
            raise ExponentMissing(f"exclusion at {tuple(e.center)} of radius {e.radius} "
                                  "has no declared local exponent")
        if e.exponent is not None and e.exponent + d <= 0:
            raise NonIntegrable(f"local exponent {e.exponent} is not integrable in d={d}")

    per_batch = _pow2(int(math.ceil(n_samples / batches)))
    seeds = np.random.SeedSequence(seed).spawn(batches + len(exclusions))
    vol = box.volume
    means, variances = [], []
    for b in range(batches):
        u = qmc.Sobol(d, scramble=True, seed=np.random.default_rng(seeds[b])).random(per_batch)
        pts = lo + u * (hi - lo)
        keep = np.ones(per_batch, dtype=bool)
        for e in exclusions:
            keep &= np.sum((pts - np.asarray(e.center)) ** 2, axis=1) >= e.radius**2
        vals = np.zeros(per_batch)
        if keep.any():
            vals[keep] = _eval_chunked(f, pts[keep])
        vals *= vol
        means.append(vals.mean())
        variances.append(vals.var(ddof=1))
    value = float(np.mean(means))
    err2 = float(np.mean(variances)) / (per_batch * batches)
    evaluations = per_batch * batches

    for k, e in enumerate(exclusions):
        if e.exponent is None:
            continue
        shell = _shell_integral(f, e, d, shell_samples, seeds[batches + k])
        factor = 1.0 / (2.0 ** (e.exponent + d) - 1.0)
        value += factor * shell.value
        err2 += (factor * shell.error_estimate) ** 2
        evaluations += shell.evaluations
    return IntegralResult(value, math.sqrt(err2), evaluations)


def _shell_integral(f, excl, d, n, seed):
    """Integral of f over r < |x-c| < 2r by QMC in pole-centred spherical coordinates."""
    n = _pow2(n)
    u = qmc.Sobol(d + 1, scramble=True, seed=np.random.default_rng(seed)).random(n)
    r0 = excl.radius
    # radius with density proportional to r^(d-1) on [r0, 2 r0]
    r = (r0**d + u[:, 0] * ((2 * r0) ** d - r0**d)) ** (1.0 / d)
    g = special.ndtri(np.clip(u[:, 1:], 1e-15, 1 - 1e-15))
    omega = g / np.linalg.norm(g, axis=1, keepdims=True)
    pts = np.asarray(excl.center, dtype=float) + r[:, None] * omega
    shell_vol = sphere_area(d) / d * ((2 * r0) ** d - r0**d)
    vals = _eval_chunked(f, pts) * shell_vol
    return IntegralResult(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)), n)


# --------------------------------------------------------------------------
# Deterministic product rule on the unit ball
# --------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _ball_rule_cached(d, n_radial, n_angular):
    xr, wr = special.roots_jacobi(n_radial, 0.0, d - 1.0)
    radii = (1.0 + xr) / 2.0
    wr = wr / 2.0**d
    # hyperspherical angles: cos(theta_k) has weight (1-t^2)^((m-1)/2), m = d-1-k
    angle_nodes = []
    for m in range(d - 2, 0, -1):
        t, w = special.roots_gegenbauer(n_angular, m / 2.0)
        angle_nodes.append((t, w))
    n_phi = 2 * n_angular
    phi = 2 * math.pi * np.arange(n_phi) / n_phi
    w_phi = np.full(n_phi, 2 * math.pi / n_phi)

    # unit directions built one coordinate at a time
    dirs = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    wdir = w_phi
    for t, w in reversed(angle_nodes):
        s = np.sqrt(1.0 - t**2)
        new = np.concatenate([t[:, None, None] * np.ones((1, len(dirs), 1)),
                              s[:, None, None] * dirs[None, :, :]], axis=2)
        dirs = new.reshape(-1, new.shape[-1])
        wdir = (w[:, None] * wdir[None, :]).ravel()
    nodes = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)
    weights = (wr[:, None] * wdir[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def ball_rule(d, n_radial=12, n_angular=12, center=None, radius=1.0):
    """Nodes and weights integrating over B_radius(center).

    Exact for polynomials of degree < 2 n_radial - 1 radially and
    < 2 n_angular in each angle.
    """
    d = check_dimension(d, 2)
    nodes, weights = _ball_rule_cached(d, n_radial, n_angular)
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    return c + radius * nodes, weights * radius**d
