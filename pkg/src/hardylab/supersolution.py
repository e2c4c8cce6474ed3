"""Super-solution certificates.

A candidate phi is a product of prefactors times |x|^alpha, optionally times
(log 1/|x|)^(1/2) and exp(c rho(x)).  ``ansatz_eval`` returns phi, its
Laplacian or its bilaplacian; closed forms are used whenever every factor has
one (product rule over the factors) and central differences with one
Richardson step otherwise.

Certificates report residuals normalised pointwise by the sizes of the two
competing terms, ``(L phi - W phi) / (|L phi| + |W phi|)``, which keeps the sign
while making a single tolerance meaningful across many decades of |x|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import PoleHit, PositivityViolation, UnsupportedDomain, UnsupportedOrder
from .geometry import (
    EXCLUSION_RADIUS,
    DomainSpec,
    PoleSet,
    PotentialSpec,
    as_points,
    check_dimension,
    distance_to_boundary,
)
from .quadrature import GridSpec

EPS = np.finfo(float).eps
CLOSED_FORM_TOL = 1e-8
FD_TOL_FACTOR = 100.0
#: Above this normalised FD tolerance a verdict is not worth reporting.
MAX_FD_TOL = 1e-3


# --------------------------------------------------------------------------
# Closed-form radial rules
# --------------------------------------------------------------------------


def laplacian_power(d, alpha, r):
    """Laplacian of |x|^alpha at |x| = r."""
    return alpha * (alpha + d - 2) * np.asarray(r, dtype=float) ** (alpha - 2)


def bilaplacian_power(d, alpha, r):
    """Bilaplacian of |x|^alpha at |x| = r."""
    coeff = alpha * (alpha - 2) * (d - 2 + alpha) * (d - 4 + alpha)
    return coeff * np.asarray(r, dtype=float) ** (alpha - 4)


def laplacian_halfspace_ansatz(d, alpha, x):
    """Laplacian of x_d |x|^alpha."""
    pts, single = as_points(x, d)
    r = np.linalg.norm(pts, axis=1)
    out = alpha * (alpha + d) * pts[:, -1] * r ** (alpha - 2)
    return float(out[0]) if single else out


# --------------------------------------------------------------------------
# Ansatz
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Prefactor:
    """One multiplicative factor of phi.

    kinds: ``One``; ``LastCoord`` (x_d); ``BallWeight`` (radius^2 - |x-center|^2);
    ``PoleProduct`` (prod |x-a_i|^exponent_i); ``FallLocal`` (rho(x), the
    distance to the boundary of ``domain``).
    """

    kind: str
    center: Optional[tuple] = None
    radius: Optional[float] = None
    poles: Optional[PoleSet] = None
    exponents: Optional[tuple] = None
    domain: Optional[DomainSpec] = None

    KINDS = ("One", "LastCoord", "BallWeight", "PoleProduct", "FallLocal")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown prefactor kind {self.kind!r}")
        if self.kind == "BallWeight":
            if self.center is None or self.radius is None or not self.radius > 0:
                raise ValueError("BallWeight needs a center and a radius > 0")
            object.__setattr__(self, "center", tuple(map(float, self.center)))
            object.__setattr__(self, "radius", float(self.radius))
        if self.kind == "PoleProduct":
            poles = self.poles if isinstance(self.poles, PoleSet) else PoleSet(self.poles)
            exps = np.broadcast_to(np.asarray(self.exponents, dtype=float), (poles.n,))
            if not np.all(np.isfinite(exps)):
                raise ValueError("PoleProduct exponents must be finite")
            object.__setattr__(self, "poles", poles)
            object.__setattr__(self, "exponents", tuple(map(float, exps)))
        if self.kind == "FallLocal":
            if not isinstance(self.domain, DomainSpec):
                raise ValueError("FallLocal needs a domain")
            if self.domain.kind == "WholeSpace":
                raise UnsupportedDomain("FallLocal needs a domain with a boundary")

    @property
    def closed_form(self):
        return self.kind != "FallLocal"

    def singular_points(self):
        return self.poles.poles if self.kind == "PoleProduct" else np.zeros((0, 0))

    def value(self, pts):
        if self.kind == "One":
            return np.ones(len(pts))
        if self.kind == "LastCoord":
            return pts[:, -1].copy()
        if self.kind == "BallWeight":
            return self.radius**2 - np.sum((pts - np.asarray(self.center)) ** 2, axis=1)
        if self.kind == "FallLocal":
            return np.asarray(distance_to_boundary(self.domain, pts), dtype=float)
        return self._pole_terms(pts)[0]

    def _pole_terms(self, pts):
        diff = pts[:, None, :] - self.poles.poles[None, :, :]
        r2 = np.sum(diff**2, axis=-1)
        beta = np.asarray(self.exponents)
        f = np.exp(0.5 * np.sum(beta * np.log(r2), axis=1))
        g = np.sum(beta[None, :, None] * diff / r2[:, :, None], axis=1)
        return f, g, np.sum(beta / r2, axis=1)

    def derivatives(self, pts):
        """(f, grad f, Laplacian f) in closed form."""
        n, d = pts.shape
        if self.kind == "One":
            return np.ones(n), np.zeros((n, d)), np.zeros(n)
        if self.kind == "LastCoord":
            g = np.zeros((n, d))
            g[:, -1] = 1.0
            return pts[:, -1].copy(), g, np.zeros(n)
        if self.kind == "BallWeight":
            y = pts - np.asarray(self.center)
            return self.radius**2 - np.sum(y**2, axis=1), -2.0 * y, np.full(n, -2.0 * d)
        if self.kind == "PoleProduct":
            f, g, s = self._pole_terms(pts)
            lap = f * (np.sum(g**2, axis=1) + (d - 2) * s)
            return f, f[:, None] * g, lap
        raise UnsupportedOrder("FallLocal has no closed-form derivatives")

    def to_json(self):
        out = {"kind": self.kind}
        if self.kind == "BallWeight":
            out.update(center=list(self.center), radius=self.radius)
        elif self.kind == "PoleProduct":
            out.update(poles=self.poles.to_json(), exponents=list(self.exponents))
        elif self.kind == "FallLocal":
            out["domain"] = self.domain.to_json()
        return out

    @classmethod
    def from_json(cls, obj):
        kind = obj["kind"]
        if kind == "BallWeight":
            return cls(kind, center=obj["center"], radius=obj["radius"])
        if kind == "PoleProduct":
            return cls(kind, poles=PoleSet(obj["poles"]), exponents=obj["exponents"])
        if kind == "FallLocal":
            return cls(kind, domain=DomainSpec.from_json(obj["domain"]))
        return cls(kind)


@dataclass(frozen=True)
class SupersolutionAnsatz:
    """phi(x) = prod(prefactors) |x|^power [(log 1/|x|)^(1/2)] [exp(c rho(x))]."""

    prefactors: tuple = (Prefactor("One"),)
    power: float = 0.0
    log_half_power: bool = False
    exp_rho_coeff: Optional[float] = None

    def __post_init__(self):
        pre = self.prefactors
        if isinstance(pre, Prefactor):
            pre = (pre,)
        object.__setattr__(self, "prefactors", tuple(pre))
        object.__setattr__(self, "power", float(self.power))
        if self.exp_rho_coeff is not None and self._fall_domain() is None:
            raise ValueError("exp_rho_coeff needs a FallLocal prefactor to define rho")

    # convenient constructors --------------------------------------------
    @classmethod
    def power_only(cls, alpha):
        return cls(power=alpha)

    @classmethod
    def halfspace(cls, alpha):
        return cls(Prefactor("LastCoord"), power=alpha)

    @classmethod
    def pole_product(cls, poles, exponent):
        poles = PoleSet(poles)
        return cls(Prefactor("PoleProduct", poles=poles, exponents=(exponent,) * poles.n))

    @classmethod
    def ball_minimizer(cls, center, radius, poles, exponent):
        poles = PoleSet(poles)
        return cls((Prefactor("BallWeight", center=center, radius=radius),
                    Prefactor("PoleProduct", poles=poles, exponents=(exponent,) * poles.n)))

    @classmethod
    def fall_local(cls, d, domain=None):
        if domain is None:
            e = np.zeros(d)
            e[-1] = -1.0
            domain = DomainSpec.exterior_ball(e, 1.0)
        return cls(Prefactor("FallLocal", domain=domain), power=-d / 2,
                   log_half_power=True, exp_rho_coeff=1.0 - d)

    # structure ------------------------------------------------------------
    def _fall_domain(self):
        for p in self.prefactors:
            if p.kind == "FallLocal":
                return p.domain
        return None

    @property
    def closed_form(self):
        return self.exp_rho_coeff is None and all(p.closed_form for p in self.prefactors)

    @property
    def origin_singular(self):
        return self.power != 0.0 or self.log_half_power

    def singular_points(self, d):
        pts = [p.singular_points() for p in self.prefactors if p.kind == "PoleProduct"]
        if self.origin_singular:
            pts.append(np.zeros((1, d)))
        return np.concatenate(pts) if pts else np.zeros((0, d))

    def length_scale(self, pts):
        """Distance to the nearest singular point (capped at 1); sets FD steps."""
        sing = self.singular_points(pts.shape[1])
        scale = np.ones(len(pts))
        if len(sing):
            dist = np.sqrt(np.sum((pts[:, None, :] - sing[None, :, :]) ** 2, axis=-1))
            scale = np.minimum(scale, dist.min(axis=1))
        return scale

    def check_points(self, pts, radius=EXCLUSION_RADIUS):
        sing = self.singular_points(pts.shape[1])
        if len(sing):
            dist2 = np.sum((pts[:, None, :] - sing[None, :, :]) ** 2, axis=-1)
            if np.any(dist2 < radius**2):
                raise PoleHit("ansatz evaluated within the exclusion radius of a singular point")

    # evaluation -------------------------------------------------------------
    def value(self, pts):
        out = np.ones(len(pts))
        for p in self.prefactors:
            out = out * p.value(pts)
        r = np.linalg.norm(pts, axis=1)
        if self.power != 0.0:
            out = out * r**self.power
        if self.log_half_power:
            with np.errstate(invalid="ignore"):
                out = out * np.sqrt(np.log(1.0 / r))
        if self.exp_rho_coeff is not None:
            rho = np.asarray(distance_to_boundary(self._fall_domain(), pts), dtype=float)
            out = out * np.exp(self.exp_rho_coeff * rho)
        return out

    def _factor_derivatives(self, pts):
        n, d = pts.shape
        factors = [p.derivatives(pts) for p in self.prefactors]
        r2 = np.sum(pts**2, axis=1)
        r = np.sqrt(r2)
        a = self.power
        if a != 0.0:
            f = r**a
            factors.append((f, (a * f / r2)[:, None] * pts, a * (a + d - 2) * f / r2))
        if self.log_half_power:
            L = np.log(1.0 / r)
            h = np.sqrt(L)
            grad = (-0.5 / (h * r2))[:, None] * pts
            lap = h * ((2 - d) / (2 * L) - 1 / (4 * L * L)) / r2
            factors.append((h, grad, lap))
        return factors

    def gradient(self, pts):
        """Closed-form gradient by the product rule."""
        if not self.closed_form:
            raise UnsupportedOrder("this ansatz has no closed-form gradient")
        factors = self._factor_derivatives(pts)
        vals = np.array([f for f, _, _ in factors])
        total = np.zeros_like(pts)
        for i, (_, g, _) in enumerate(factors):
            total += g * np.prod(np.delete(vals, i, axis=0), axis=0)[:, None]
        return total

    def laplacian(self, pts):
        """Closed-form Laplacian by the product rule over all factors."""
        if not self.closed_form:
            raise UnsupportedOrder("this ansatz has no closed-form Laplacian")
        factors = self._factor_derivatives(pts)
        vals = np.array([f for f, _, _ in factors])
        total = np.zeros(len(pts))
        k = len(factors)
        for i in range(k):
            others = np.prod(np.delete(vals, i, axis=0), axis=0)
            total += factors[i][2] * others
            for j in range(i + 1, k):
                rest = np.prod(np.delete(vals, [i, j], axis=0), axis=0)
                total += 2.0 * np.sum(factors[i][1] * factors[j][1], axis=1) * rest
        return total

    def bilaplacian(self, pts):
        if not (self.closed_form and self.is_pure_power):
            raise UnsupportedOrder("fourth-order evaluation is only available for |x|^alpha")
        d = pts.shape[1]
        return bilaplacian_power(d, self.power, np.linalg.norm(pts, axis=1))

    @property
    def is_pure_power(self):
        return all(p.kind == "One" for p in self.prefactors) and not self.log_half_power \
            and self.exp_rho_coeff is None

    def to_json(self):
        return {"prefactor": [p.to_json() for p in self.prefactors], "power": self.power,
                "log_half_power": self.log_half_power, "exp_rho_coeff": self.exp_rho_coeff}

    @classmethod
    def from_json(cls, obj):
        pre = obj.get("prefactor", [{"kind": "One"}])
        if isinstance(pre, dict):
            pre = [pre]
        return cls(tuple(Prefactor.from_json(p) for p in pre), obj.get("power", 0.0),
                   obj.get("log_half_power", False), obj.get("exp_rho_coeff"))


# --------------------------------------------------------------------------
# Finite differences
# --------------------------------------------------------------------------


def _richardson(values, order=2):
    """Eliminate h^order, h^(order+2), ... from estimates at h, h/2, h/4, ..."""
    while len(values) > 1:
        k = 2.0**order
        values = [(k * values[i + 1] - values[i]) / (k - 1.0) for i in range(len(values) - 1)]
        order += 2
    return values[0]


def _lap_stencil(f, pts, h):
    d = pts.shape[1]
    centre = f(pts)
    acc = np.zeros(len(pts))
    for i in range(d):
        step = np.zeros((len(pts), d))
        step[:, i] = h
        acc += f(pts + step) - 2.0 * centre + f(pts - step)
    return acc / h**2


def _fd(stencil, pts, scale, h_factor, levels):
    h = h_factor * np.broadcast_to(np.asarray(scale, dtype=float), (len(pts),))
    raw = [stencil(h / 2**k) for k in range(levels + 1)]
    value = _richardson(raw)
    previous = _richardson(raw[1:]) if levels > 1 else raw[-1]
    return value, np.abs(value - previous)


def fd_laplacian(f, pts, scale=1.0, h_factor=EPS ** (1 / 6), levels=1):
    """Central-difference Laplacian with Richardson extrapolation; returns (value, error).

    The error estimate is the change from the next-less-extrapolated value.
    """
    pts = np.asarray(pts, dtype=float)
    return _fd(lambda h: _lap_stencil(f, pts, h), pts, scale, h_factor, levels)


def fd_bilaplacian(f, pts, scale=1.0, h_factor=0.05, levels=2):
    """Nested difference Laplacians with Richardson extrapolation; returns (value, error).

    Fourth differences lose about eps/h^4 to roundoff, so the step is kept
    large and the truncation error removed by two extrapolation levels.
    """
    pts = np.asarray(pts, dtype=float)

    def stencil(h):
        return _lap_stencil(lambda y: _lap_stencil(f, y, h), pts, h)

    return _fd(stencil, pts, scale, h_factor, levels)


def ansatz_eval(phi, x, derivative_order=0, *, with_error=False, method="auto"):
    """phi(x), Laplacian phi(x) or bilaplacian phi(x).

    ``method`` is ``auto`` (closed form when available), ``closed`` or ``fd``.
    With ``with_error`` a pair (value, error estimate) is returned; closed
    forms report a zero error.
    """
    pts, single = as_points(x)
    phi.check_points(pts)
    if derivative_order not in (0, 2, 4):
        raise UnsupportedOrder(f"derivative order {derivative_order} is not 0, 2 or 4")
    if derivative_order == 4 and not phi.is_pure_power:
        raise UnsupportedOrder("fourth-order evaluation is only available for |x|^alpha")
    use_fd = method == "fd" or (method == "auto" and not phi.closed_form)
    if method == "closed" and not phi.closed_form:
        raise UnsupportedOrder("no closed form for this ansatz")
    err = np.zeros(len(pts))
    if derivative_order == 0:
        val = phi.value(pts)
    elif use_fd:
        fd = fd_laplacian if derivative_order == 2 else fd_bilaplacian
        val, err = fd(phi.value, pts, phi.length_scale(pts))
    elif derivative_order == 2:
        val = phi.laplacian(pts)
    else:
        val = phi.bilaplacian(pts)
    if single:
        val, err = float(val[0]), float(err[0])
    return (val, err) if with_error else val


# --------------------------------------------------------------------------
# Certificates
# --------------------------------------------------------------------------


class Verdict(str, Enum):
    CERTIFIED = "CertifiedNonnegative"
    VIOLATED = "Violated"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Certificate:
    """Sampled evidence for a nonnegative residual.  Not a proof."""

    min_residual: float
    max_residual: float
    samples_checked: int
    grid_descriptor: dict
    verdict: Verdict
    tolerance: float
    method: str
    conditions: dict = field(default_factory=dict)

    def to_json(self):
        return {"min_residual": self.min_residual, "max_residual": self.max_residual,
                "samples_checked": self.samples_checked, "grid": self.grid_descriptor,
                "verdict": self.verdict.value, "tolerance": self.tolerance,
                "method": self.method, "conditions": self.conditions,
                "evidence": "sampled"}


def _normalised(a, b):
    """(a - b) / (|a| + |b|) with 0/0 = 0."""
    den = np.abs(a) + np.abs(b)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, (a - b) / np.where(den > 0, den, 1.0), 0.0)
    return out


def default_grid(domain, d):
    """Log shells x directions suited to the domain (64 x 128)."""
    if domain is not None and domain.kind == "Ball":
        R = domain.radius
        return GridSpec(lo=1e-3 * R, hi=(1 - 1e-3) * R, center=tuple(domain.center))
    if domain is not None and domain.kind == "HalfSpace":
        return GridSpec(upper_half=True)
    return GridSpec()


def _grid_points(grid, d, domain, phi, W):
    pts = grid.points(d)
    if domain is not None:
        pts = pts[domain.contains(pts)]
    # drop samples sitting on a singular point rather than failing the run
    sing = [phi.singular_points(d)]
    if W is not None:
        sing.append(W.singular_points())
    sing = np.concatenate([s for s in sing if len(s)]) if any(len(s) for s in sing) else None
    if sing is not None and len(pts):
        dist2 = np.sum((pts[:, None, :] - sing[None, :, :]) ** 2, axis=-1)
        pts = pts[dist2.min(axis=1) >= EXCLUSION_RADIUS**2]
    return pts


def _verdict(min_res, tol, n):
    if n == 0 or not math.isfinite(min_res) or tol > MAX_FD_TOL:
        return Verdict.INCONCLUSIVE
    return Verdict.VIOLATED if min_res < -tol else Verdict.CERTIFIED


def _require_positive(phi_vals):
    if not np.all(np.isfinite(phi_vals)) or np.any(phi_vals <= 0):
        bad = int(np.sum(~(phi_vals > 0)))
        raise PositivityViolation(f"phi is not strictly positive at {bad} sample(s)")


def certify_hardy(W, phi, domain=None, grid=None):
    """Check (-Laplacian - W) phi >= 0 on the grid samples inside ``domain``."""
    d = W.d
    grid = grid or default_grid(domain, d)
    pts = _grid_points(grid, d, domain, phi, W)
    if len(pts) == 0:
        return Certificate(math.nan, math.nan, 0, grid.describe(), Verdict.INCONCLUSIVE,
                           math.nan, "none")
    vals = phi.value(pts)
    _require_positive(vals)
    lap, err = ansatz_eval(phi, pts, 2, with_error=True)
    wphi = W.evaluate(pts) * vals
    res = _normalised(-lap, wphi)
    scale = np.abs(lap) + np.abs(wphi)
    if phi.closed_form:
        tol, method = CLOSED_FORM_TOL, "closed-form"
    else:
        rel = np.where(scale > 0, err / np.where(scale > 0, scale, 1.0), 0.0)
        tol, method = max(FD_TOL_FACTOR * float(rel.max()), 1e-12), "finite-difference"
    lo, hi = float(res.min()), float(res.max())
    return Certificate(lo, hi, len(pts), grid.describe(), _verdict(lo, tol, len(pts)),
                       tol, method)


def certify_rellich(W, phi, grid=None):
    """Check (bilaplacian - W) phi >= 0, -Laplacian phi >= 0 and phi > 0."""
    d = check_dimension(W.d, 5)
    grid = grid or GridSpec()
    pts = _grid_points(grid, d, None, phi, W)
    if len(pts) == 0:
        return Certificate(math.nan, math.nan, 0, grid.describe(), Verdict.INCONCLUSIVE,
                           math.nan, "none")
    vals = phi.value(pts)
    _require_positive(vals)
    bil = ansatz_eval(phi, pts, 4)
    lap = ansatz_eval(phi, pts, 2)
    fourth = _normalised(bil, W.evaluate(pts) * vals)
    second = _normalised(-lap, np.zeros_like(lap))
    tol = CLOSED_FORM_TOL
    conditions = {}
    for name, res in (("fourth_order", fourth), ("minus_laplacian", second)):
        conditions[name] = {"min_residual": float(res.min()), "max_residual": float(res.max()),
                            "verdict": _verdict(float(res.min()), tol, len(pts)).value}
    conditions["positivity"] = {"min_value": float(vals.min()),
                                "verdict": Verdict.CERTIFIED.value}
    lo = min(float(fourth.min()), float(second.min()))
    hi = max(float(fourth.max()), float(second.max()))
    return Certificate(lo, hi, len(pts), grid.describe(), _verdict(lo, tol, len(pts)),
                       tol, "closed-form", conditions)


def fall_local_grid(r, d):
    return GridSpec(lo=1e-3 * r, hi=(1 - 1e-9) * r)


def certify_fall_local(d, r=0.05, grid=None):
    """Check the simplified local super-solution near a boundary point.

    The domain is the exterior of B_1(-e_d), intersected with B_r(0); the
    weight is d^2/(4|x|^2) and derivatives are taken by finite differences.
    """
    d = check_dimension(d, 2)
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    phi = SupersolutionAnsatz.fall_local(d)
    outer = phi._fall_domain()
    domain = DomainSpec.intersect_ball(outer, r)
    W = PotentialSpec.inverse_square(d, d * d / 4.0)
    grid = grid or fall_local_grid(r, d)
    return certify_hardy(W, phi, domain, grid)
