"""Integral identities and inequalities checked on random test functions.

Test functions are u(x) = P(y) (1 - |y|^2)^6 with y = (x - x0)/s and P a
random quadratic, so value, gradient and Hessian are exact.  Integrals run
over the support ball with the deterministic Gauss product rule from
:mod:`hardylab.quadrature`; supports are kept at least one radius away from
every singular point, which keeps the singular weights analytic on the
support and the rule spectrally accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import constants
from .errors import DimensionTooSmall, PositivityViolation
from .geometry import PotentialSpec, check_dimension
from .quadrature import ball_rule

BUMP_POWER = 6
IDENTITY_TOL = 1e-6
MARGIN_TOL = 1e-6
ANNULUS = (0.3, 1.5)
CHUNK = 1 << 15


def default_rule(d):
    """(radial, angular) Gauss orders; about 1e-9 relative on the checks up to d = 5.

    The angular node count grows like n^(d-2), so higher dimensions trade
    accuracy for time.
    """
    if d <= 3:
        return (14, 14)
    return {4: (13, 12), 5: (12, 10)}.get(d, (12, 8))


@dataclass(frozen=True)
class TestFunction:
    """P(y) bump(|y|) with P(y) = c + b.y + y.M.y and y = (x - center)/scale."""

    __test__ = False  # not a pytest class

    center: np.ndarray
    scale: float
    c: float
    b: np.ndarray
    M: np.ndarray
    seed: int | None = None

    @property
    def d(self):
        return len(self.center)

    def scaled(self, lam):
        """lam * u."""
        return TestFunction(self.center, self.scale, lam * self.c, lam * self.b, lam * self.M,
                            self.seed)

    @classmethod
    def zero(cls, d, center=None, scale=1.0):
        center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
        return cls(center, scale, 0.0, np.zeros(d), np.zeros((d, d)))

    @classmethod
    def random(cls, d, rng, support="annulus", avoid=(), seed=None):
        """Draw a test function.

        ``support``: ``annulus`` (inside ANNULUS, away from the origin),
        ``upper_annulus`` (same, inside x_d > 0), or ``free`` (anywhere near
        the origin).  Points in ``avoid`` stay at least one support radius
        outside the support.
        """
        avoid = np.asarray(avoid, dtype=float).reshape(-1, d) if len(avoid) else np.zeros((0, d))
        lo, hi = ANNULUS
        for _ in range(1000):
            if support == "free":
                center = rng.uniform(-0.5, 0.5, d)
                scale = rng.uniform(0.5, 1.5)
            else:
                direction = rng.normal(size=d)
                direction /= np.linalg.norm(direction)
                if support == "upper_annulus":
                    direction[-1] = abs(direction[-1]) + 0.3
                    direction /= np.linalg.norm(direction)
                rho = rng.uniform(0.6, 1.2)
                center = rho * direction
                room = min(rho - lo, hi - rho, 0.5 * rho)
                if support == "upper_annulus":
                    room = min(room, 0.5 * center[-1])
                scale = rng.uniform(0.6, 1.0) * room
            if len(avoid):
                gap = np.min(np.linalg.norm(avoid - center, axis=1))
                if gap < 2.0 * scale:
                    continue
            break
        else:
            raise ValueError("could not place a support away from the singular points")
        A = rng.normal(size=(d, d))
        return cls(center, float(scale), float(rng.normal()), rng.normal(size=d),
                   0.5 * (A + A.T), seed)

    def _local(self, x):
        y = (x - self.center) / self.scale
        q = np.sum(y * y, axis=1)
        inside = q < 1.0
        one = np.where(inside, 1.0 - q, 0.0)
        return y, one

    def value(self, x):
        y, one = self._local(x)
        P = self.c + y @ self.b + np.einsum("ni,ij,nj->n", y, self.M, y)
        return P * one**BUMP_POWER

    def derivatives(self, x, hessian=True):
        """(u, grad u, Hessian u) in x-coordinates; Hessian is None if not requested."""
        k, s = BUMP_POWER, self.scale
        y, one = self._local(x)
        My = y @ self.M
        P = self.c + y @ self.b + np.sum(y * My, axis=1)
        gP = (self.b + 2.0 * My) / s
        B = one**k
        gB = (-2.0 * k * one ** (k - 1))[:, None] * y / s
        u = P * B
        grad = gP * B[:, None] + P[:, None] * gB
        if not hessian:
            return u, grad, None
        d = self.d
        HP = 2.0 * self.M / s**2
        HB = (4.0 * k * (k - 1) * one ** (k - 2))[:, None, None] * np.einsum("ni,nj->nij", y, y)
        HB -= (2.0 * k * one ** (k - 1))[:, None, None] * np.eye(d)[None]
        HB /= s**2
        H = HP[None] * B[:, None, None] + P[:, None, None] * HB
        H += np.einsum("ni,nj->nij", gP, gB) + np.einsum("ni,nj->nij", gB, gP)
        return u, grad, H

    def laplacian(self, x):
        return np.trace(self.derivatives(x)[2], axis1=1, axis2=2)


@dataclass(frozen=True)
class CheckResult:
    name: str
    lhs: float
    rhs: float
    value: float       # gap for identities, margin for inequalities
    tolerance: float
    passed: bool

    def row(self, seed_index):
        return [self.name, seed_index, self.lhs, self.rhs, self.value, self.tolerance,
                self.passed]


def _integrate(u, fields, rule=None, hessian=True):
    """Sum each field(x, u, grad, H) against the rule over u's support ball."""
    d = u.d
    if rule is None:
        nodes, weights = ball_rule(d, *default_rule(d), center=u.center, radius=u.scale)
    else:
        nodes, weights = rule
    totals = np.zeros(len(fields))
    for i in range(0, len(nodes), CHUNK):
        x, w = nodes[i:i + CHUNK], weights[i:i + CHUNK]
        val, grad, H = u.derivatives(x, hessian)
        for k, field_fn in enumerate(fields):
            totals[k] += w @ field_fn(x, val, grad, H)
    return totals


def _r2(x):
    return np.sum(x * x, axis=1)


def _identity(name, lhs, rhs, scale):
    gap = abs(lhs - rhs)
    tol = IDENTITY_TOL * scale
    return CheckResult(name, float(lhs), float(rhs), float(gap), float(tol), bool(gap <= tol))


def check_expansion_square(u, d=None, rule=None):
    """int |grad u|^2 - (d-2)^2/4 int u^2/|x|^2  vs  int |grad u + (d-2)/2 x/|x|^2 u|^2."""
    d = check_dimension(d or u.d, 3)
    k = (d - 2) / 2.0
    grad2, hardy, square = _integrate(u, [
        lambda x, v, g, H: np.sum(g * g, axis=1),
        lambda x, v, g, H: v * v / _r2(x),
        lambda x, v, g, H: np.sum((g + (k * v / _r2(x))[:, None] * x) ** 2, axis=1),
    ], rule, hessian=False)
    lhs = grad2 - k * k * hardy
    return _identity("expansion_square", lhs, square, grad2 + k * k * hardy)


def check_geni(u, phi, d=None, rule=None):
    """int (|grad u|^2 + (Lap phi/phi) u^2)  vs  int |grad u - (grad phi/phi) u|^2."""
    d = d or u.d

    def logs(x):
        val = phi.value(x)
        if np.any(~(val > 0)):
            raise PositivityViolation("phi is not strictly positive on the support of u")
        return phi.laplacian(x) / val, phi.gradient(x) / val[:, None]

    def mass(x, v, g, H):
        lap, _ = logs(x)
        return lap * v * v

    def square(x, v, g, H):
        _, lg = logs(x)
        return np.sum((g - lg * v[:, None]) ** 2, axis=1)

    grad2, m, sq = _integrate(u, [lambda x, v, g, H: np.sum(g * g, axis=1), mass, square],
                              rule, hessian=False)
    return _identity("geni", grad2 + m, sq, grad2 + abs(m))


def check_second_derivative_sum(u, d=None, rule=None):
    """sum_ij int |d_ij u|^2  vs  int |Lap u|^2."""
    hess2, lap2 = _integrate(u, [
        lambda x, v, g, H: np.sum(H * H, axis=(1, 2)),
        lambda x, v, g, H: np.trace(H, axis1=1, axis2=2) ** 2,
    ], rule)
    return _identity("second_derivative_sum", hess2, lap2, hess2)


def check_identIP2(u, d=None, rule=None):
    """(d-4) int |grad u|^2/|x|^2  vs  -4 int (x.grad u)^2/|x|^4 + 2 int (x.grad u) Lap u/|x|^2."""
    d = check_dimension(d or u.d, 3)
    weighted, radial, mixed = _integrate(u, [
        lambda x, v, g, H: np.sum(g * g, axis=1) / _r2(x),
        lambda x, v, g, H: np.sum(x * g, axis=1) ** 2 / _r2(x) ** 2,
        lambda x, v, g, H: np.sum(x * g, axis=1) * np.trace(H, axis1=1, axis2=2) / _r2(x),
    ], rule)
    lhs = (d - 4) * weighted
    rhs = -4.0 * radial + 2.0 * mixed
    return _identity("identIP2", lhs, rhs, abs(d - 4) * weighted + 4 * radial + 2 * abs(mixed))


INEQUALITIES = ("Hardy", "Rellich", "HardyRellich", "Weaker", "Pushu", "FirstHR")
_MIN_DIM = {"Hardy": 3, "Rellich": 5, "HardyRellich": 3, "Weaker": 4, "Pushu": 3, "FirstHR": 3}


def default_constant(which, d, n=None):
    if which == "Hardy":
        return constants.hardy_interior_constant(d).value
    if which == "Rellich":
        return constants.rellich_constant(d).value
    if which == "HardyRellich":
        return constants.hardy_rellich_constant(d).value
    if which == "Weaker":
        return d * d / 4.0
    if which == "FirstHR":
        return ((d - 2) / 2.0) ** 2
    return (d - 2) ** 2 / (4.0 * n * n)


def check_inequality(u, which, params=None, rule=None):
    """margin = lhs - rhs of the named inequality on u.

    ``params`` may set ``constant`` (overrides the sharp constant, for
    sharpness probes) and, for Pushu, ``poles``.
    """
    if which not in INEQUALITIES:
        raise ValueError(f"unknown inequality {which!r}")
    params = dict(params or {})
    d = u.d
    if d < _MIN_DIM[which]:
        raise DimensionTooSmall(f"{which} needs d >= {_MIN_DIM[which]}")
    poles = None
    if which == "Pushu":
        poles = np.asarray(params.get("poles", [np.eye(d)[0], -np.eye(d)[0]]), dtype=float)
    n = None if poles is None else len(poles)
    C = float(params.get("constant", default_constant(which, d, n)))

    lap2 = lambda x, v, g, H: np.trace(H, axis1=1, axis2=2) ** 2  # noqa: E731
    grad2 = lambda x, v, g, H: np.sum(g * g, axis=1)  # noqa: E731
    if which == "Hardy":
        lhs, w = _integrate(u, [grad2, lambda x, v, g, H: v * v / _r2(x)], rule, False)
        rhs = C * w
    elif which == "Rellich":
        lhs, w = _integrate(u, [lap2, lambda x, v, g, H: v * v / _r2(x) ** 2], rule)
        rhs = C * w
    elif which in ("HardyRellich", "FirstHR"):
        lhs, w = _integrate(u, [lap2, lambda x, v, g, H: np.sum(g * g, axis=1) / _r2(x)], rule)
        rhs = C * w
    elif which == "Weaker":
        lhs, w = _integrate(u, [lap2, lambda x, v, g, H: np.sum(x * g, axis=1) ** 2
                                / _r2(x) ** 2], rule)
        rhs = C * w
    else:
        V = PotentialSpec.multipolar(poles)
        single = PotentialSpec.multipolar_sum(poles)
        lhs, wv, ws = _integrate(u, [grad2,
                                     lambda x, v, g, H: V.evaluate(x, check=False) * v * v,
                                     lambda x, v, g, H: single.evaluate(x, check=False) * v * v],
                                 rule, False)
        rhs = C * wv + (d - 2) ** 2 / (4.0 * n) * ws
    margin = lhs - rhs
    tol = MARGIN_TOL * max(abs(lhs), abs(rhs))
    return CheckResult(which, float(lhs), float(rhs), float(margin), float(tol),
                       bool(margin >= -tol))


IDENTITIES = ("expansion_square", "geni", "second_derivative_sum", "identIP2")


def _support_for(which):
    return "free" if which == "second_derivative_sum" else "annulus"


def run_suite(which, d, count=50, seed=0, params=None):
    """Check one identity or inequality on ``count`` random test functions.

    Returns a list of (seed_index, CheckResult).  Test function i is drawn
    from its own child seed, so results do not depend on ``count``.
    """
    from .supersolution import SupersolutionAnsatz

    params = dict(params or {})
    children = np.random.SeedSequence(seed).spawn(count)
    out = []
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        if which in IDENTITIES:
            support = _support_for(which)
            if which == "geni" and params.get("ansatz") == "halfspace":
                support = "upper_annulus"
            u = TestFunction.random(d, rng, support, seed=i)
            if which == "expansion_square":
                res = check_expansion_square(u, d)
            elif which == "geni":
                if params.get("ansatz") == "halfspace":
                    phi = SupersolutionAnsatz.halfspace(-d / 2)
                else:
                    phi = SupersolutionAnsatz.power_only(-(d - 2) / 2)
                res = check_geni(u, phi, d)
            elif which == "second_derivative_sum":
                res = check_second_derivative_sum(u, d)
            else:
                res = check_identIP2(u, d)
        elif which in INEQUALITIES:
            avoid = []
            if which == "Pushu":
                poles = params.get("poles", [np.eye(d)[0], -np.eye(d)[0]])
                avoid = np.asarray(poles, dtype=float)
            u = TestFunction.random(d, rng, "annulus", avoid=avoid, seed=i)
            res = check_inequality(u, which, params)
        else:
            raise ValueError(f"unknown identity or inequality {which!r}")
        out.append((i, res))
    return out
