"""Domains, singular potentials and the small geometric helpers around them.

Points are plain float arrays.  Functions that accept a single point also
accept a stack of points of shape ``(n, d)``; a trailing dimension that does
not match the object's ambient dimension raises ``ValueError``.

Every descriptor round-trips through a JSON object with a ``"kind"``
discriminator (see ``schemas/domain.schema.json`` and
``schemas/potential.schema.json``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import (
    DegeneratePoles,
    DimensionTooSmall,
    PoleHit,
    TooFewPoles,
    UnsupportedDomain,
)

#: Points closer than this to a pole are rejected by :func:`potential_eval`.
EXCLUSION_RADIUS = 1e-9


def check_dimension(d, minimum=2):
    """Return ``d`` as an int, raising ``DimensionTooSmall`` below ``minimum``."""
    if int(d) != d:
        raise ValueError(f"dimension must be an integer, got {d!r}")
    d = int(d)
    if d < minimum:
        raise DimensionTooSmall(f"d={d} but this setting needs d >= {minimum}")
    return d


def as_points(x, d=None):
    """View ``x`` as an ``(n, d)`` float array; also report whether it was 1-D."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2:
        raise ValueError(f"points must be 1-D or 2-D, got shape {np.shape(x)}")
    if d is not None and arr.shape[1] != d:
        raise ValueError(f"point dimension {arr.shape[1]} does not match ambient d={d}")
    return arr, single


def _unstack(values, single):
    return float(values[0]) if single else values


def _vector(v, name):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a non-empty vector")
    return arr


def unit_vector(d, axis=-1):
    e = np.zeros(d)
    e[axis] = 1.0
    return e


@dataclass(frozen=True)
class PoleSet:
    """Distinct singular points a_1..a_n, stored as an ``(n, d)`` array."""

    poles: np.ndarray

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.poles, dtype=float))
        if p.ndim != 2 or p.shape[0] < 1:
            raise ValueError("a PoleSet needs at least one pole")
        p.setflags(write=False)
        object.__setattr__(self, "poles", p)
        if p.shape[0] >= 2 and _min_pairwise(p) <= 0.0:
            raise DegeneratePoles("two poles coincide")

    @property
    def n(self):
        return self.poles.shape[0]

    @property
    def d(self):
        return self.poles.shape[1]

    def permuted(self, order):
        return PoleSet(self.poles[list(order)])

    def to_json(self):
        return [list(map(float, a)) for a in self.poles]


def _min_pairwise(p):
    diff = p[:, None, :] - p[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=-1))
    iu = np.triu_indices(p.shape[0], k=1)
    return float(dist[iu].min())


def pole_separation(poles):
    """Half the minimum pairwise distance between poles."""
    if not isinstance(poles, PoleSet):
        poles = PoleSet(poles)
    if poles.n < 2:
        raise DegeneratePoles("pole separation needs at least two poles")
    return 0.5 * _min_pairwise(poles.poles)


# --------------------------------------------------------------------------
# Domains
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DomainSpec:
    """One of the analytic domains the library knows about.

    ``kind`` is ``WholeSpace``, ``HalfSpace`` (x_d > 0), ``Ball``,
    ``ExteriorBall`` or ``BallIntersection``.  The last one models
    ``inner ∩ B_radius(0)`` and keeps the wrapped domain in ``inner``.
    """

    kind: str
    center: Optional[np.ndarray] = None
    radius: Optional[float] = None
    inner: Optional["DomainSpec"] = None

    KINDS = ("WholeSpace", "HalfSpace", "Ball", "ExteriorBall", "BallIntersection")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind in ("Ball", "ExteriorBall", "BallIntersection"):
            if self.radius is None or not self.radius > 0:
                raise ValueError(f"{self.kind} needs a radius > 0")
            object.__setattr__(self, "radius", float(self.radius))
        if self.kind in ("Ball", "ExteriorBall"):
            c = _vector(self.center, "center")
            c.setflags(write=False)
            object.__setattr__(self, "center", c)
        if self.kind == "BallIntersection" and not isinstance(self.inner, DomainSpec):
            raise ValueError("BallIntersection wraps another DomainSpec")

    # constructors -------------------------------------------------------
    @classmethod
    def whole_space(cls):
        return cls("WholeSpace")

    @classmethod
    def half_space(cls):
        return cls("HalfSpace")

    @classmethod
    def ball(cls, center, radius):
        return cls("Ball", center=center, radius=radius)

    @classmethod
    def exterior_ball(cls, center, radius):
        return cls("ExteriorBall", center=center, radius=radius)

    @classmethod
    def intersect_ball(cls, inner, radius):
        return cls("BallIntersection", radius=radius, inner=inner)

    # geometry -----------------------------------------------------------
    def contains(self, x):
        """Membership test for the open domain."""
        pts, single = as_points(x)
        if self.kind == "WholeSpace":
            mask = np.ones(len(pts), dtype=bool)
        elif self.kind == "HalfSpace":
            mask = pts[:, -1] > 0
        elif self.kind == "Ball":
            mask = np.linalg.norm(pts - self.center, axis=1) < self.radius
        elif self.kind == "ExteriorBall":
            mask = np.linalg.norm(pts - self.center, axis=1) > self.radius
        else:
            mask = self.inner.contains(pts) & (np.linalg.norm(pts, axis=1) < self.radius)
        return bool(mask[0]) if single else mask

    def to_json(self):
        out = {"kind": self.kind}
        if self.kind in ("Ball", "ExteriorBall"):
            out["center"] = list(map(float, self.center))
        if self.radius is not None:
            out["radius"] = self.radius
        if self.inner is not None:
            out["inner"] = self.inner.to_json()
        return out

    @classmethod
    def from_json(cls, obj):
        kind = obj["kind"]
        if kind == "BallIntersection":
            return cls(kind, radius=obj["radius"], inner=cls.from_json(obj["inner"]))
        return cls(kind, center=obj.get("center"), radius=obj.get("radius"))


def distance_to_boundary(domain, x):
    """Euclidean distance from ``x`` (inside the closed domain) to the boundary.

    Closed forms exist for ``HalfSpace``, ``Ball`` and ``ExteriorBall``.
    ``BallIntersection`` reports the distance to the wrapped domain's boundary,
    which is what the local super-solution near a boundary pole needs.
    """
    pts, single = as_points(x)
    if domain.kind == "WholeSpace":
        raise UnsupportedDomain("the whole space has no boundary")
    if domain.kind == "BallIntersection":
        return distance_to_boundary(domain.inner, x)
    if domain.kind == "HalfSpace":
        rho = pts[:, -1].copy()
    else:
        if pts.shape[1] != domain.center.size:
            raise ValueError("point dimension does not match the domain center")
        # |x-c|^2 - R^2 expanded so points near a sphere through the origin
        # do not lose every digit to cancellation
        c, R = domain.center, domain.radius
        dist = np.linalg.norm(pts - c, axis=1)
        gap = np.sum(pts * pts, axis=1) - 2.0 * pts @ c + (float(c @ c) - R * R)
        rho = gap / (dist + R)
        if domain.kind == "Ball":
            rho = -rho
    return _unstack(rho, single)


# --------------------------------------------------------------------------
# Potentials
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PotentialSpec:
    """A singular weight W = scale * V.

    ``InverseSquare`` and ``InverseQuartic`` have one pole;  ``Multipolar`` is
    the pairwise product form sum_{i<j} |a_i-a_j|^2 / (|x-a_i|^2 |x-a_j|^2);
    ``MultipolarSum`` is sum_i 1/|x-a_i|^2.
    """

    kind: str
    poles: PoleSet
    scale: float = 1.0
    exclusion_radius: float = field(default=EXCLUSION_RADIUS, compare=False)

    KINDS = ("InverseSquare", "InverseQuartic", "Multipolar", "MultipolarSum")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        poles = self.poles if isinstance(self.poles, PoleSet) else PoleSet(self.poles)
        object.__setattr__(self, "poles", poles)
        if not self.scale > 0:
            raise ValueError("potential scale must be > 0")
        object.__setattr__(self, "scale", float(self.scale))
        if self.kind in ("InverseSquare", "InverseQuartic") and poles.n != 1:
            raise ValueError(f"{self.kind} has exactly one pole")
        if self.kind == "Multipolar" and poles.n < 2:
            raise TooFewPoles("the multipolar potential needs n >= 2")

    @classmethod
    def inverse_square(cls, d, scale=1.0, pole=None):
        pole = np.zeros(d) if pole is None else pole
        return cls("InverseSquare", PoleSet([pole]), scale)

    @classmethod
    def inverse_quartic(cls, d, scale=1.0, pole=None):
        pole = np.zeros(d) if pole is None else pole
        return cls("InverseQuartic", PoleSet([pole]), scale)

    @classmethod
    def multipolar(cls, poles, scale=1.0):
        return cls("Multipolar", PoleSet(poles), scale)

    @classmethod
    def multipolar_sum(cls, poles, scale=1.0):
        return cls("MultipolarSum", PoleSet(poles), scale)

    @property
    def d(self):
        return self.poles.d

    def with_scale(self, scale):
        return PotentialSpec(self.kind, self.poles, scale, self.exclusion_radius)

    def singular_points(self):
        return self.poles.poles

    def evaluate(self, x, check=True):
        """Vectorised ``scale * V(x)``."""
        pts, single = as_points(x, self.d)
        a = self.poles.poles
        r2 = np.sum((pts[:, None, :] - a[None, :, :]) ** 2, axis=-1)
        if check and np.any(r2 < self.exclusion_radius**2):
            raise PoleHit("evaluation point within the exclusion radius of a pole")
        if self.kind == "InverseSquare":
            v = 1.0 / r2[:, 0]
        elif self.kind == "InverseQuartic":
            v = 1.0 / r2[:, 0] ** 2
        elif self.kind == "MultipolarSum":
            v = np.sum(1.0 / r2, axis=1)
        else:
            v = np.zeros(len(pts))
            for i, j in combinations(range(self.poles.n), 2):
                v += np.sum((a[i] - a[j]) ** 2) / (r2[:, i] * r2[:, j])
        return _unstack(self.scale * v, single)

    def to_json(self):
        out = {"kind": self.kind, "scale": self.scale}
        if self.kind in ("InverseSquare", "InverseQuartic"):
            out["pole"] = list(map(float, self.poles.poles[0]))
        else:
            out["poles"] = self.poles.to_json()
        return out

    @classmethod
    def from_json(cls, obj):
        poles = [obj["pole"]] if "pole" in obj else obj["poles"]
        return cls(obj["kind"], PoleSet(poles), obj.get("scale", 1.0))


def potential_eval(V, x):
    """Evaluate ``V.scale * V(x)`` at a single point (or a stack of points)."""
    return V.evaluate(x)
