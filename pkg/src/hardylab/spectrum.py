"""Discrete estimates of the interior Hardy constant on a ball.

Radial P1 finite elements on a log-spaced mesh [delta, R] with Dirichlet
conditions at both ends turn the Hardy quotient into a generalized
eigenproblem A u = mu B u with tridiagonal A (stiffness, weight r^(d-1)) and
B (singular mass, weight r^(d-3)).  Every discrete candidate is a genuine test
function, so the smallest eigenvalue is an upper bound for the constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .errors import MeshTooCoarse, NoConvergence
from .geometry import check_dimension

MIN_NODES = 8


@dataclass(frozen=True)
class RadialMesh:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2:
            raise ValueError("mesh needs at least two nodes")
        if not nodes[0] > 0:
            raise ValueError("the inner truncation radius must be > 0")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("mesh nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def log_spaced(cls, delta, R, n):
        if not 0 < delta < R:
            raise ValueError("need 0 < delta < R")
        return cls(np.geomspace(delta, R, int(n)))

    @property
    def delta(self):
        return float(self.nodes[0])

    @property
    def R(self):
        return float(self.nodes[-1])

    def refined(self):
        """Nested refinement: insert geometric midpoints."""
        mids = np.sqrt(self.nodes[:-1] * self.nodes[1:])
        return RadialMesh(np.sort(np.concatenate([self.nodes, mids])))

    def describe(self):
        return {"nodes": len(self.nodes), "delta": self.delta, "R": self.R,
                "boundary": "Dirichlet at delta and R", "spacing": "log"}


@dataclass(frozen=True)
class EigEstimate:
    value: float
    iterations: int
    residual_norm: float
    mesh: dict
    vector: np.ndarray = None


def assemble_forms(mesh, stiffness_power, mass_power, quad_points=8):
    """Tridiagonal P1 forms int u'^2 r^s dr and int u^2 r^m dr on interior nodes.

    Element integrals use Gauss-Legendre with ``quad_points`` nodes, exact for
    integer powers up to degree 2*quad_points - 3.
    """
    x = mesh.nodes
    if len(x) < MIN_NODES:
        raise MeshTooCoarse(f"{len(x)} nodes; at least {MIN_NODES} are required")
    t, w = np.polynomial.legendre.leggauss(quad_points)
    a, b = x[:-1], x[1:]
    h = b - a
    # quadrature points per element, shape (elements, q)
    r = 0.5 * (a + b)[:, None] + 0.5 * h[:, None] * t[None, :]
    wq = 0.5 * h[:, None] * w[None, :]
    lam = (r - a[:, None]) / h[:, None]          # rising hat on each element
    ks = np.sum(wq * r**stiffness_power, axis=1) / h**2
    m_ll = np.sum(wq * r**mass_power * (1 - lam) ** 2, axis=1)
    m_rr = np.sum(wq * r**mass_power * lam**2, axis=1)
    m_lr = np.sum(wq * r**mass_power * lam * (1 - lam), axis=1)

    n = len(x)
    Ad, Ao = np.zeros(n), -ks
    Bd, Bo = np.zeros(n), m_lr
    Ad[:-1] += ks
    Ad[1:] += ks
    Bd[:-1] += m_ll
    Bd[1:] += m_rr
    # drop both Dirichlet ends
    A = sparse.diags([Ao[1:-1], Ad[1:-1], Ao[1:-1]], [-1, 0, 1], format="csc")
    B = sparse.diags([Bo[1:-1], Bd[1:-1], Bo[1:-1]], [-1, 0, 1], format="csc")
    return A, B


def assemble_hardy_forms(d, mesh):
    """Radial Dirichlet energy (weight r^(d-1)) and Hardy mass (weight r^(d-3))."""
    d = check_dimension(d, 3)
    return assemble_forms(mesh, d - 1, d - 3)


def smallest_generalized_eig(A, B, tol=1e-10, max_iter=5000, x0=None, shift=0.0, block=8):
    """Block inverse iteration for the smallest eigenvalue of A u = mu B u.

    ``block`` vectors are iterated together with a Rayleigh-Ritz step, so a
    cluster of low eigenvalues slows convergence only through the gap to the
    (block+1)-th one.  ``shift`` must lie below the smallest eigenvalue.  The
    pair is Jacobi-scaled first, which matters when the radial weights span
    many decades.  Stops once ||A u - mu B u|| <= tol ||A u||.
    """
    n = A.shape[0]
    diag = A.diagonal() if sparse.issparse(A) else np.diag(A)
    if np.any(~(diag > 0)):
        raise ValueError("A must have a positive diagonal")
    D = 1.0 / np.sqrt(diag)
    if sparse.issparse(A):
        S = sparse.diags(D)
        As, Bs = S @ A @ S, S @ B @ S
        solve = splinalg.splu(sparse.csc_matrix(As - shift * Bs)).solve
    else:
        As = D[:, None] * np.asarray(A, dtype=float) * D[None, :]
        Bs = D[:, None] * np.asarray(B, dtype=float) * D[None, :]
        factor = linalg.cho_factor(As - shift * Bs)
        solve = lambda v: linalg.cho_solve(factor, v)  # noqa: E731
    k = max(1, min(n, block))
    V = np.random.default_rng(0).standard_normal((n, k))
    V[:, 0] = 1.0 if x0 is None else np.asarray(x0, dtype=float) / D
    mu, res = np.nan, np.inf
    for it in range(1, max_iter + 1):
        W, _ = np.linalg.qr(solve(Bs @ V))
        theta, Y = linalg.eigh(W.T @ (As @ W), W.T @ (Bs @ W))
        V = W @ Y
        mu = float(theta[0])
        u = D * V[:, 0]
        Au = A @ u
        res = float(np.linalg.norm(Au - mu * (B @ u)) / np.linalg.norm(Au))
        if res <= tol:
            return EigEstimate(mu, it, res, {"size": n}, u / np.sqrt(u @ (B @ u)))
    raise NoConvergence(f"residual {res:.3g} after {max_iter} iterations (mu ~ {mu:.6g})")


def hardy_constant_estimate(d, mesh=None, *, nodes=2048, delta=1e-6, R=1.0, tol=1e-10):
    """Smallest discrete Hardy quotient among radial P1 functions on [delta, R]."""
    d = check_dimension(d, 3)
    mesh = mesh or RadialMesh.log_spaced(delta, R, nodes)
    A, B = assemble_hardy_forms(d, mesh)
    # every discrete quotient is a continuous one, hence >= (d-2)^2/4: a shift
    # just below that keeps A - shift B positive definite
    shift = (1.0 - 1e-3) * (d - 2) ** 2 / 4.0
    est = smallest_generalized_eig(A, B, tol, shift=shift)
    return EigEstimate(est.value, est.iterations, est.residual_norm, mesh.describe(), est.vector)
