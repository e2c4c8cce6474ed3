import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import sparse

from hardylab.errors import MeshTooCoarse
from hardylab.quadrature import integrate_1d
from hardylab.spectrum import (
    RadialMesh,
    assemble_forms,
    assemble_hardy_forms,
    hardy_constant_estimate,
    smallest_generalized_eig,
)


def test_forms_structure():
    A, B = assemble_hardy_forms(3, RadialMesh.log_spaced(1e-4, 1, 64))
    assert abs(A - A.T).max() == 0 and abs(B - B.T).max() == 0
    Bd = B.diagonal()
    off = np.abs(B).sum(axis=1).A1 - Bd
    assert np.all(Bd > 0) and np.all(Bd >= off)
    with pytest.raises(MeshTooCoarse):
        assemble_hardy_forms(3, RadialMesh.log_spaced(1e-4, 1, 5))


def test_constant_coefficient_sanity():
    mesh = RadialMesh(np.linspace(1e-9, 1, 801) + 0.0)
    A, B = assemble_forms(mesh, 0, 0)
    est = smallest_generalized_eig(A, B)
    assert est.value == pytest.approx(np.pi**2, rel=1e-4)


def test_form_of_sampled_function_matches_quadrature():
    u = lambda r: np.sin(np.pi * np.log(r / 1e-2) / np.log(1 / 1e-2))  # noqa: E731
    errs = []
    for n in (64, 128, 256):
        mesh = RadialMesh.log_spaced(1e-2, 1, n)
        A, B = assemble_hardy_forms(3, mesh)
        v = u(mesh.nodes)[1:-1]
        exact = integrate_1d(lambda r: u(r) ** 2 * r**0, 1e-2, 1).value
        errs.append(abs(v @ (B @ v) - exact) / exact)
    assert errs[1] < errs[0] / 3 and errs[2] < errs[1] / 3


def test_eig_trivial_examples():
    I = sparse.identity(4, format="csc")
    assert smallest_generalized_eig(I, I).value == pytest.approx(1.0, abs=1e-12)
    A = sparse.diags([1.0, 2.0, 3.0], format="csc")
    assert smallest_generalized_eig(A, sparse.identity(3, format="csc")).value == pytest.approx(
        1.0, abs=1e-9)


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_eig_matches_characteristic_polynomial(n, seed):
    rng = np.random.default_rng(seed)
    X, Y = rng.normal(size=(n, n)), rng.normal(size=(n, n))
    A = X @ X.T + n * np.eye(n)
    B = Y @ Y.T + n * np.eye(n)
    # det(A - mu B) = 0 via the characteristic polynomial of B^-1 A
    roots = np.roots(np.poly(np.linalg.solve(B, A)))
    oracle = np.min(roots.real)
    est = smallest_generalized_eig(A, B, tol=1e-12, max_iter=100_000)
    assert est.value == pytest.approx(oracle, rel=1e-8)


def test_hardy_estimate_examples():
    vals = [hardy_constant_estimate(3, nodes=2048, delta=d).value for d in (1e-4, 1e-6, 1e-8)]
    assert vals[0] > vals[1] > vals[2]
    assert all(0.25 <= v <= 0.40 for v in vals)


def test_backward_error_and_refinement():
    mesh = RadialMesh.log_spaced(1e-6, 1, 257)
    A, B = assemble_hardy_forms(3, mesh)
    est = smallest_generalized_eig(A, B, tol=1e-10)
    u = est.vector
    assert np.linalg.norm(A @ u - est.value * (B @ u)) <= 1e-10 * np.linalg.norm(A @ u)
    finer = hardy_constant_estimate(3, mesh.refined())
    assert finer.value <= est.value + 1e-9


@given(st.integers(3, 7), st.floats(-9, -2), st.integers(16, 200))
def test_estimate_never_beats_constant(d, log_delta, nodes):
    est = hardy_constant_estimate(d, nodes=nodes, delta=10**log_delta)
    assert est.value + 1e-6 >= (d - 2) ** 2 / 4


def test_shift_does_not_change_the_eigenvalue():
    A, B = assemble_hardy_forms(4, RadialMesh.log_spaced(1e-5, 1, 300))
    plain = smallest_generalized_eig(A, B, tol=1e-11, max_iter=20_000)
    shifted = smallest_generalized_eig(A, B, tol=1e-11, shift=0.99)
    assert shifted.value == pytest.approx(plain.value, rel=1e-10)
    assert shifted.iterations < plain.iterations
