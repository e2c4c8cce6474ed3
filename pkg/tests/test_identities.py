import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import polynomial as Poly

from hardylab.errors import DimensionTooSmall, PositivityViolation
from hardylab.identities import (
    INEQUALITIES,
    TestFunction,
    check_expansion_square,
    check_geni,
    check_identIP2,
    check_inequality,
    check_second_derivative_sum,
    run_suite,
)
from hardylab.quadrature import radial_integral, sphere_area
from hardylab.supersolution import SupersolutionAnsatz

IDENTITY_CHECKS = {
    "expansion_square": check_expansion_square,
    "second_derivative_sum": check_second_derivative_sum,
    "identIP2": check_identIP2,
    "geni": lambda u: check_geni(u, SupersolutionAnsatz.power_only(-(u.d - 2) / 2)),
}


def random_u(d, seed, support="annulus"):
    return TestFunction.random(d, np.random.default_rng(seed), support)


def test_examples_d3():
    for name in ("expansion_square", "second_derivative_sum"):
        for i, res in run_suite(name, 3, count=5):
            assert res.passed and res.value <= 1e-6 * max(abs(res.lhs), 1)
    for i, res in run_suite("identIP2", 5, count=3):
        assert res.passed and res.value <= 1e-6 * max(abs(res.lhs), 1)


def test_zero_function():
    u = TestFunction.zero(3, center=[0.9, 0, 0], scale=0.5)
    for check in IDENTITY_CHECKS.values():
        res = check(u)
        assert res.lhs == 0 and res.rhs == 0 and res.passed
    assert check_identIP2(TestFunction.zero(5, center=[1, 0, 0, 0, 0], scale=0.5)).value == 0


def test_geni_phi_one_reduces_to_dirichlet():
    u = random_u(3, 4)
    res = check_geni(u, SupersolutionAnsatz.power_only(0.0))
    assert res.lhs == pytest.approx(res.rhs, rel=1e-14)


def test_geni_halfspace_ansatz():
    for _, res in run_suite("geni", 3, count=5, params={"ansatz": "halfspace"}):
        assert res.passed
    u = random_u(3, 0)  # support may cross the plane
    lower = TestFunction(np.array([0.0, 0.0, -1.0]), 0.5, 1.0, np.zeros(3), np.eye(3))
    with pytest.raises(PositivityViolation):
        check_geni(lower, SupersolutionAnsatz.halfspace(-1.5))
    assert u.d == 3


class Separable:
    """u(x) = b(x_1) b(x_2) with b(t) = (1 - t^2)^6 on [-1, 1]."""

    d = 2
    center = np.zeros(2)
    scale = 1.0
    b = Poly.polypow([1, 0, -1], 6)

    def derivatives(self, x, hessian=True):
        b0 = [Poly.polyval(x[:, i], self.b) for i in range(2)]
        b1 = [Poly.polyval(x[:, i], Poly.polyder(self.b)) for i in range(2)]
        b2 = [Poly.polyval(x[:, i], Poly.polyder(self.b, 2)) for i in range(2)]
        u = b0[0] * b0[1]
        g = np.stack([b1[0] * b0[1], b0[0] * b1[1]], 1)
        H = np.empty((len(x), 2, 2))
        H[:, 0, 0], H[:, 1, 1] = b2[0] * b0[1], b0[0] * b2[1]
        H[:, 0, 1] = H[:, 1, 0] = b1[0] * b1[1]
        return u, g, H


def test_second_derivative_sum_separable_oracle():
    u = Separable()
    t, w = np.polynomial.legendre.leggauss(20)
    X, Y = np.meshgrid(t, t, indexing="ij")
    rule = (np.stack([X.ravel(), Y.ravel()], 1), np.outer(w, w).ravel())
    res = check_second_derivative_sum(u, rule=rule)

    def one_d(p):
        q = Poly.polyint(p)
        return Poly.polyval(1, q) - Poly.polyval(-1, q)

    b, b1, b2 = u.b, Poly.polyder(u.b), Poly.polyder(u.b, 2)
    I00, I11, I22 = one_d(Poly.polymul(b, b)), one_d(Poly.polymul(b1, b1)), one_d(Poly.polymul(b2, b2))
    I02 = one_d(Poly.polymul(b, b2))
    assert res.lhs == pytest.approx(2 * I22 * I00 + 2 * I11**2, rel=1e-12)
    assert res.rhs == pytest.approx(2 * I22 * I00 + 2 * I02**2, rel=1e-12)
    assert I02 == pytest.approx(-I11, rel=1e-12)


@pytest.mark.parametrize("d", [3, 5])
def test_identIP2_radial_reduction(d):
    m = 0.7
    u = TestFunction(np.zeros(d), 1.0, 1.0, np.zeros(d), m * np.eye(d))
    p = Poly.polymul([1, 0, m], Poly.polypow([1, 0, -1], 6))
    p1, p2 = Poly.polyder(p), Poly.polyder(p, 2)
    S = sphere_area(d)
    f1 = lambda r: Poly.polyval(r, p1)  # noqa: E731
    f2 = lambda r: Poly.polyval(r, p2)  # noqa: E731
    weighted = radial_integral(lambda r: f1(r) ** 2 / r**2, d, 0, 1).value
    mixed = radial_integral(lambda r: f1(r) * (f2(r) + (d - 1) * f1(r) / r) / r, d, 0, 1).value
    res = check_identIP2(u)
    assert res.lhs == pytest.approx((d - 4) * weighted, rel=1e-9, abs=1e-12 * S)
    assert res.rhs == pytest.approx(-4 * weighted + 2 * mixed, rel=1e-9)
    assert res.passed


def test_inequality_examples():
    for _, res in run_suite("Hardy", 3, count=10):
        assert res.value >= -1e-7
    for _, res in run_suite("Pushu", 3, count=10):
        assert res.value >= -1e-6
    for _, res in run_suite("HardyRellich", 3, count=10, params={"constant": 25 / 36}):
        assert res.value >= -1e-6
    for which, d in (("Rellich", 5), ("Weaker", 4), ("FirstHR", 3)):
        assert all(r.passed for _, r in run_suite(which, d, count=5))


def test_sharpness_probe_runs():
    # allowed to be inconclusive: random search need not find a violator
    results = run_suite("HardyRellich", 3, count=10, params={"constant": 25 / 36 + 0.5})
    assert len(results) == 10


def test_dimension_preconditions():
    u = random_u(3, 1)
    with pytest.raises(DimensionTooSmall):
        check_inequality(u, "Rellich")
    with pytest.raises(DimensionTooSmall):
        check_inequality(u, "Weaker")


def test_suite_is_prefix_stable():
    a = run_suite("Hardy", 3, count=3, seed=7)
    b = run_suite("Hardy", 3, count=5, seed=7)
    assert [r for _, r in a] == [r for _, r in b[:3]]


@settings(max_examples=10)
@given(st.integers(0, 10**6), st.floats(0.1, 10), st.sampled_from(sorted(IDENTITY_CHECKS)))
def test_identity_gaps_scale_quadratically(seed, lam, name):
    check = IDENTITY_CHECKS[name]
    u = random_u(3, seed, "free" if name == "second_derivative_sum" else "annulus")
    a, b = check(u), check(u.scaled(lam))
    assert b.lhs == pytest.approx(lam**2 * a.lhs, rel=1e-10, abs=1e-10 * abs(a.tolerance))
    assert b.rhs == pytest.approx(lam**2 * a.rhs, rel=1e-10, abs=1e-10 * abs(a.tolerance))
    assert b.value <= lam**2 * (a.value + 1e-10 * a.tolerance * 1e6)


@settings(max_examples=10)
@given(st.integers(0, 10**6), st.floats(-10, 10).filter(lambda v: abs(v) > 0.1),
       st.sampled_from(["Hardy", "HardyRellich", "FirstHR", "Pushu"]))
def test_margin_sign_invariant_under_scaling(seed, lam, which):
    u = random_u(3, seed)
    a = check_inequality(u, which)
    b = check_inequality(u.scaled(lam), which)
    assert np.sign(a.value) == np.sign(b.value)
    assert b.value == pytest.approx(lam**2 * a.value, rel=1e-9)


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_expansion_square_implies_hardy(seed):
    u = random_u(3, seed)
    exp = check_expansion_square(u)
    hardy = check_inequality(u, "Hardy")
    assert exp.rhs >= 0
    assert hardy.value >= -hardy.tolerance
    assert hardy.value == pytest.approx(exp.lhs, rel=1e-10)


def test_inequality_names():
    assert set(INEQUALITIES) == {"Hardy", "Rellich", "HardyRellich", "Weaker", "Pushu", "FirstHR"}
