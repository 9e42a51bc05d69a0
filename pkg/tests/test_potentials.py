import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from gsek.dsl import parse_potential
from gsek.errors import DomainError, ParseError, UsageError
from gsek.potentials import (BallIndicator, Constant, Cylinder3, Dilate, Negate, Scale, Series, Sum, Truncate,
                             Zero, cylinder_potential, dilation_series, evaluate, f_antiderivative_integral,
                             f_profile, rho, support_bound)

E_INV = math.exp(-1.0)


def test_evaluate_examples():
    assert evaluate(Constant(3.0, 2), [5.0, -1.0]) == 3.0
    B = BallIndicator(np.zeros(2), 1.0, -2.0)
    assert evaluate(B, [0.5, 0.0]) == -2.0
    assert evaluate(B, [1.5, 0.0]) == 0.0
    D = Dilate(4.0, BallIndicator(np.zeros(3), 1.0, 1.0))
    assert evaluate(D, [0.4, 0.0, 0.0]) == 4.0
    assert evaluate(D, [0.6, 0.0, 0.0]) == 0.0


def test_dimension_mismatch():
    with pytest.raises(UsageError):
        evaluate(Constant(1.0, 3), [0.0, 0.0])


def test_rho_values():
    assert rho(math.exp(-3.0)) == pytest.approx(math.exp(6.0) / (3 * math.log(3.0)), rel=1e-14)
    assert rho(math.exp(-3.0)) == pytest.approx(122.409, rel=1e-4)
    # |ln r| = e and ln|ln r| = 1 give e^{2e} / e
    assert rho(math.exp(-math.e)) == pytest.approx(math.exp(2 * math.e - 1.0), rel=1e-13)
    assert rho(math.exp(-math.e)) == pytest.approx(84.4841258471386, rel=1e-12)
    assert rho(0.01) > rho(0.1)


def test_rho_domain():
    for r in (0.0, -0.1, E_INV, 0.5, 1.0):
        with pytest.raises(DomainError):
            rho(r)
        with pytest.raises(DomainError):
            f_profile(r)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 0.2), st.floats(1e-6, 0.2))
def test_rho_decreasing(a, b):
    if a < b:
        assert rho(a) >= rho(b)


def test_f_profile():
    assert f_profile(math.exp(-3.0)) == pytest.approx(6.0944, rel=5e-4)
    assert f_profile(math.exp(-3.0)) == pytest.approx(math.exp(3.0) / (3 * math.log(3.0)), rel=1e-14)


@settings(max_examples=80, deadline=None)
@given(st.floats(1e-8, E_INV * (1 - 1e-9)))
def test_f_of_square_below_rho(r):
    assert f_profile(r * r) <= rho(r) * (1 + 1e-12)


def test_f_integral_antiderivative_vs_quadrature():
    a, b = 1 / 250, 1 / 25
    ref = integrate.quad(f_profile, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    closed = f_antiderivative_integral(a, b)
    assert closed == pytest.approx(ref, rel=1e-10)
    # frozen from 30-digit mpmath quadrature
    assert closed == pytest.approx(0.379522980012595, rel=1e-12)


def test_cylinder_examples():
    V1 = cylinder_potential(1)
    assert evaluate(V1, [1.1, 0.0, 0.0]) == pytest.approx(f_profile(0.044), rel=1e-14)
    assert evaluate(V1, [1.1, 0.0, 0.0]) == pytest.approx(6.387, rel=5e-4)
    assert evaluate(V1, [1.1, 0.3, 0.0]) == 0.0
    assert evaluate(cylinder_potential(4), [2.5, 0.0, 0.0]) == 0.0


def test_cylinder_dim_only_3():
    with pytest.raises(ParseError):
        parse_potential("cyl3:2", 2)
    with pytest.raises(UsageError):
        Cylinder3(2, dim=2)


def test_support_bounds():
    c, r = support_bound(BallIndicator(np.zeros(3), 1.0, 5.0))
    assert np.allclose(c, 0) and r == 1.0
    c, r = support_bound(Dilate(4.0, BallIndicator(np.zeros(2), 1.0, 1.0)))
    assert r == pytest.approx(0.5)
    c, r = support_bound(Dilate(0.25, BallIndicator(np.zeros(2), 1.0, 1.0)))
    assert r == pytest.approx(2.0)
    assert support_bound(Constant(1.0, 2)) is None
    for n in (1, 4, 10):
        c, r = support_bound(cylinder_potential(n))
        corner = math.sqrt((n + 0.25) ** 2 + n / (25 * n))
        assert corner < r <= n + 1


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 20), st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_dilatation_identity(s, z):
    f = Sum([BallIndicator(np.zeros(3), 1.0, 1.0), BallIndicator(np.array([0.5, 0, 0]), 0.3, -2.0)])
    z = np.array(z)
    assert evaluate(Dilate(s, f), z) == s * evaluate(f, math.sqrt(s) * z)


def _cylinder_index(n, z):
    """k with z in C_k, or 0."""
    k = math.floor(z[0])
    if 1 <= k <= n and z[0] <= k + 0.25 and z[1] ** 2 + z[2] ** 2 <= k / (25 * n):
        return k
    return 0


def test_cylinder_disjoint_and_dominated():
    rng = np.random.default_rng(3)
    for n in (1, 3, 10):
        V = cylinder_potential(n)
        k = rng.integers(1, n + 1, size=4000)
        Z = np.stack([k + rng.uniform(-0.1, 0.35, k.size), rng.uniform(-0.25, 0.25, k.size),
                      rng.uniform(-0.25, 0.25, k.size)], axis=1)
        vals = V(Z)
        for z, v in zip(Z, vals):
            kk = _cylinder_index(n, z)
            if kk == 0:
                assert v == 0.0
            else:
                assert v == pytest.approx(f_profile(z[0] / (25 * n)), rel=1e-13)
                assert v <= f_profile(kk / (25 * n)) <= rho(math.sqrt(kk / (25 * n)))


def test_cylinder_axial_gaps():
    # consecutive cylinders [k, k + 1/4] leave a 3/4 gap
    V = cylinder_potential(5)
    for k in range(1, 5):
        for x1 in np.linspace(k + 0.26, k + 0.99, 9):
            assert evaluate(V, [x1, 0.0, 0.0]) == 0.0


def test_series_truncation_bound():
    rng = np.random.default_rng(11)
    base = Constant(1.0, 3)
    S = dilation_series(base, [1.0, 4.0, 16.0, 64.0], [1.0, 0.5, 0.25, 0.125], truncation_len=2)
    S3 = S.truncated(3)
    w3 = S.weights[2] * S.all_terms[2].sup_abs()
    assert S.tail_bound() >= w3
    Z = rng.normal(scale=0.5, size=(500, 3))
    assert np.all(np.abs(S3(Z) - S(Z)) <= w3 * (1 + 1e-14))


def test_series_validation():
    with pytest.raises(UsageError):
        Series([0.5], [Constant(1.0, 1)], 2)
    with pytest.raises(DomainError):
        Series([-0.5], [Constant(1.0, 1)], 1)


def test_structural_sup_and_sign():
    V = Sum([Scale(2.0, BallIndicator(np.zeros(2), 1.0, 1.0)), Truncate(3.0, Constant(0.5, 2))])
    assert V.sup_abs() >= 2.5
    assert Negate(BallIndicator(np.zeros(1), 1.0, 1.0)).sign() < 0
    assert math.isinf(Cylinder3(2).sup_abs()) or Cylinder3(2).sup_abs() > 0
    assert Zero(3).is_zero()
