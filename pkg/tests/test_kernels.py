import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from gsek import kernels as K
from gsek.errors import DivergenceError, DomainError, SingularPointError, UsageError
from gsek.quadrature import QuadConfig, integrate_space

G0 = 1.0 / math.sqrt(4.0 * math.pi)

# frozen from a 30-digit mpmath evaluation of K_nu
BESSEL_ORACLE = [
    (0.5, 1.0, 0.461068504447894558),
    (0.0, 2.0, 0.113893872749533436),
    (2.5, 0.3, 75.1521401643748905),
    (-3.7, 1e-6, 4.29521511765173009e23),
    (1.3, 50.0, 3.46771242786740764e-23),
]


def test_gauss_weierstrass_values():
    assert K.gauss_weierstrass(1.0, [0.0], [0.0]) == pytest.approx(0.2820948, abs=1e-7)
    assert K.gauss_weierstrass(1.0, [0.0], [2.0]) == pytest.approx(0.1037769, abs=1e-7)
    assert K.gauss_weierstrass(1.0, [0.0], [2.0]) == pytest.approx(G0 * math.exp(-1.0), rel=1e-14)


def test_gauss_errors():
    with pytest.raises(DomainError):
        K.gauss_weierstrass(0.0, [0.0], [0.0])
    with pytest.raises(DomainError):
        K.gauss_weierstrass(-1.0, [0.0], [0.0])
    with pytest.raises(UsageError):
        K.gauss_weierstrass(1.0, [0.0, 1.0], [0.0])


def test_underflow_is_exact_zero():
    assert K.gauss_weierstrass(1e-3, [0.0], [100.0]) == 0.0


def test_gauss_normalization_quadrature():
    x = np.array([0.3, -1.2])
    est = integrate_space(lambda Z: K.gauss_weierstrass(0.7, x, Z), 2, gaussian=(x, 0.7),
                          config=QuadConfig(abs_tol=1e-12, rel_tol=1e-10))
    assert est.value == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 5.0), st.lists(st.floats(-3, 3), min_size=3, max_size=3),
       st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_gauss_symmetry(t, x, y):
    assert K.gauss_weierstrass(t, x, y) == pytest.approx(K.gauss_weierstrass(t, y, x), rel=1e-14)


def test_drifted_kernel():
    assert K.drifted_kernel([1.0], 1.0, [0.0], [2.0]) == pytest.approx(0.0051668, abs=1e-7)
    assert K.drifted_kernel([1.0], 1.0, [0.0], [2.0]) == pytest.approx(G0 * math.exp(-4.0), rel=1e-14)
    for s, x, z in [(0.3, [0.1, 2.0], [1.0, -1.0]), (2.0, [0.0, 0.0], [0.5, 0.5])]:
        assert K.drifted_kernel([0.0, 0.0], s, x, z) == K.gauss_weierstrass(s, x, z)


def test_drifted_normalization():
    alpha, s, x = np.array([3.0, -1.0]), 0.5, np.zeros(2)
    center = x - 2 * alpha * s
    est = integrate_space(lambda Z: K.drifted_kernel(alpha, s, x, Z), 2, gaussian=(center, s),
                          config=QuadConfig(abs_tol=1e-12, rel_tol=1e-10))
    assert est.value == pytest.approx(1.0, abs=1e-8)


def test_sharp_kernel_examples():
    assert K.sharp_kernel_K(1.0, [1, 0, 0], [2, 0, 0]) == pytest.approx(1.0, rel=1e-14)
    assert K.sharp_kernel_K(1.0, [0, 1, 0], [2, 0, 0]) == pytest.approx(0.3678794, abs=1e-7)
    assert K.sharp_kernel_K(1.0, [0.5, 0], [2, 0]) == pytest.approx(math.log(2.0), rel=1e-14)
    assert K.sharp_kernel_K(1.0, [0.5], [2.0]) == pytest.approx(1 / math.sqrt(5.0), rel=1e-14)
    assert K.sharp_kernel_K(1.0, [3.0, 0], [2.0, 0]) == 0.0


def test_sharp_kernel_singular_point():
    with pytest.raises(SingularPointError):
        K.sharp_kernel_K(1.0, [0, 0, 0], [1, 0, 0])
    with pytest.raises(SingularPointError):
        K.sharp_kernel_K(1.0, [0, 0], [1, 0])
    with pytest.raises(DomainError):
        K.sharp_kernel_K(0.0, [1, 0, 0], [1, 0, 0])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.floats(0.1, 3.0), st.data())
def test_sharp_kernel_indicator(d, t, data):
    x = np.array(data.draw(st.lists(st.floats(-4, 4), min_size=d, max_size=d)))
    y = np.array(data.draw(st.lists(st.floats(-4, 4), min_size=d, max_size=d)))
    if np.linalg.norm(x) == 0.0 and d >= 2:
        return
    val = K.sharp_kernel_K(t, x, y)
    if np.linalg.norm(x) > t * np.linalg.norm(y):
        assert val == 0.0
    else:
        assert val > 0.0 or np.linalg.norm(x) * np.linalg.norm(y) > 1000


@pytest.mark.parametrize("nu,z,ref", BESSEL_ORACLE)
def test_bessel_against_reference(nu, z, ref):
    assert K.bessel_k(nu, z) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("nu,z,ref", BESSEL_ORACLE)
def test_bessel_integral_oracle(nu, z, ref):
    assert K.bessel_k_integral(nu, z) == pytest.approx(ref, rel=1e-10)


def test_bessel_half_order_examples():
    assert K.bessel_k(0.5, 1.0) == pytest.approx(0.4610685, abs=1e-7)
    assert K.bessel_k(0.0, 2.0) == pytest.approx(0.1138938, abs=1e-7)
    # standard closed form sqrt(pi/(2z)) e^{-z}
    for z in (0.1, 1.0, 7.0):
        assert K.bessel_k(-0.5, z) == pytest.approx(math.sqrt(math.pi / (2 * z)) * math.exp(-z), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.floats(1e-6, 50))
def test_bessel_matches_integral_representation(nu, z):
    assert K.bessel_k(nu, z) == pytest.approx(K.bessel_k_integral(nu, z), rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 5), st.floats(1e-3, 30))
def test_bessel_order_symmetry(nu, z):
    assert K.bessel_k(-nu, z) == pytest.approx(K.bessel_k(nu, z), rel=1e-13)


def test_bessel_domain():
    with pytest.raises(DomainError):
        K.bessel_k(0.5, 0.0)
    with pytest.raises(DomainError):
        K.bessel_k(0.5, -1.0)


def test_resolvent_examples():
    # e^{-1}/(4 pi) = 0.0292749...; mpmath Laplace-transform quadrature agrees to 30 digits
    assert K.resolvent_kernel(1.0, [0, 0, 0], [0, 0, 0], [1, 0, 0]) == pytest.approx(0.0292749157621596, rel=1e-12)
    assert K.resolvent_kernel(2.0, [0.0], [0.0], [1.0]) == pytest.approx(0.0859547457691809, rel=1e-12)
    assert K.resolvent_kernel(2.0, [0.0], [0.0], [1.0]) == pytest.approx(0.0859, abs=1e-4)


def _laplace(lam, alpha, x, z):
    def h(s):
        return math.exp(-lam * s) * K.drifted_kernel(alpha, s, x, z)
    return integrate.quad(h, 0, np.inf, epsabs=1e-14, epsrel=1e-11, limit=400, points=None)[0]


def test_resolvent_is_laplace_transform():
    rng = np.random.default_rng(7)
    for i in range(21):
        d = (1, 2, 3)[i % 3]
        lam = rng.uniform(0.2, 3.0)
        alpha = rng.normal(size=d) * 0.7
        x = rng.normal(size=d)
        z = x + rng.normal(size=d)
        ref = integrate.quad(lambda s: math.exp(-lam * s) * K.drifted_kernel(alpha, s, x, z), 0, 1,
                             epsabs=1e-15, epsrel=1e-12, limit=400)[0]
        ref += integrate.quad(lambda s: math.exp(-lam * s) * K.drifted_kernel(alpha, s, x, z), 1, np.inf,
                              epsabs=1e-15, epsrel=1e-12, limit=400)[0]
        assert K.resolvent_kernel(lam, alpha, x, z) == pytest.approx(ref, rel=1e-8, abs=1e-14)


def test_resolvent_lambda_zero():
    alpha, x, z = [0.5, 0.0, 0.0], [0.0, 0.0, 0.0], [0.3, 0.4, 0.0]
    ref = _laplace(0.0, alpha, x, z)
    assert K.resolvent_kernel(0.0, alpha, x, z) == pytest.approx(ref, rel=1e-7)
    with pytest.raises(DivergenceError):
        K.resolvent_kernel(0.0, [0.0, 0.0], [0.0, 0.0], [1.0, 0.0])
    with pytest.raises(SingularPointError):
        K.resolvent_kernel(1.0, [0.0], [0.3], [0.3])
    with pytest.raises(DomainError):
        K.resolvent_kernel(-1.0, [0.0], [0.0], [1.0])


def test_newtonian():
    assert K.newtonian_kernel([0, 0, 0], [2, 0, 0]) == pytest.approx(0.0397887357729738, rel=1e-13)
    assert K.newtonian_kernel([0, 0, 0, 0], [1, 0, 0, 0]) == pytest.approx(0.0253302959105844, rel=1e-13)
    with pytest.raises(DivergenceError):
        K.newtonian_kernel([0, 0], [1, 0])
    with pytest.raises(SingularPointError):
        K.newtonian_kernel([1, 0, 0], [1, 0, 0])


def test_newtonian_is_time_integral():
    # independent route: int_0^inf g ds by scipy quad
    for d, r in [(3, 0.7), (4, 1.3), (5, 2.0)]:
        x, z = np.zeros(d), np.zeros(d)
        z[0] = r
        ref = integrate.quad(lambda s: K.gauss_weierstrass(s, x, z), 0, np.inf, epsabs=1e-15, epsrel=1e-12)[0]
        assert K.newtonian_kernel(x, z) == pytest.approx(ref, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.floats(0, 10), st.data())
def test_exponent_identity(d, lam, data):
    z = np.array(data.draw(st.lists(st.floats(-10, 10), min_size=d, max_size=d)))
    a = np.array(data.draw(st.lists(st.floats(-10, 10), min_size=d, max_size=d)))
    lhs, rhs = K.exponent_identity(z, a, lam)
    scale = np.linalg.norm(z) * (np.linalg.norm(a) + math.sqrt(lam) + 1.0) + 1.0
    assert abs(lhs - rhs) <= 1e-13 * scale
