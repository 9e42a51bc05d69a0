import math

import numpy as np
import pytest
from scipy import special

from gsek.errors import UsageError
from gsek.kernels import gauss_weierstrass
from gsek.quadrature import (Estimate, QuadConfig, grid_oracle_integrate, integrate_space,
                             integrate_time_space)

TIGHT = QuadConfig(abs_tol=1e-12, rel_tol=1e-10)


def _g(t, x):
    x = np.asarray(x, dtype=float)
    return lambda Z: gauss_weierstrass(t, x, Z)


def _ball(center, r):
    center = np.asarray(center, dtype=float)
    return lambda Z: (np.sum((Z - center) ** 2, axis=-1) <= r * r).astype(float)


def test_config_validation():
    with pytest.raises(UsageError):
        QuadConfig(abs_tol=0.0)
    with pytest.raises(UsageError):
        QuadConfig(singularity_mode="bogus")
    assert QuadConfig(rel_tol=1e-12).effective_tail_sigma >= 8.0
    assert QuadConfig().effective_tail_sigma == 6.0


def test_gaussian_normalization_2d():
    est = integrate_space(_g(1.0, [0, 0]), 2, gaussian=(np.zeros(2), 1.0), config=TIGHT)
    assert est.converged
    assert est.value == pytest.approx(1.0, abs=1e-8)


def test_radial_singularity():
    def f(Z):
        r = np.linalg.norm(Z, axis=-1)
        return np.where(r <= 1.0, 1.0 / np.maximum(r, 1e-300), 0.0)

    est = integrate_space(f, 3, domain_hint=(np.zeros(3), 1.0), config=TIGHT.replace(singularity_mode="radial_origin"))
    # 4 pi int_0^1 r dr
    assert est.value == pytest.approx(2 * math.pi, rel=1e-9)
    assert est.value == pytest.approx(6.2831853, abs=1e-7)


def test_zero_integrand_is_exact():
    est = integrate_space(lambda Z: np.zeros(len(Z)), 2, domain_hint=(np.zeros(2), 3.0))
    assert est.value == 0.0


def test_requires_domain():
    with pytest.raises(UsageError):
        integrate_space(lambda Z: np.ones(len(Z)), 2)


def test_time_space_normalization():
    for d, x in [(1, [0.3]), (2, [1.0, -2.0])]:
        x = np.array(x)
        est = integrate_time_space(lambda s, Z: gauss_weierstrass(s, x, Z), 0.8, d, TIGHT,
                                   gaussian=lambda s: (x, s))
        assert est.value == pytest.approx(0.8, abs=1e-7)


def test_time_space_bridge_density():
    t = 1.0
    x = y = np.zeros(1)
    g0 = gauss_weierstrass(t, x, y)

    def f(s, Z):
        return gauss_weierstrass(s, x, Z) * gauss_weierstrass(t - s, Z, y) / g0

    est = integrate_time_space(f, t, 1, TIGHT, gaussian=lambda s: ((1 - s / t) * x + (s / t) * y, s * (t - s) / t))
    assert est.value == pytest.approx(1.0, abs=1e-7)


def test_time_space_against_grid_oracle():
    # g(s,0,z) 1_{|z|<=1}, d = 1, t = 1/4
    def f2(S, Z):
        return gauss_weierstrass(S, np.zeros(1), Z) * (np.abs(Z[..., 0]) <= 1.0)

    est = integrate_time_space(lambda s, Z: f2(np.full(len(Z), s), Z), 0.25, 1, QuadConfig(),
                               domain_hint=(np.zeros(1), 1.0), gaussian=lambda s: (np.zeros(1), s))
    grid = grid_oracle_integrate(lambda P: f2(P[:, 0], P[:, 1:]), [(0.0, 0.25), (-1.0, 1.0)], 1024)
    assert abs(est.value - grid.value) <= 3 * (est.err_bound + grid.err_bound)
    # closed form int_0^{1/4} erf(1/sqrt(4s)) ds
    from scipy import integrate
    ref = integrate.quad(lambda s: special.erf(1 / math.sqrt(4 * s)), 0, 0.25, epsabs=1e-14)[0]
    assert est.value == pytest.approx(ref, abs=1e-8)


def test_grid_oracle_examples():
    est = grid_oracle_integrate(lambda Z: np.ones(len(Z)), [(0, 1), (0, 1)], 16)
    assert est.value == pytest.approx(1.0, abs=1e-15)
    est = grid_oracle_integrate(_g(1.0, [0.0]), [(-8, 8)], 2048)
    assert est.value == pytest.approx(1.0, abs=1e-6)


def test_adaptive_agrees_with_grid_on_random_integrands():
    rng = np.random.default_rng(5)
    for _ in range(10):
        t = rng.uniform(0.2, 1.5)
        x = rng.uniform(-1, 1, size=2)
        c = rng.uniform(-1, 1, size=2)
        r = rng.uniform(0.3, 1.5)
        gf, bf = _g(t, x), _ball(c, r)

        def f(Z):
            return gf(Z) * bf(Z)

        est = integrate_space(f, 2, domain_hint=(c, r), config=QuadConfig(rel_tol=1e-9), gaussian=(x, t))
        box = [(c[0] - r, c[0] + r), (c[1] - r, c[1] + r)]
        grid = grid_oracle_integrate(f, box, 1024)
        assert abs(est.value - grid.value) <= 3 * (est.err_bound + grid.err_bound) + 1e-12


def test_linearity_and_monotonicity():
    dom = (np.zeros(2), 2.0)
    f, h = _g(0.5, [0.2, 0.0]), _g(1.0, [-0.5, 0.3])
    a, b = 2.5, -0.7
    ef = integrate_space(f, 2, domain_hint=dom)
    eh = integrate_space(h, 2, domain_hint=dom)
    ecomb = integrate_space(lambda Z: a * f(Z) + b * h(Z), 2, domain_hint=dom)
    tol = abs(a) * ef.err_bound + abs(b) * eh.err_bound + ecomb.err_bound
    assert abs(ecomb.value - (a * ef.value + b * eh.value)) <= tol + 1e-12
    # f * 1_B <= f
    ebf = integrate_space(lambda Z: f(Z) * _ball([0.5, 0], 0.7)(Z), 2, domain_hint=dom)
    assert ebf.value <= ef.value + ebf.err_bound + ef.err_bound


def test_determinism():
    f = _g(0.3, [0.1, 0.4])
    a = integrate_space(f, 2, domain_hint=(np.zeros(2), 1.0))
    b = integrate_space(f, 2, domain_hint=(np.zeros(2), 1.0))
    assert a == b


def test_nonconvergence_is_reported():
    f = _g(0.3, [0.1, 0.4])
    est = integrate_space(f, 2, domain_hint=(np.zeros(2), 1.0), config=QuadConfig(rel_tol=1e-14, abs_tol=1e-16,
                                                                                 max_evals=50))
    assert isinstance(est, Estimate)
    assert not est.converged


def test_estimate_arithmetic():
    a = Estimate(1.0, 0.1, 10, True)
    b = Estimate(2.0, 0.2, 5, False)
    s = a + b
    assert (s.value, s.evals, s.converged) == (3.0, 15, False)
    assert s.err_bound == pytest.approx(0.3)
    assert a.scaled(-2.0).err_bound == pytest.approx(0.2)


def test_warped_rays_cylinder_volume_from_off_axis_point():
    from gsek.quadrature import RayFamily, integrate_lines

    a, b, R = 0.0, 1.0, 0.2
    x = np.array([0.3, 0.05, 0.02])

    def side(u):
        A = u[:, 1] ** 2 + u[:, 2] ** 2
        B = x[1] * u[:, 1] + x[2] * u[:, 2]
        C = x[1] ** 2 + x[2] ** 2 - R * R
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(A > 0, (-B + np.sqrt(B * B - A * C)) / A, np.inf)

    def span(u):
        with np.errstate(divide="ignore"):
            cap = np.where(u[:, 0] > 0, (b - x[0]) / u[:, 0], np.where(u[:, 0] < 0, (a - x[0]) / u[:, 0], np.inf))
        return np.zeros(len(u)), np.minimum(cap, side(u))

    def rims(w):
        L = side(w)
        return np.stack([np.arctan2(L, b - x[0]), math.pi - np.arctan2(L, x[0] - a)], axis=1)

    cfg = QuadConfig(abs_tol=1e-13, rel_tol=1e-11)
    fam = RayFamily(x, span=span, polar_break_fn=rims, n_polar_breaks=2)
    est = integrate_lines(fam, lambda Z: np.ones(len(Z)), cfg)
    assert est.converged
    assert est.value == pytest.approx(math.pi * R * R * (b - a), rel=1e-10)
    # without the warp the same tolerance costs more evaluations
    plain = integrate_lines(RayFamily(x, span=span), lambda Z: np.ones(len(Z)), cfg.replace(max_evals=2 * est.evals))
    assert plain.evals > est.evals or not plain.converged
