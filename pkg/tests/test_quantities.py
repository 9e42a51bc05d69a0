import math

import numpy as np
import pytest
from scipy import integrate, special

from gsek import quantities as q
from gsek.dsl import parse_potential
from gsek.errors import DivergenceError
from gsek.potentials import BallIndicator, Constant, Zero


@pytest.mark.parametrize("d", [1, 2, 3])
def test_constant_potential_identities(d):
    one = Constant(1.0, d)
    rng = np.random.default_rng(d)
    for t in (0.25, 1.0):
        x, y = rng.uniform(-1, 1, d), rng.uniform(-1, 1, d)
        assert q.S_value(one, t, x, y).value == pytest.approx(t, abs=1e-6)
        assert q.N_value(one, t, x, y).value == pytest.approx((4 * math.pi) ** (d / 2) * t, abs=1e-6)
        assert q.r_star(one, t).value == pytest.approx(t, abs=1e-6)
        assert q.A_value(one, t).value == pytest.approx(t, abs=1e-6)
        assert q.e_star(one, 1.0 / t).value == pytest.approx(t, abs=1e-6)


@pytest.mark.parametrize("d,expected", [(1, 4.0), (2, 4 * math.pi), (3, 8 * math.pi)])
def test_kato_bracket_of_constant(d, expected):
    # int over |w| < sqrt(4t) of sqrt(t), log(4t/|w|^2) or |w|^{-1}, by hand
    t = 0.5
    assert q.kato_bracket(Constant(1.0, d), t).value == pytest.approx(expected * t, rel=1e-9)


def test_zero_potential_is_zero_everywhere():
    Z = Zero(2)
    assert q.S_value(Z, 1.0, [0, 0], [1, 1]).value == 0.0
    assert q.sup_S(Z, 1.0).value == 0.0
    assert q.K_norm(Z, 1.0).value == 0.0


def test_S_ball_one_dimension_against_quad():
    # bridge from 0 to 0: marginal N(0, 2s(t-s)/t)
    V = BallIndicator([0.0], 1.0, 1.0, 1)
    t = 1.0
    ref = integrate.quad(lambda s: special.erf(1.0 / math.sqrt(4 * s * (t - s) / t)), 0, t, epsabs=1e-13,
                         epsrel=1e-12, points=[0.5])[0]
    est = q.S_value(V, t, [0.0], [0.0])
    assert est.converged
    assert est.value == pytest.approx(ref, abs=1e-8)


def test_heat_mass_one_dimension_closed_form():
    V = BallIndicator([0.0], 1.0, 1.0, 1)
    x, t = 0.4, 0.7

    def mass(s):
        return 0.5 * (special.erf((1 - x) / math.sqrt(4 * s)) + special.erf((1 + x) / math.sqrt(4 * s)))

    ref = integrate.quad(mass, 0, t, epsabs=1e-13)[0]
    assert q.heat_mass_value(V, t, [x]).value == pytest.approx(ref, abs=1e-8)


@pytest.mark.parametrize("r", [0.0, 0.3, 0.9, 1.5, 3.0])
def test_delta_inverse_ball_closed_form(r):
    # Newtonian potential of the unit ball with kernel 1/(4 pi |w|), signed
    V = BallIndicator([0.0, 0.0, 0.0], 1.0, 1.0, 3)
    ref = -(3 - r * r) / 6 if r < 1 else -1 / (3 * r)
    x = np.array([r, 0.0, 0.0])
    assert q.delta_inverse(V, x).value == pytest.approx(ref, abs=1e-8)
    assert q.delta_inverse_time(V, x).value == pytest.approx(ref, abs=1e-7)


def test_delta_inverse_diverges_in_low_dimension():
    with pytest.raises(DivergenceError):
        q.delta_inverse(BallIndicator([0.0, 0.0], 1.0, 1.0, 2), [0.0, 0.0])
    with pytest.raises(DivergenceError):
        q.delta_inverse(Constant(1.0, 3), [0.0, 0.0, 0.0])


@pytest.mark.parametrize("dsl,x,alpha", [
    ("ball:1,1", [0.2, -0.1, 0.3], [0.3, 0.0, -0.2]),
    ("cyl3:1", [1.05, 0.01, 0.02], [0.1, -0.2, 0.05]),
    # off-axis inside the cylinder: the ray exits through side or cap
    ("cyl3:1", [1.12101, 0.006828, 0.0], [-0.010325, 0.032266, 0.0]),
    ("cyl3:10", [0.9, 0.0, 0.0], [0.0, 0.0, 0.0]),
])
def test_resolvent_space_route_matches_time_route(dsl, x, alpha):
    V = parse_potential(dsl, 3)
    a = q.resolvent_mass_space(V, 1.0, alpha, x)
    b = q.resolvent_mass_time(V, 1.0, alpha, x)
    assert a.converged and b.converged
    assert abs(a.value - b.value) <= 3 * (a.err_bound + b.err_bound) + 1e-12


def test_K_off_axis_inside_cylinder_converges():
    V = parse_potential("cyl3:1", 3)
    est = q.K_potential_value(V, 1.0, [1.113438, 0.039677, 0.0], [0.114586, -0.241629, 0.002827])
    assert est.converged
    assert est.err_bound < 1e-7


def test_drift_mass_zero_drift_is_heat_mass():
    V = parse_potential("dilate:4(ball:1,1)", 2)
    x = [0.1, 0.2]
    a = q.drift_mass_value(V, 0.5, [0.0, 0.0], x)
    b = q.heat_mass_value(V, 0.5, x)
    assert a.value == pytest.approx(b.value, abs=1e-12)


def test_sup_is_attained_at_reported_argmax():
    V = parse_potential("ball:1,1", 1)
    res = q.sup_S(V, 1.0)
    x, y = res.argmax
    assert q.S_value(V, 1.0, x, y).value == pytest.approx(res.value, abs=1e-10)
    # S(0, 0) for the symmetric ball is the global max
    assert res.value >= q.S_value(V, 1.0, [0.0], [0.0]).value - 1e-10
