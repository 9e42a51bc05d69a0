import math

import numpy as np
import pytest

from gsek import quantities as q
from gsek.bridge_mc import BLOCK, BridgeConfig, S_bridge_estimate, block_rng, feynman_kac_ratio, sample_bridge
from gsek.errors import UnboundedPotentialError, UsageError
from gsek.potentials import BallIndicator, Constant, Scale


def test_endpoints_are_exact():
    P = sample_bridge(1.0, [0.3, -1.0], [2.0, 0.5], steps=16, rng=block_rng(1, 0), paths=5)
    assert P.shape == (5, 17, 2)
    assert np.array_equal(P[:, 0], np.tile([0.3, -1.0], (5, 1)))
    assert np.array_equal(P[:, -1], np.tile([2.0, 0.5], (5, 1)))


def test_marginal_mean_and_variance():
    # generator Delta: Var B(s) = 2 s (t - s) / t per coordinate
    t, steps, n = 1.0, 8, 100_000
    x, y = np.array([1.0]), np.array([-1.0])
    P = sample_bridge(t, x, y, steps=steps, rng=block_rng(7, 0), paths=n)
    for i in (2, 4, 6):
        s = t * i / steps
        col = P[:, i, 0]
        var = 2 * s * (t - s) / t
        mean = x[0] + (s / t) * (y[0] - x[0])
        assert abs(col.mean() - mean) <= 4 * math.sqrt(var / n)
        # stderr of the sample variance of a Gaussian is var * sqrt(2/(n-1))
        assert abs(col.var(ddof=1) - var) <= 4 * var * math.sqrt(2 / (n - 1))


def test_reversal_symmetry_in_law():
    t, steps, n = 1.0, 8, 60_000
    a = sample_bridge(t, [0.0], [1.0], steps=steps, rng=block_rng(3, 0), paths=n)[:, 2, 0]
    b = sample_bridge(t, [1.0], [0.0], steps=steps, rng=block_rng(4, 0), paths=n)[:, 6, 0]
    se = math.sqrt(a.var() / n + b.var() / n)
    assert abs(a.mean() - b.mean()) <= 4 * se
    assert abs(a.var() - b.var()) <= 4 * a.var() * math.sqrt(4 / n)


def test_deterministic_across_worker_counts():
    V = BallIndicator([0.0], 1.0, 1.0, 1)
    cfg = BridgeConfig(paths=3 * BLOCK + 17, steps=64, seed=11)
    a = S_bridge_estimate(V, 1.0, [0.0], [0.2], cfg, jobs=1)
    b = S_bridge_estimate(V, 1.0, [0.0], [0.2], cfg, jobs=2)
    assert a == b
    c = S_bridge_estimate(V, 1.0, [0.0], [0.2], cfg.replace(seed=12), jobs=1)
    assert c.mean != a.mean


def test_constant_potential():
    cfg = BridgeConfig(paths=2000, steps=32)
    s = S_bridge_estimate(Constant(1.0, 2), 0.7, [0, 0], [1, 1], cfg)
    assert s.mean == pytest.approx(0.7, abs=1e-12)
    fk = feynman_kac_ratio(Constant(-0.5, 1), 2.0, [0.0], [0.3], cfg)
    assert fk.mean == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_S_matches_quadrature():
    V = BallIndicator([0.0], 1.0, 1.0, 1)
    mc = S_bridge_estimate(V, 1.0, [0.0], [0.5], BridgeConfig(paths=40_000, steps=512, seed=2))
    e = q.S_value(V, 1.0, [0.0], [0.5])
    assert abs(mc.mean - e.value) <= 3 * (mc.stderr + e.err_bound)


def test_feynman_kac_negative_ball_bounds():
    ball = BallIndicator([0.0], 1.0, 1.0, 1)
    fk = feynman_kac_ratio(Scale(-1.0, ball), 1.0, [0.0], [0.0], BridgeConfig(paths=40_000, steps=256, seed=5))
    S = q.S_value(ball, 1.0, [0.0], [0.0]).value
    assert fk.mean >= math.exp(-S) - 3 * fk.stderr
    assert fk.mean <= 1.0 + 3 * fk.stderr


def test_config_and_domain_errors():
    with pytest.raises(UsageError):
        BridgeConfig(paths=0)
    with pytest.raises(UsageError):
        BridgeConfig(steps=1)
    with pytest.raises(UnboundedPotentialError):
        feynman_kac_ratio(Constant(800.0, 1), 1.0, [0.0], [0.0])
