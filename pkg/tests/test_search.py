import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsek.errors import UsageError
from gsek.quadrature import Estimate
from gsek.search import Reduction, SearchConfig, grid_points, one_vector_reduction, sup_search


def _plain(lo, hi):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    names = tuple(f"p{i}" for i in range(lo.size))
    return Reduction(names, lo, hi, lambda P: (P.copy(),))


def _search(fn, lo, hi, **cfg):
    red = _plain(lo, hi)
    return sup_search(red, lambda P: np.array([fn(p) for p in P]), fn,
                      lambda p: Estimate(fn(p), 0.0, 1, True), SearchConfig(**cfg))


def test_grid_points_cap_and_odd():
    P = grid_points(np.zeros(4), np.ones(4), 9, 6561)
    assert P.shape == (6561, 4)
    P = grid_points(np.zeros(5), np.ones(5), 9, 6561)
    assert P.shape[0] <= 6561
    n = round(P.shape[0] ** (1 / 5))
    assert n % 2 == 1
    # odd counts keep the box center on the grid
    assert any(np.allclose(p, 0.5) for p in P)


def test_finds_interior_max():
    c = np.array([0.3137, -0.7721])
    res = _search(lambda p: 1.0 - np.sum((p - c) ** 2), [-2, -2], [2, 2])
    assert res.lower_bound_only
    assert res.value == pytest.approx(1.0, abs=1e-7)
    assert np.allclose(res.argmax[0], c, atol=2e-4)


def test_value_is_attained_at_argmax():
    fn = lambda p: np.sin(3 * p[0]) * np.cos(2 * p[1]) + 0.1 * p[0]
    res = _search(fn, [-1, -1], [1, 1])
    assert res.value == pytest.approx(fn(np.asarray(res.argmax[0])), abs=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0.5, 5.0))
def test_sup_is_lower_bound_and_close(c, k):
    fn = lambda p: -k * (p[0] - c) ** 2
    res = _search(fn, [-2.0], [2.0])
    assert res.value <= 1e-15
    assert res.value >= -k * 1e-7


def test_boundary_max():
    res = _search(lambda p: p[0] + 0.5 * p[1], [0, 0], [1, 2])
    assert res.value == pytest.approx(2.0, abs=1e-4)


def test_empty_box():
    with pytest.raises(UsageError):
        _search(lambda p: 0.0, [1.0], [0.0])


def test_constant_reduction_has_no_parameters():
    red = one_vector_reduction(("constant",), 3, -np.ones(3), np.ones(3))
    assert red.p == 0
    res = sup_search(red, lambda P: np.full(len(P), 2.0), lambda p: 2.0, lambda p: Estimate(2.0, 0.0, 1, True))
    assert res.value == 2.0


def test_radial_reduction():
    red = one_vector_reduction(("radial", np.zeros(2)), 2, -np.ones(2) * 3, np.ones(2) * 3)
    assert red.names == ("x_r",)
    (X,) = red.to_vectors(np.array([[1.5]]))
    assert np.allclose(X, [[1.5, 0.0]])
