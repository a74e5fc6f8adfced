import numpy as np
import pytest

from ppforest.exceptions import DegenerateNodeError
from ppforest.pp_index import IndexConfig, index_value, scatter
from ppforest.pp_optimize import canonical_sign, optimize_projection, optimize_scatter

GRID = np.linspace(0.0, np.pi, 3600, endpoint=False)


def grid_max(s, cfg):
    return max(index_value(s, [np.cos(t), np.sin(t)], cfg) for t in GRID)


def random_problem(seed):
    rng = np.random.default_rng(seed)
    G = int(rng.integers(2, 5))
    n = int(rng.integers(5, 15))
    cov = rng.standard_normal((2, 2))
    X = np.concatenate([rng.standard_normal(2) * 2 + rng.standard_normal((n, 2)) @ cov
                        for _ in range(G)])
    y = np.repeat(np.arange(G), n)
    return X, y


@pytest.mark.parametrize("cfg", [IndexConfig(), IndexConfig("pda", 0.5)])
@pytest.mark.parametrize("seed", range(10))
def test_beats_angle_grid(seed, cfg):
    X, y = random_problem(seed)
    res = optimize_projection(X, y, cfg=cfg)
    assert res.index_value >= grid_max(scatter(X, y), cfg) - 1e-6


def test_axis_example_recovers_first_coordinate():
    # balanced +-1 noise: equal class means and no within-class correlation
    X = np.array([[x, e] for x in (0.0, 2.0, 4.0, 6.0) for e in (1.0, -1.0)])
    y = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    res = optimize_projection(X, y)
    np.testing.assert_allclose(res.alpha, [1.0, 0.0], atol=1e-9)
    assert res.index_value >= grid_max(scatter(X, y), IndexConfig()) - 1e-12


def test_single_column():
    X = np.array([[0.0, 9.0], [2.0, 1.0], [4.0, 3.0], [6.0, 0.0]])
    y = np.array([0, 0, 1, 1])
    res = optimize_projection(X, y, cols=[0])
    assert res.alpha.tolist() == [1.0]
    assert res.index_value == pytest.approx(0.8)


def test_eigen_consistency():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((60, 4)) + np.repeat(rng.standard_normal((3, 4)), 20, axis=0)
    y = np.repeat(np.arange(3), 20)
    s = scatter(X, y)
    a = optimize_projection(X, y).alpha
    v = np.linalg.solve(s.within + s.between, s.between @ a)
    lam = v @ a
    assert np.linalg.norm(v - lam * a) <= 1e-6 * np.linalg.norm(v)


def test_sign_convention_and_unit_norm():
    X, y = random_problem(3)
    a = optimize_projection(X, y).alpha
    assert a[np.flatnonzero(np.abs(a) > 1e-12)[0]] > 0
    assert np.linalg.norm(a) == pytest.approx(1.0)
    np.testing.assert_array_equal(canonical_sign(np.array([0.0, -2.0, 1.0])), [0.0, 2.0, -1.0])


def test_deterministic():
    X, y = random_problem(7)
    a = optimize_projection(X, y, seed=3)
    b = optimize_projection(X, y, seed=3)
    assert a.alpha.tobytes() == b.alpha.tobytes()


def test_singular_scatter_p_greater_than_n():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((6, 20))
    X[3:, 0] += 5
    y = np.array([0, 0, 0, 1, 1, 1])
    for cfg in (IndexConfig(), IndexConfig("pda", 0.1)):
        res = optimize_projection(X, y, cfg=cfg)
        assert np.isfinite(res.alpha).all()
        assert 0.0 <= res.index_value <= 1.0
    # with more variables than rows, LDA separates the training classes perfectly
    assert optimize_projection(X, y).index_value == pytest.approx(1.0, abs=1e-6)


def test_zero_scatter_raises():
    with pytest.raises(DegenerateNodeError):
        optimize_scatter(np.zeros((2, 2)), np.zeros((2, 2)), IndexConfig())
