import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import gaussian_blobs
from ppforest.pp_index import IndexConfig
from ppforest.tree import (GREATER_EQ, LESS, Leaf, PPTreeClassifier, Split, assign_super_groups,
                           build_tree, compute_cutoff)


def test_super_groups_largest_gap():
    g1, g2 = assign_super_groups([1.0, 5.0, 1.1])
    assert g1.tolist() == [0, 2] and g2.tolist() == [1]


def test_super_groups_two_classes_forced():
    g1, g2 = assign_super_groups([3.0, -1.0])
    assert g1.tolist() == [1] and g2.tolist() == [0]


def test_super_groups_tie_goes_to_lowest_boundary():
    g1, g2 = assign_super_groups([0.0, 2.0, 4.0])
    assert g1.tolist() == [0] and g2.tolist() == [1, 2]


def test_cutoff_examples():
    assert compute_cutoff([0, 0], [10, 12], 1) == pytest.approx(5.5)
    z1 = np.array([-1.0, 0.0, 1.0])           # sd 1
    z2 = np.array([1.0, 4.0, 7.0])            # sd 3
    assert compute_cutoff(z1, z2, 2) == pytest.approx(1.0)
    # rule 3 uses standard errors; equal group sizes make it rule 2
    assert compute_cutoff(z1, z2, 3) == pytest.approx(1.0)


def test_cutoff_size_weighting():
    # rule 4 weights each centre by the other group's size
    assert compute_cutoff([0.0], [4.0, 4.0, 4.0], 4) == pytest.approx((0 * 3 + 4 * 1) / 4)


def test_cutoff_median_rules():
    z1 = [0.0, 0.0, 0.0, 100.0]
    z2 = [10.0, 10.0, 10.0, 10.0]
    assert compute_cutoff(z1, z2, 5) == pytest.approx(5.0)
    # zero spread in both groups falls back to the midpoint
    assert compute_cutoff([1.0, 1.0], [3.0, 3.0], 6) == pytest.approx(2.0)


def test_cutoff_rejects_bad_rule_and_empty():
    with pytest.raises(ValueError):
        compute_cutoff([0], [1], 9)
    with pytest.raises(ValueError):
        compute_cutoff([], [1], 1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=10),
       st.lists(st.floats(-50, 50), min_size=2, max_size=10), st.integers(1, 8))
def test_cutoff_between_centres(z1, z2, rule):
    c = compute_cutoff(z1, z2, rule)
    centre = np.mean if rule <= 4 else np.median
    lo, hi = sorted([centre(z1), centre(z2)])
    assert lo - 1e-9 <= c <= hi + 1e-9


@pytest.mark.parametrize("rule", [1, 2, 3, 4])
def test_symmetric_groups_give_midpoint(rule):
    assert compute_cutoff([0.0, 2.0], [8.0, 10.0], rule) == pytest.approx(5.0)


def one_d():
    return np.array([[0.0], [2.0], [4.0], [6.0]]), np.array([0, 0, 1, 1])


def test_one_dimensional_tree():
    X, y = one_d()
    t = build_tree(X, y, n_classes=2, m_vars=1, cfg=IndexConfig())
    assert t.n_internal == 1 and len(t.leaf_ids) == 2
    root = t.nodes[0]
    assert root.coef.tolist() == [1.0]
    assert root.cutoff == pytest.approx(3.0)
    assert root.left_sign == LESS
    assert t.predict(np.array([[2.9], [3.1]])).tolist() == [0, 1]


def test_tie_at_cutoff_goes_to_greater_eq_side():
    X, y = one_d()
    t = build_tree(X, y, n_classes=2, m_vars=1, cfg=IndexConfig())
    assert t.predict(np.array([[3.0]])).tolist() == [1]
    s = Split(np.array([0]), np.array([1.0]), 3.0, 1, GREATER_EQ, 5.0, 1, 1, (0, 1), (1,), (0,))
    assert s.goes_left(np.array([3.0, 2.0])).tolist() == [True, False]


def test_well_separated_three_classes():
    X, y = gaussian_blobs(20, [[0, 0, 0], [10, 0, 0], [0, 10, 0]], seed=1)
    t = build_tree(X, y, n_classes=3, m_vars=3, cfg=IndexConfig())
    assert t.n_internal == 2
    assert t.depth <= 2
    np.testing.assert_array_equal(t.predict(X), y)


def test_single_class_rows_make_one_leaf():
    X, y = gaussian_blobs(5, [[0, 0], [5, 5]])
    t = build_tree(X, y, rows=np.arange(5), n_classes=2, m_vars=2)
    assert len(t.nodes) == 1 and isinstance(t.nodes[0], Leaf)
    assert t.nodes[0].label == 0


def test_degenerate_node_becomes_forced_leaf():
    X = np.zeros((6, 2))
    y = np.array([1, 1, 0, 0, 1, 0])
    t = build_tree(X, y, n_classes=2, m_vars=2)
    leaf = t.nodes[0]
    assert isinstance(leaf, Leaf) and leaf.forced
    assert leaf.label == 0  # 3-3 tie resolves to the lowest id


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(1, 4), st.integers(0, 10**6), st.integers(1, 8))
def test_tree_structure_invariants(G, p, seed, rule):
    rng = np.random.default_rng(seed)
    n = 6
    X = rng.standard_normal((G * n, p)) + np.repeat(rng.standard_normal((G, p)) * 3, n, axis=0)
    y = np.repeat(np.arange(G), n)
    t = build_tree(X, y, n_classes=G, m_vars=int(rng.integers(1, p + 1)), rule=rule, seed=seed)
    forced = [nd for nd in t.nodes if isinstance(nd, Leaf) and nd.forced]
    assert t.n_internal <= G - 1
    assert t.depth <= G - 1
    if not forced:
        assert t.n_internal == G - 1
        assert sorted(t.nodes[i].label for i in t.leaf_ids) == list(range(G))
        for i in t.leaf_ids:
            assert len(t.nodes[i].classes) == 1
    for s in t.splits:
        assert s.goes_left(np.array([s.projected_mean_g1]))[0]
        assert set(s.g1) | set(s.g2) == set(s.classes)
        assert not set(s.g1) & set(s.g2)


def test_orientation_of_g1():
    X, y = gaussian_blobs(15, [[0, 0], [6, 1], [1, 7], [8, 8]], seed=4)
    t = build_tree(X, y, n_classes=4, m_vars=2)
    for s in t.splits:
        assert s.goes_left(np.array([s.projected_mean_g1]))[0]


def test_determinism():
    X, y = gaussian_blobs(10, [[0, 0, 0], [2, 0, 1], [0, 3, 0]], seed=2)
    a = build_tree(X, y, n_classes=3, m_vars=2, seed=9)
    b = build_tree(X, y, n_classes=3, m_vars=2, seed=9)
    assert [(s.cols.tolist(), s.coef.tobytes(), s.cutoff) for s in a.splits] == \
           [(s.cols.tolist(), s.coef.tobytes(), s.cutoff) for s in b.splits]


def test_classifier_wrapper():
    X, y = gaussian_blobs(15, [[0, 0], [8, 0]], seed=3)
    labels = np.where(y == 0, "neg", "pos")
    clf = PPTreeClassifier().fit(X * 100 + 7, labels)
    assert (clf.predict(X * 100 + 7) == labels).all()
    assert clf.get_params()["rule"] == 1
    with pytest.raises(ValueError):
        clf.predict(np.zeros((2, 3)))
