import itertools
import warnings

import numpy as np
import pytest

from conftest import gaussian_blobs
from ppforest.diagnostics import (classical_mds, coefficient_importance_tree, diagnose,
                                  forest_importance, oob_error, permuted_importance, proximity,
                                  ternary_coords, vote_matrix)
from ppforest.forest import PPForestClassifier
from ppforest.tree import Leaf, PPTree, Split


def walk(tree, z):
    """Leaf reached by a single standardized row, following the nodes by hand."""
    i = 0
    while not isinstance(tree.nodes[i], Leaf):
        s = tree.nodes[i]
        v = sum(c * z[j] for j, c in zip(s.cols, s.coef))
        left = (v >= s.cutoff) if s.left_sign == "greater_eq" else (v < s.cutoff)
        i = s.left if left else s.right
    return i


def small_forest(seed, n_trees=5, n=20):
    X, y = gaussian_blobs(n // 4 or 1, [[0, 0, 0], [1, 1, 0], [0, 1, 1], [1, 0, 1]], seed=seed)
    return PPForestClassifier(n_estimators=n_trees, random_state=seed).fit(X, y), X, y


@pytest.mark.parametrize("seed", range(5))
def test_proximity_brute_force(seed):
    f, X, _ = small_forest(seed)
    Z = f.transform(X)
    n = len(X)
    brute = np.zeros((n, n))
    for t in f.trees_:
        leaves = [walk(t, Z[i]) for i in range(n)]
        for i, j in itertools.product(range(n), range(n)):
            brute[i, j] += leaves[i] == leaves[j]
    brute /= len(f.trees_)
    P = proximity(f, X)
    np.testing.assert_array_equal(P, brute)
    np.testing.assert_array_equal(P, P.T)
    assert (np.diag(P) == 1).all()


def test_proximity_oob_only():
    f, X, _ = small_forest(0, n_trees=4)
    leaves = f.apply(X)
    P = proximity(f, X, oob_only=True)
    for i, j in itertools.product(range(len(X)), repeat=2):
        if i == j:
            continue
        both = [k for k in range(4) if f.oob_masks_[k, i] and f.oob_masks_[k, j]]
        hits = sum(leaves[i, k] == leaves[j, k] for k in both)
        assert P[i, j] == (hits / len(both) if both else 0.0)


def test_identical_rows_have_proximity_one():
    X, y = gaussian_blobs(10, [[0, 0], [2, 2]], seed=1)
    X[1] = X[0]
    f = PPForestClassifier(n_estimators=20).fit(X, y)
    assert proximity(f, X)[0, 1] == 1.0


@pytest.mark.parametrize("seed", range(5))
def test_coefficient_importance_brute_force(seed):
    f, _, _ = small_forest(seed)
    for t in f.trees_:
        brute = [0.0] * 3
        for nd in t.nodes:
            if isinstance(nd, Split):
                for j, c in zip(nd.cols, nd.coef):
                    brute[j] += abs(c) / len(nd.classes)
        np.testing.assert_array_equal(coefficient_importance_tree(t), brute)


def test_coefficient_importance_single_split():
    s = Split(np.array([0, 1]), np.array([0.6, -0.8]), 0.0, 1, "less", -1.0, 0.5, 0.5,
              (0, 1), (0,), (1,), 1, 2)
    t = PPTree([s, Leaf(0, (0,)), Leaf(1, (1,))], 3, 2)
    np.testing.assert_allclose(coefficient_importance_tree(t), [0.3, 0.4, 0.0])


def test_forest_importance_summaries():
    f, X, y = small_forest(2, n_trees=6)
    per_tree, avg, weighted = forest_importance(f)
    np.testing.assert_allclose(avg, per_tree.mean(axis=0))
    expect = np.zeros(3)
    for acc, t in zip(f.tree_oob_accuracy_, f.trees_):
        contrib = np.zeros(3)
        for s in t.splits:
            contrib[s.cols] += s.index_second * np.abs(s.coef)
        expect += acc * contrib / len(t.splits)
    np.testing.assert_allclose(weighted, expect / 6)
    f.tree_oob_accuracy_ = np.zeros(6)
    assert (forest_importance(f)[2] == 0).all()


def test_identical_trees_average_equals_tree():
    f, _, _ = small_forest(3, n_trees=3)
    f.trees_ = [f.trees_[0]] * 3
    np.testing.assert_allclose(forest_importance(f)[1], coefficient_importance_tree(f.trees_[0]))


def test_crab_importance_uses_several_variables(crab):
    f = PPForestClassifier(n_estimators=100, random_state=0).fit(crab.X, crab.y)
    _, avg, weighted = forest_importance(f)
    assert (avg > 0).sum() >= 2 and (weighted > 0).sum() >= 2


def test_permuted_importance_signal_and_noise():
    rng = np.random.default_rng(0)
    n = 200
    y = np.repeat([0, 1], n // 2)
    X = np.column_stack([y * 4.0 + rng.standard_normal(n), rng.standard_normal(n)])
    f = PPForestClassifier(n_estimators=500, var_fraction=0.5, random_state=1).fit(X, y)
    imp = permuted_importance(f, X, y, seed=0)
    assert imp[0] > imp[1]
    assert abs(imp[1]) <= 0.02


def test_permuted_importance_duplicate_columns():
    rng = np.random.default_rng(1)
    n = 150
    y = np.repeat([0, 1, 2], n // 3)
    base = y * 1.5 + rng.standard_normal(n)
    X = np.column_stack([base, base, rng.standard_normal(n)])
    f = PPForestClassifier(n_estimators=500, var_fraction=1 / 3, random_state=2).fit(X, y)
    imp = permuted_importance(f, X, y)
    assert abs(imp[0] - imp[1]) < 0.05


def test_oob_error_recount_and_votes():
    f, X, y = small_forest(4, n_trees=30, n=40)
    votes = vote_matrix(f, X)
    seen = ~np.isnan(votes).any(axis=1)
    np.testing.assert_allclose(votes[seen].sum(axis=1), 1.0)
    assert oob_error(f, X, y) == np.mean(np.argmax(votes[seen], axis=1) != y[seen])


def test_unanimous_votes_are_one_hot():
    X, y = gaussian_blobs(15, [[0, 0], [30, 30]], sd=0.1, seed=0)
    f = PPForestClassifier(n_estimators=50).fit(X, y)
    votes = vote_matrix(f, X)
    seen = ~np.isnan(votes).any(axis=1)
    assert set(np.unique(votes[seen])) <= {0.0, 1.0}


def test_overlap_point_is_uncertain():
    X, y = gaussian_blobs(60, [[0, 0], [1, 0]], seed=3)
    X = np.vstack([X, [[0.5, 0.0]]])
    y = np.append(y, 0)
    f = PPForestClassifier(n_estimators=500, var_fraction=1.0).fit(X, y)
    assert f.predict_proba(X[-1:]).max() < 0.9


def test_random_labels_oob_error_near_chance():
    # balanced classes, so majority guessing and label-frequency guessing agree
    errs = []
    for seed in range(5):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((150, 3))
        y = rng.permutation(np.repeat([0, 1, 2], 50))
        errs.append(PPForestClassifier(n_estimators=100, random_state=seed).fit(X, y).oob_error_)
    assert abs(np.mean(errs) - 2 / 3) <= 0.05


def test_separable_oob_error():
    X, y = gaussian_blobs(30, [[0, 0, 0], [10, 0, 0], [0, 10, 0]], seed=8)
    f = PPForestClassifier(n_estimators=500).fit(X, y)
    assert oob_error(f, X, y) <= 0.05


def test_ternary_geometry():
    V = ternary_coords(np.eye(3))
    d = [np.linalg.norm(V[i] - V[j]) for i, j in [(0, 1), (0, 2), (1, 2)]]
    assert max(d) - min(d) <= 1e-12
    np.testing.assert_allclose(ternary_coords(np.full((1, 3), 1 / 3)), 0.0, atol=1e-15)
    assert ternary_coords(np.eye(4)).shape == (4, 3)
    with pytest.raises(ValueError):
        ternary_coords(np.eye(2))


def test_mds_examples():
    emb = classical_mds(np.eye(3), 2)
    d = [np.linalg.norm(emb[i] - emb[j]) for i, j in [(0, 1), (0, 2), (1, 2)]]
    assert max(d) - min(d) <= 1e-9
    assert d[0] == pytest.approx(1.0)
    np.testing.assert_allclose(classical_mds(np.ones((4, 4)), 2), 0.0, atol=1e-12)
    with pytest.raises(ValueError):
        classical_mds(np.eye(3), 3)


def test_mds_stress_decreases_with_dims():
    f, X, _ = small_forest(1, n_trees=50, n=40)
    P = proximity(f, X)
    D = 1.0 - P
    stress = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for k in (1, 2, 3):
            E = classical_mds(P, k)
            De = np.linalg.norm(E[:, None] - E[None, :], axis=2)
            stress.append(np.sum((De - D) ** 2))
    assert stress[0] >= stress[1] >= stress[2]


def test_diagnose_report(wine):
    f = PPForestClassifier(n_estimators=50, random_state=0).fit(wine.X, wine.y)
    rep = diagnose(f, wine.X, wine.y)
    assert rep.oob_error == f.oob_error_
    assert rep.imp_pptree_per_tree.shape == (50, 13)
    assert rep.vote_matrix.shape == (178, 3)
    assert rep.proximity.shape == (178, 178)
    assert rep.imp_forest_avg.max() > 0
