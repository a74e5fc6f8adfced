"""Forest diagnostics: OOB error, variable importance, votes, proximity."""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import helmert

from ._seeding import as_generator, derive_seed
from .forest import PPForestClassifier, oob_predict
from .tree import PPTree


@dataclass(frozen=True)
class DiagnosticsReport:
    oob_error: float
    imp_permuted: np.ndarray
    imp_pptree_per_tree: np.ndarray
    imp_forest_avg: np.ndarray
    imp_forest_weighted: np.ndarray
    vote_matrix: np.ndarray
    proximity: np.ndarray
    never_oob: np.ndarray


def _codes(model, y):
    """Map labels to class ids; integer ids pass through."""
    y = np.asarray(y)
    pos = np.searchsorted(model.classes_, y)
    pos = np.clip(pos, 0, len(model.classes_) - 1)
    if np.all(model.classes_[pos] == y):
        return pos
    raise ValueError("labels do not match the model's classes")


def oob_error(model: PPForestClassifier, X, y):
    """Share of ever-OOB rows whose OOB majority vote misses the label."""
    ids, _ = oob_predict(model, X)
    seen = ids >= 0
    if not seen.any():
        raise ValueError("no row was ever out of bag; fit more trees")
    return float(np.mean(ids[seen] != _codes(model, y)[seen]))


def vote_matrix(model: PPForestClassifier, X):
    """Out-of-bag vote proportions, shape (n, G); NaN rows were never OOB."""
    return oob_predict(model, X)[1]


def permuted_importance(model: PPForestClassifier, X, y, seed=0):
    """Mean over trees of the OOB accuracy drop after permuting each column.

    Column ``j`` is permuted among tree ``k``'s OOB rows only. Trees without
    OOB rows contribute 0. Columns a tree never uses cannot change its
    predictions, so their contribution is exactly 0 and is not computed.
    """
    Z = model.transform(np.asarray(X, dtype=float))
    yc = _codes(model, y)
    p = Z.shape[1]
    imp = np.zeros(p)
    for k, tree in enumerate(model.trees_):
        oob = np.flatnonzero(model.oob_masks_[k])
        if len(oob) == 0:
            continue
        Zk, yk = Z[oob], yc[oob]
        base = tree.predict(Zk) == yk
        rng = as_generator(derive_seed(seed, k))
        used = np.unique(np.concatenate([s.cols for s in tree.splits])) if tree.splits else []
        for j in range(p):
            perm = rng.permutation(len(oob))
            if j not in used:
                continue
            Zp = Zk.copy()
            Zp[:, j] = Zk[perm, j]
            imp[j] += np.sum(base.astype(float) - (tree.predict(Zp) == yk)) / len(oob)
    return imp / len(model.trees_)


def coefficient_importance_tree(tree: PPTree):
    """Sum over splits of ``|alpha_j|`` divided by the number of classes at the split."""
    imp = np.zeros(tree.n_features)
    for s in tree.splits:
        imp[s.cols] += np.abs(s.coef) / len(s.classes)
    return imp


def forest_importance(model: PPForestClassifier):
    """Per-tree coefficient importance and the two forest-level summaries.

    Returns ``(per_tree, avg, weighted)``. ``weighted`` weights each tree by
    its OOB accuracy and each split by its second-pass index value, and
    divides by the tree's number of splits.
    """
    per_tree = np.array([coefficient_importance_tree(t) for t in model.trees_])
    weighted = np.zeros(model.n_features_in_)
    for acc, t in zip(model.tree_oob_accuracy_, model.trees_):
        splits = t.splits
        if not splits:
            continue
        contrib = np.zeros(model.n_features_in_)
        for s in splits:
            contrib[s.cols] += s.index_second * np.abs(s.coef)
        weighted += acc * contrib / len(splits)
    return per_tree, per_tree.mean(axis=0), weighted / len(model.trees_)


def ternary_coords(votes):
    """Helmert coordinates of vote proportions, shape (n, G-1)."""
    votes = np.asarray(votes, dtype=float)
    G = votes.shape[1]
    if G < 3:
        raise ValueError("ternary coordinates need at least 3 classes")
    return votes @ helmert(G).T


def proximity(model: PPForestClassifier, X, oob_only=False):
    """Share of trees in which each pair of rows ends in the same leaf.

    With ``oob_only`` a pair is only counted over trees where both rows were
    out of bag (pairs never jointly OOB get 0).
    """
    leaves = model.apply(X)
    n = len(leaves)
    hits = np.zeros((n, n))
    both = np.zeros((n, n))
    for k in range(leaves.shape[1]):
        same = leaves[:, k][:, None] == leaves[:, k][None, :]
        if oob_only:
            m = model.oob_masks_[k].astype(float)
            w = np.outer(m, m)
            hits += same * w
            both += w
        else:
            hits += same
    if oob_only:
        with np.errstate(invalid="ignore", divide="ignore"):
            prox = np.where(both > 0, hits / both, 0.0)
    else:
        prox = hits / leaves.shape[1]
    np.fill_diagonal(prox, 1.0)
    return prox


def classical_mds(prox, dims=2):
    """Torgerson scaling of the dissimilarity ``1 - prox``.

    Columns are ordered by decreasing eigenvalue. Negative eigenvalues are
    dropped with a warning; asking for more dimensions than there are
    non-negative eigenvalues raises.
    """
    prox = np.asarray(prox, dtype=float)
    n = len(prox)
    if not 1 <= dims <= n - 1:
        raise ValueError(f"dims must be in [1, {n - 1}]")
    D = 1.0 - prox
    J = np.eye(n) - 1.0 / n
    Bm = -0.5 * J @ (D ** 2) @ J
    evals, evecs = np.linalg.eigh(0.5 * (Bm + Bm.T))
    evals, evecs = evals[::-1], evecs[:, ::-1]
    tol = 1e-10 * max(1.0, abs(evals[0]))
    if np.any(evals < -tol):
        warnings.warn("proximity dissimilarities are not Euclidean; negative eigenvalues dropped")
    usable = int(np.sum(evals >= -tol))
    if dims > usable:
        raise ValueError(f"only {usable} non-negative eigenvalues, cannot embed in {dims} dims")
    lam = np.clip(evals[:dims], 0.0, None)
    out = evecs[:, :dims] * np.sqrt(lam)
    for c in range(dims):
        big = np.flatnonzero(np.abs(out[:, c]) > 1e-12)
        if len(big) and out[big[0], c] < 0:
            out[:, c] = -out[:, c]
    return out


def diagnose(model: PPForestClassifier, X, y, seed=0, oob_proximity=False) -> DiagnosticsReport:
    """Compute every diagnostic for ``model`` on its training data."""
    ids, votes = oob_predict(model, X)
    per_tree, avg, weighted = forest_importance(model)
    return DiagnosticsReport(
        oob_error=oob_error(model, X, y),
        imp_permuted=permuted_importance(model, X, y, seed),
        imp_pptree_per_tree=per_tree,
        imp_forest_avg=avg,
        imp_forest_weighted=weighted,
        vote_matrix=votes,
        proximity=proximity(model, X, oob_only=oob_proximity),
        never_oob=np.flatnonzero(ids < 0),
    )
