"""Projection pursuit random forest."""

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted

from ._seeding import as_generator, derive_seed
from ._validation import check_X, check_X_y, normalize_var_fraction, resolve_m_vars
from .dataio import BootstrapSample, Dataset, column_stats, stratified_bootstrap
from .exceptions import PPForestError, TreeFitError
from .tree import PPTree, build_tree, make_index_config


@dataclass(frozen=True)
class ForestConfig:
    """Training settings; mirrors the estimator's constructor parameters."""

    num_trees: int = 500
    var_fraction: Union[float, str] = "rf_default"
    index: str = "lda"
    lambda_: float = 0.1
    rule: int = 1
    seed: int = 0

    def __post_init__(self):
        if int(self.num_trees) < 1:
            raise ValueError("num_trees must be >= 1")
        object.__setattr__(self, "var_fraction", normalize_var_fraction(self.var_fraction))
        make_index_config(self.index, self.lambda_)
        if self.rule not in range(1, 9):
            raise ValueError("rule must be in 1..8")

    def estimator(self, n_jobs=1):
        return PPForestClassifier(n_estimators=self.num_trees, var_fraction=self.var_fraction,
                                  index=self.index, lambda_=self.lambda_, rule=self.rule,
                                  random_state=self.seed, n_jobs=n_jobs)


@dataclass
class TreeRandomness:
    """Everything random about one tree: its seed, bootstrap and per-node variable draws."""

    tree_seed: int
    bootstrap: BootstrapSample
    node_column_draws: list = field(default_factory=list)


def _fit_one(k, seed, Z, y, n_classes, m, cfg, rule):
    try:
        rng = as_generator(seed)
        bs = stratified_bootstrap(y, rng, n_classes)
        tree = build_tree(Z, y, bs.indices, n_classes=n_classes, m_vars=m, cfg=cfg,
                          rule=rule, seed=rng)
    except PPForestError as exc:
        raise TreeFitError(k, exc) from exc
    return tree, TreeRandomness(seed, bs, tree.column_draws)


def vote_counts(predictions, n_classes, mask=None):
    """Per-row class vote counts from a (n_trees, n_rows) prediction matrix."""
    n_trees, n = predictions.shape
    counts = np.zeros((n, n_classes))
    rows = np.broadcast_to(np.arange(n), predictions.shape)
    if mask is None:
        np.add.at(counts, (rows.ravel(), predictions.ravel()), 1.0)
    else:
        np.add.at(counts, (rows[mask], predictions[mask]), 1.0)
    return counts


class PPForestClassifier(ClassifierMixin, BaseEstimator):
    """Random forest of projection pursuit trees.

    Each tree is grown on a stratified bootstrap sample; at every node a
    random subset of variables is projected onto the direction that
    maximizes the LDA or PDA index. Prediction is an unweighted majority
    vote with ties going to the lowest class.

    Parameters
    ----------
    n_estimators : int, default=500
    var_fraction : float or "rf_default", default="rf_default"
        Share of variables sampled per node; ``"rf_default"`` uses
        ``round(sqrt(p))`` variables.
    index : {"lda", "pda"}, default="lda"
    lambda_ : float, default=0.1
        PDA shrinkage in [0, 1); ignored for LDA.
    rule : int, default=1
        Cutoff rule 1..8.
    standardize : bool, default=True
    random_state : int, default=0
        Master seed. Tree ``k`` uses ``derive_seed(random_state, k)``, so the
        fitted model does not depend on ``n_jobs``.
    n_jobs : int, default=1
        Worker threads used for fitting.

    Attributes
    ----------
    trees_ : list of PPTree
    randomness_ : list of TreeRandomness
    oob_masks_ : ndarray of shape (n_estimators, n_samples)
    tree_oob_accuracy_ : ndarray of shape (n_estimators,)
        Accuracy of each tree on its own out-of-bag rows (0 if it has none).
    oob_decision_function_ : ndarray of shape (n_samples, n_classes)
        Out-of-bag vote proportions; NaN rows were never out of bag.
    oob_error_ : float
    """

    def __init__(self, n_estimators=500, var_fraction="rf_default", index="lda", lambda_=0.1,
                 rule=1, standardize=True, random_state=0, n_jobs=1):
        self.n_estimators = n_estimators
        self.var_fraction = var_fraction
        self.index = index
        self.lambda_ = lambda_
        self.rule = rule
        self.standardize = standardize
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        check_classification_targets(y)
        if int(self.n_estimators) < 1:
            raise ValueError("n_estimators must be >= 1")
        self.classes_, yc = np.unique(y, return_inverse=True)
        G = len(self.classes_)
        if G < 2:
            raise ValueError("need at least 2 classes")
        self.n_features_in_ = X.shape[1]
        self.stats_ = column_stats(X) if self.standardize else None
        Z = self.transform(X)
        self.m_vars_ = resolve_m_vars(self.var_fraction, X.shape[1])
        cfg = make_index_config(self.index, self.lambda_)
        seeds = [derive_seed(self.random_state, k) for k in range(int(self.n_estimators))]
        results = Parallel(n_jobs=self.n_jobs, prefer="threads")(
            delayed(_fit_one)(k, s, Z, yc, G, self.m_vars_, cfg, self.rule)
            for k, s in enumerate(seeds))
        self.trees_ = [t for t, _ in results]
        self.randomness_ = [r for _, r in results]
        self.oob_masks_ = np.array([r.bootstrap.oob_mask for r in self.randomness_])
        self.n_train_ = len(yc)
        self.training_fingerprint_ = Dataset(X, yc, tuple(map(str, self.classes_))).fingerprint()
        self._set_oob(Z, yc)
        return self

    def _set_oob(self, Z, yc):
        preds = self.tree_predictions(Z, standardized=True)
        hit = (preds == yc) & self.oob_masks_
        n_oob = self.oob_masks_.sum(axis=1)
        self.tree_oob_accuracy_ = np.where(n_oob > 0, hit.sum(axis=1) / np.maximum(n_oob, 1), 0.0)
        counts = vote_counts(preds, len(self.classes_), self.oob_masks_)
        totals = counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            self.oob_decision_function_ = counts / totals
        seen = totals[:, 0] > 0
        self.oob_error_ = (float(np.mean(np.argmax(counts[seen], axis=1) != yc[seen]))
                           if seen.any() else float("nan"))

    def transform(self, X):
        """Standardize ``X`` with the training statistics."""
        return X if self.stats_ is None else self.stats_.apply(X)

    def tree_predictions(self, X, standardized=False):
        """Class ids predicted by every tree, shape (n_estimators, n_rows)."""
        check_is_fitted(self, "trees_")
        if not standardized:
            X = self.transform(check_X(X, self.n_features_in_))
        if len(X) == 0:
            return np.empty((len(self.trees_), 0), dtype=np.intp)
        return np.array([t.predict(X) for t in self.trees_])

    def predict_proba(self, X):
        """Share of trees voting for each class."""
        preds = self.tree_predictions(X)
        return vote_counts(preds, len(self.classes_)) / len(self.trees_)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def apply(self, X):
        """Leaf index per tree and row, shape (n_rows, n_estimators)."""
        check_is_fitted(self, "trees_")
        Z = self.transform(check_X(X, self.n_features_in_))
        return np.array([t.apply(Z) for t in self.trees_]).T.reshape(len(Z), len(self.trees_))


def fit_forest(d: Dataset, cfg: ForestConfig = None, n_jobs=1) -> PPForestClassifier:
    """Fit a forest on a :class:`Dataset` (labels are its integer class ids)."""
    cfg = cfg or ForestConfig()
    return cfg.estimator(n_jobs).fit(d.X, d.y)


def predict_forest(model: PPForestClassifier, x):
    """Predicted class id(s) and vote proportions for raw row(s) ``x``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    votes = model.predict_proba(x.reshape(1, -1) if single else x)
    ids = np.argmax(votes, axis=1)
    return (int(ids[0]), votes[0]) if single else (ids, votes)


def oob_predict(model: PPForestClassifier, X):
    """Out-of-bag class ids and vote matrix for the training predictors ``X``.

    Rows that were in bag for every tree get id ``-1`` and a NaN vote row.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[0] != model.oob_masks_.shape[1]:
        raise ValueError("X is not the training data of this model (row count differs)")
    preds = model.tree_predictions(X)
    counts = vote_counts(preds, len(model.classes_), model.oob_masks_)
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        votes = counts / totals
    ids = np.where(totals[:, 0] > 0, np.argmax(counts, axis=1), -1)
    return ids, votes


__all__ = ["ForestConfig", "PPForestClassifier", "PPTree", "TreeRandomness", "fit_forest",
           "oob_predict", "predict_forest", "vote_counts"]
