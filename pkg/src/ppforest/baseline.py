"""Axis-aligned random forest (Gini CART trees) used as a comparison baseline.

Trees are grown without pruning on unstratified bootstrap samples with a
fresh random subset of ``max_features`` columns at each node, the way a
classic random forest does it. Split search is delegated to scikit-learn's
CART implementation; bootstrap, seeding and out-of-bag bookkeeping follow
the same conventions as :class:`ppforest.forest.PPForestClassifier`.
"""

import math

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.tree import DecisionTreeClassifier
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted

from ._seeding import derive_seed
from ._validation import check_X, check_X_y
from .forest import vote_counts


def _fit_tree(seed, X, y, n_classes, max_features, min_leaf, bootstrap):
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(y), size=len(y)) if bootstrap else np.arange(len(y))
    tree = DecisionTreeClassifier(criterion="gini", max_features=max_features,
                                  min_samples_leaf=min_leaf,
                                  random_state=int(rng.integers(2 ** 31 - 1)))
    tree.fit(X[idx], y[idx])
    oob = np.ones(len(y), dtype=bool)
    oob[idx] = False
    return tree, oob


class AxisForestClassifier(ClassifierMixin, BaseEstimator):
    """Classic random forest of Gini CART trees.

    Parameters
    ----------
    n_estimators : int, default=500
    max_features : int, float or "sqrt", default="sqrt"
        Columns tried per node; ``"sqrt"`` is ``floor(sqrt(p))``, a float is a
        share of ``p``, ``None`` means all columns.
    min_samples_leaf : int, default=1
    bootstrap : bool, default=True
    random_state : int, default=0
    n_jobs : int, default=1
    """

    def __init__(self, n_estimators=500, max_features="sqrt", min_samples_leaf=1,
                 bootstrap=True, random_state=0, n_jobs=1):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _n_features(self, p):
        mf = self.max_features
        if mf == "sqrt":
            return max(1, int(math.floor(math.sqrt(p))))
        if mf is None:
            return p
        if isinstance(mf, float):
            return min(p, max(1, int(round(mf * p))))
        return min(p, max(1, int(mf)))

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        check_classification_targets(y)
        self.classes_, yc = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        G = len(self.classes_)
        mf = self._n_features(X.shape[1])
        seeds = [derive_seed(self.random_state, k) for k in range(int(self.n_estimators))]
        out = Parallel(n_jobs=self.n_jobs, prefer="threads")(
            delayed(_fit_tree)(s, X, yc, G, mf, self.min_samples_leaf, self.bootstrap)
            for s in seeds)
        self.estimators_ = [t for t, _ in out]
        self.oob_masks_ = np.array([m for _, m in out])
        preds = self._tree_predictions(X)
        counts = vote_counts(preds, G, self.oob_masks_)
        totals = counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            self.oob_decision_function_ = counts / totals
        seen = totals[:, 0] > 0
        self.oob_error_ = (float(np.mean(np.argmax(counts[seen], axis=1) != yc[seen]))
                           if seen.any() else float("nan"))
        return self

    def _tree_predictions(self, X):
        out = np.empty((len(self.estimators_), len(X)), dtype=np.intp)
        if len(X) == 0:
            return out
        X32 = np.ascontiguousarray(X, dtype=np.float32)
        for k, t in enumerate(self.estimators_):
            # each tree only knows the classes present in its bootstrap sample
            node_class = t.classes_[np.argmax(t.tree_.value[:, 0, :], axis=1)]
            out[k] = node_class[t.tree_.apply(X32)]
        return out

    def tree_predictions(self, X):
        """Class ids predicted by every tree, shape (n_estimators, n_rows)."""
        check_is_fitted(self, "estimators_")
        return self._tree_predictions(check_X(X, self.n_features_in_))

    def predict_proba(self, X):
        return vote_counts(self.tree_predictions(X), len(self.classes_)) / len(self.estimators_)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def fit_axis_forest(d, num_trees=500, m_vars="sqrt", min_leaf=1, seed=0, n_jobs=1):
    """Fit the baseline on a :class:`~ppforest.dataio.Dataset`."""
    return AxisForestClassifier(num_trees, m_vars, min_leaf, random_state=seed,
                                n_jobs=n_jobs).fit(d.X, d.y)


def predict_axis_forest(f, x):
    x = np.asarray(x, dtype=float)
    return f.predict(x.reshape(1, -1))[0] if x.ndim == 1 else f.predict(x)
