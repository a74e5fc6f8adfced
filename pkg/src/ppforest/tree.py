"""Projection pursuit classification tree.

Each internal node separates the classes it holds into two super-groups.
A first projection over all classes orders the class means; the largest
gap between consecutive projected means defines the super-groups; a second
projection then separates the two super-groups and a cutoff on it gives the
decision rule. Children recurse on their super-group's original classes, so
a tree over ``G`` classes has exactly ``G - 1`` splits.
"""

from dataclasses import dataclass, field
from typing import List, Union

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted

from ._seeding import as_generator
from ._validation import check_X, check_X_y, resolve_m_vars
from .dataio import column_stats
from .exceptions import DegenerateNodeError
from .pp_index import IndexConfig, scatter_codes
from .pp_optimize import optimize_scatter

LESS = "less"
GREATER_EQ = "greater_eq"
N_RULES = 8


@dataclass
class Leaf:
    label: int
    classes: tuple
    forced: bool = False


@dataclass
class Split:
    """Internal node.

    ``coef`` holds the unit projection over the sampled variables ``cols``.
    Rows with ``coef @ x[cols]`` on the ``left_sign`` side of ``cutoff`` go
    to ``left`` (the lower-mean super-group ``g1``).
    """

    cols: np.ndarray
    coef: np.ndarray
    cutoff: float
    rule: int
    left_sign: str
    projected_mean_g1: float
    index_first: float
    index_second: float
    classes: tuple
    g1: tuple
    g2: tuple
    left: int = -1
    right: int = -1

    def alpha(self, n_features):
        a = np.zeros(n_features)
        a[self.cols] = self.coef
        return a

    def goes_left(self, z):
        ge = z >= self.cutoff
        return ge if self.left_sign == GREATER_EQ else ~ge


Node = Union[Leaf, Split]


@dataclass
class PPTree:
    """A fitted tree; node 0 is the root."""

    nodes: List[Node]
    n_features: int
    n_classes: int
    column_draws: list = field(default_factory=list)

    @property
    def splits(self):
        return [nd for nd in self.nodes if isinstance(nd, Split)]

    @property
    def n_internal(self):
        return len(self.splits)

    @property
    def leaf_ids(self):
        return [i for i, nd in enumerate(self.nodes) if isinstance(nd, Leaf)]

    @property
    def depth(self):
        def d(i):
            nd = self.nodes[i]
            return 0 if isinstance(nd, Leaf) else 1 + max(d(nd.left), d(nd.right))
        return d(0)

    def apply(self, X):
        """Index of the leaf each row of (standardized) ``X`` lands in."""
        X = np.asarray(X, dtype=float)
        out = np.empty(len(X), dtype=np.intp)
        stack = [(0, np.arange(len(X)))]
        while stack:
            nid, idx = stack.pop()
            nd = self.nodes[nid]
            if isinstance(nd, Leaf):
                out[idx] = nid
                continue
            if len(idx) == 0:
                continue
            left = nd.goes_left(X[idx][:, nd.cols] @ nd.coef)
            stack.append((nd.right, idx[~left]))
            stack.append((nd.left, idx[left]))
        return out

    def predict(self, X):
        labels = np.array([nd.label if isinstance(nd, Leaf) else -1 for nd in self.nodes])
        return labels[self.apply(X)]


def assign_super_groups(projected_means):
    """Split classes at the largest gap between sorted projected means.

    Returns two sorted arrays of positions into ``projected_means``: the
    lower-mean side ``g1`` and the upper side ``g2``. Equal gaps resolve to
    the lowest boundary.
    """
    z = np.asarray(projected_means, dtype=float)
    if len(z) < 2:
        raise ValueError("need at least two class means")
    order = np.argsort(z, kind="stable")
    b = int(np.argmax(np.diff(z[order])))
    return np.sort(order[: b + 1]), np.sort(order[b + 1:])


def _sd(v):
    return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0


def _iqr(v):
    q75, q25 = np.percentile(v, [75, 25])
    return float(q75 - q25)


def compute_cutoff(z1, z2, rule=1):
    """Split point between projected groups ``z1`` and ``z2``.

    Rules 1-4 use group means, rules 5-8 the same formulas with medians in
    place of means and IQR in place of standard deviation:

    1/5  unweighted midpoint
    2/6  centres weighted by the other group's spread
    3/7  centres weighted by the other group's standard error
    4/8  centres weighted by the other group's size

    A weighting whose weights are both zero falls back to the midpoint.
    """
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    if len(z1) == 0 or len(z2) == 0:
        raise ValueError("both groups must be non-empty")
    if rule not in range(1, N_RULES + 1):
        raise ValueError(f"rule must be in 1..{N_RULES}, got {rule!r}")
    if rule <= 4:
        c1, c2 = z1.mean(), z2.mean()
        spread = _sd
    else:
        c1, c2 = np.median(z1), np.median(z2)
        spread = _iqr
    n1, n2 = len(z1), len(z2)
    kind = (rule - 1) % 4
    if kind == 0:
        w1 = w2 = 1.0
    elif kind == 1:
        w1, w2 = spread(z2), spread(z1)
    elif kind == 2:
        w1, w2 = spread(z2) / np.sqrt(n2), spread(z1) / np.sqrt(n1)
    else:
        w1, w2 = n2, n1
    if w1 + w2 <= 0.0:
        w1 = w2 = 1.0
    return float((c1 * w1 + c2 * w2) / (w1 + w2))


def _majority(y):
    return int(np.argmax(np.bincount(y)))


def build_tree(X, y, rows=None, *, n_classes=None, m_vars=None, cfg: IndexConfig = None,
               rule=1, seed=0) -> PPTree:
    """Grow an unpruned PPtree on ``X[rows]``.

    ``X`` should already be standardized. Variables are re-sampled at every
    node; both passes at a node use the same sample.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.intp)
    rows = np.arange(len(y)) if rows is None else np.asarray(rows, dtype=np.intp)
    p = X.shape[1]
    n_classes = int(y.max()) + 1 if n_classes is None else n_classes
    m = p if m_vars is None else int(m_vars)
    if not 1 <= m <= p:
        raise ValueError(f"m_vars must be in [1, {p}], got {m}")
    cfg = cfg or IndexConfig()
    rng = as_generator(seed)
    tree = PPTree([], p, n_classes)

    def grow(node_rows):
        nid = len(tree.nodes)
        yn = y[node_rows]
        present = np.flatnonzero(np.bincount(yn, minlength=n_classes))
        if len(present) == 1:
            tree.nodes.append(Leaf(int(present[0]), (int(present[0]),)))
            return nid
        cols = np.sort(rng.choice(p, size=m, replace=False))
        tree.column_draws.append(cols)
        Xn = X[node_rows][:, cols]
        code_of = np.zeros(n_classes, dtype=np.intp)
        code_of[present] = np.arange(len(present))
        try:
            B, W, means = scatter_codes(Xn, code_of[yn], len(present))
            a1, ix1 = optimize_scatter(B, W, cfg, rng)
        except DegenerateNodeError:
            tree.nodes.append(Leaf(_majority(yn), tuple(int(c) for c in present), forced=True))
            return nid
        pos1, pos2 = assign_super_groups(means @ a1)
        g1, g2 = present[pos1], present[pos2]
        is_g1 = np.zeros(n_classes, dtype=bool)
        is_g1[g1] = True
        in1 = is_g1[yn]
        if len(present) == 2:
            a2, ix2 = a1, ix1
        else:
            B2, W2 = scatter_codes(Xn, (~in1).astype(np.intp), 2)[:2]
            a2, ix2 = optimize_scatter(B2, W2, cfg, rng)
        z = Xn @ a2
        c = compute_cutoff(z[in1], z[~in1], rule)
        m1 = float(z[in1].mean())
        split = Split(cols=cols, coef=a2, cutoff=c, rule=rule,
                      left_sign=LESS if m1 < c else GREATER_EQ,
                      projected_mean_g1=m1, index_first=float(ix1), index_second=float(ix2),
                      classes=tuple(int(k) for k in present),
                      g1=tuple(int(k) for k in g1), g2=tuple(int(k) for k in g2))
        tree.nodes.append(split)
        split.left = grow(node_rows[in1])
        split.right = grow(node_rows[~in1])
        return nid

    if len(rows) == 0:
        raise ValueError("cannot grow a tree on zero rows")
    grow(rows)
    return tree


class PPTreeClassifier(ClassifierMixin, BaseEstimator):
    """Single projection pursuit tree.

    Parameters
    ----------
    index : {"lda", "pda"}, default="lda"
    lambda_ : float, default=0.1
        PDA shrinkage in [0, 1); ignored for LDA.
    rule : int, default=1
        Cutoff rule, 1..8 (see :func:`compute_cutoff`).
    var_fraction : float or "rf_default", default=1.0
        Share of variables sampled at each node.
    standardize : bool, default=True
        Z-score predictors with training statistics before fitting.
    random_state : int, default=0
    """

    def __init__(self, index="lda", lambda_=0.1, rule=1, var_fraction=1.0,
                 standardize=True, random_state=0):
        self.index = index
        self.lambda_ = lambda_
        self.rule = rule
        self.var_fraction = var_fraction
        self.standardize = standardize
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        check_classification_targets(y)
        self.classes_, yc = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least 2 classes")
        self.n_features_in_ = X.shape[1]
        self.stats_ = column_stats(X) if self.standardize else None
        Z = self._transform(X)
        self.tree_ = build_tree(Z, yc, n_classes=len(self.classes_),
                                m_vars=resolve_m_vars(self.var_fraction, X.shape[1]),
                                cfg=make_index_config(self.index, self.lambda_),
                                rule=self.rule, seed=self.random_state)
        return self

    def _transform(self, X):
        return X if self.stats_ is None else self.stats_.apply(X)

    def predict(self, X):
        check_is_fitted(self, "tree_")
        X = check_X(X, self.n_features_in_)
        return self.classes_[self.tree_.predict(self._transform(X))]


def make_index_config(index, lambda_):
    index = str(index).lower()
    return IndexConfig(index, lambda_ if index == "pda" else None)
