"""Class scatter matrices and the LDA / PDA projection pursuit indices.

Both indices are evaluated for one-dimensional projections only, where the
determinant ratio reduces to a ratio of quadratic forms::

    I(a) = 1 - a'Wa / a'(W + B)a

with ``W`` replaced by ``diag(W) + (1 - lambda) offdiag(W)`` for PDA.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError

LDA = "lda"
PDA = "pda"


@dataclass(frozen=True)
class IndexConfig:
    """Which index to optimize and, for PDA, its shrinkage ``lambda_``."""

    kind: str = LDA
    lambda_: float = None

    def __post_init__(self):
        kind = str(self.kind).lower()
        object.__setattr__(self, "kind", kind)
        if kind == LDA:
            if self.lambda_ is not None:
                raise ValueError("lambda_ only applies to the PDA index")
        elif kind == PDA:
            check_lambda(self.lambda_)
            object.__setattr__(self, "lambda_", float(self.lambda_))
        else:
            raise ValueError(f"unknown index {self.kind!r}; expected 'lda' or 'pda'")

    def within(self, W):
        return W if self.kind == LDA else pda_within(W, self.lambda_)


def check_lambda(lambda_):
    if lambda_ is None or not 0.0 <= float(lambda_) < 1.0:
        raise ValueError(f"PDA lambda must lie in [0, 1), got {lambda_!r}")
    return float(lambda_)


@dataclass(frozen=True)
class ScatterMatrices:
    between: np.ndarray
    within: np.ndarray
    class_means: np.ndarray
    grand_mean: np.ndarray
    counts: np.ndarray
    classes: np.ndarray


def scatter_codes(Xn, codes, n_groups):
    """Between and within scatter for contiguous group codes ``0..n_groups-1``.

    Returns ``(B, W, group_means)``; every group must be non-empty.
    """
    onehot = (codes[:, None] == np.arange(n_groups)).astype(float)
    counts = onehot.sum(axis=0)
    means = (onehot.T @ Xn) / counts[:, None]
    grand = counts @ means / counts.sum()
    Xc = Xn - means[codes]
    D = (means - grand) * np.sqrt(counts)[:, None]
    return D.T @ D, Xc.T @ Xc, means


def _scatter(Xn, yn):
    classes, inv, counts = np.unique(yn, return_inverse=True, return_counts=True)
    B, W, means = scatter_codes(Xn, inv, len(classes))
    return B, W, means, Xn.mean(axis=0), counts, classes


def scatter(X, y, rows=None, cols=None) -> ScatterMatrices:
    """Between- and within-class sums of squares.

    ``rows`` is a multiset of row indices (bootstrap duplicates count with
    their multiplicity); ``cols`` restricts the variables.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if rows is not None:
        X, y = X[rows], y[rows]
    if cols is not None:
        X = X[:, cols]
    if len(y) == 0:
        raise DataError("scatter needs at least one row")
    if len(np.unique(y)) < 2:
        raise DataError("scatter needs at least two classes among the rows")
    return ScatterMatrices(*_scatter(X, y))


def pda_within(W, lambda_):
    """``diag(W) + (1 - lambda_) * offdiag(W)``."""
    d = np.diag(W).copy()
    Wp = (1.0 - lambda_) * W
    np.fill_diagonal(Wp, d)
    return Wp


def degenerate_threshold(W, B):
    """Scale-aware zero test for the index denominator."""
    p = W.shape[0]
    return 1e-12 * (np.trace(W) + np.trace(B)) / p


def _ratio_index(W, B, a, eps):
    a = np.asarray(a, dtype=float)
    nrm = np.linalg.norm(a)
    if nrm == 0.0:
        raise ValueError("projection vector must be non-zero")
    a = a / nrm
    w = a @ W @ a
    t = w + a @ B @ a
    if t <= eps:
        return 0.0
    return float(min(1.0, max(0.0, 1.0 - w / t)))


def lda_index(s: ScatterMatrices, a) -> float:
    """LDA index of projection ``a``; 0 when the total scatter along ``a`` vanishes."""
    return _ratio_index(s.within, s.between, a, degenerate_threshold(s.within, s.between))


def pda_index(s: ScatterMatrices, a, lambda_) -> float:
    """PDA index: the LDA index with off-diagonal within-scatter shrunk by ``1 - lambda_``."""
    check_lambda(lambda_)
    return _ratio_index(pda_within(s.within, lambda_), s.between, a,
                        degenerate_threshold(s.within, s.between))


def index_value(s: ScatterMatrices, a, cfg: IndexConfig) -> float:
    if cfg.kind == LDA:
        return lda_index(s, a)
    return pda_index(s, a, cfg.lambda_)
