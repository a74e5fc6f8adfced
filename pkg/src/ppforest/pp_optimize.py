"""Optimal one-dimensional projection for the LDA / PDA index.

The 1-D index ``1 - a'Wa / a'Ta`` (``T = W + B``) is maximized by the
leading eigenvector of the pencil ``(B, T)``. Directions in the null space
of ``T`` score 0 by definition, so the pencil is solved on the range of
``T``; this makes the solution exact even when ``T`` is singular. When ``T``
is badly conditioned a seeded hill climb polishes the best of several
regularized candidates.
"""

from dataclasses import dataclass

import numpy as np

from ._seeding import as_generator
from .exceptions import DegenerateNodeError
from .pp_index import LDA, IndexConfig, _scatter, degenerate_threshold, pda_within

COND_LIMIT = 1e10
FALLBACK_LAMBDA = 0.1
N_RESTARTS = 50


@dataclass(frozen=True)
class ProjectionResult:
    """Unit projection ``alpha`` over variables ``cols`` and its index value."""

    alpha: np.ndarray
    index_value: float
    cols: np.ndarray


def canonical_sign(a):
    """Flip ``a`` so its first non-negligible coefficient is positive."""
    big = np.flatnonzero(np.abs(a) > 1e-12 * np.abs(a).max())
    if len(big) and a[big[0]] < 0:
        return -a
    return a


def leading_direction(B, Wx):
    """Maximizer of ``a'Ba / a'(Wx + B)a`` over the range of ``Wx + B``.

    Returns ``(alpha, condition)`` where ``condition`` is the ratio of the
    extreme eigenvalues of ``Wx + B`` (``inf`` when singular).
    """
    T = Wx + B
    T = 0.5 * (T + T.T)
    evals, evecs = np.linalg.eigh(T)
    top = evals[-1]
    if top <= 0.0:
        raise DegenerateNodeError("total scatter is zero on the sampled variables")
    keep = evals > 1e-12 * top * len(evals)
    cond = top / evals[0] if evals[0] > 0 else np.inf
    U = evecs[:, keep] / np.sqrt(evals[keep])
    Bt = U.T @ B @ U
    _, v = np.linalg.eigh(0.5 * (Bt + Bt.T))
    a = U @ v[:, -1]
    return a / np.linalg.norm(a), cond


def _index_fn(W, B, eps):
    def f(a):
        a = a / np.linalg.norm(a)
        w = a @ W @ a
        t = w + a @ B @ a
        return 0.0 if t <= eps else min(1.0, max(0.0, 1.0 - w / t))
    return f


def _hill_climb(f, start, rng, restarts=N_RESTARTS):
    best = start / np.linalg.norm(start)
    best_val = f(best)
    m = len(best)
    for r in range(restarts):
        step = 0.5 * 0.9 ** r
        cand = best.copy()
        j = rng.integers(m)
        cand[j] += step * rng.standard_normal()
        cand += 0.1 * step * rng.standard_normal(m)
        nrm = np.linalg.norm(cand)
        if nrm == 0.0:
            continue
        cand /= nrm
        val = f(cand)
        if val > best_val:
            best, best_val = cand, val
    return best


def optimize_scatter(B, W, cfg: IndexConfig, seed=0):
    """Best unit projection and its index value for precomputed scatter."""
    Wx = cfg.within(W)
    eps = degenerate_threshold(W, B)
    if np.trace(W) + np.trace(B) <= 0.0:
        raise DegenerateNodeError("total scatter is zero on the sampled variables")
    f = _index_fn(Wx, B, eps)
    if W.shape[0] == 1:
        a = np.ones(1)
        return a, f(a)
    a, cond = leading_direction(B, Wx)
    if cond > COND_LIMIT:
        candidates = [a]
        if cfg.kind == LDA:
            candidates.append(leading_direction(B, pda_within(W, FALLBACK_LAMBDA))[0])
        ridge = 1e-8 * np.trace(Wx) / len(Wx) + 1e-300
        candidates.append(leading_direction(B, Wx + ridge * np.eye(len(Wx)))[0])
        start = max(candidates, key=f)
        a = _hill_climb(f, start, as_generator(seed))
    a = canonical_sign(a)
    return a, f(a)


def optimize_projection(X, y, rows=None, cols=None, cfg: IndexConfig = None, seed=0) -> ProjectionResult:
    """Projection of the ``cols`` variables that best separates the classes in ``rows``.

    Parameters
    ----------
    X : ndarray of shape (n, p)
    y : ndarray of shape (n,)
    rows : index array, optional
        Row multiset (bootstrap multiplicity respected).
    cols : index array, optional
        Variables the projection may use; all by default.
    cfg : IndexConfig, optional
        Defaults to the LDA index.
    seed : int or Generator
        Only consumed when the scatter is ill-conditioned.
    """
    cfg = cfg or IndexConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    cols = np.arange(X.shape[1]) if cols is None else np.asarray(cols)
    Xn = X[rows][:, cols] if rows is not None else X[:, cols]
    yn = y[rows] if rows is not None else y
    if len(np.unique(yn)) < 2:
        raise ValueError("need at least two classes among the rows")
    B, W = _scatter(Xn, yn)[:2]
    a, val = optimize_scatter(B, W, cfg, seed)
    return ProjectionResult(a, val, cols)

