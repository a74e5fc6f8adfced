"""Simulation and benchmark harness.

All experiments are pure functions of their master seed: replicate ``r``
draws its data, split and forest seeds from ``derive_seed``, so results do
not depend on how replicates are scheduled.

Result CSV schema (one row per fitted model)::

    method,axis,value,rep,seed,train_error,test_error,oob_error

Summary CSV schema (one row per method and axis value)::

    method,axis,value,reps,mean_test_error,sd_test_error,se_test_error,
    mean_oob_error,se_oob_error
"""

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from joblib import Parallel, delayed

from ._seeding import derive_seed
from .baseline import AxisForestClassifier
from .dataio import Dataset, stratified_split_indices
from .exceptions import PPForestError
from .forest import PPForestClassifier, vote_counts

PPF = "PPF"
RF = "RF"
RESULT_FIELDS = ["method", "axis", "value", "rep", "seed", "train_error", "test_error", "oob_error"]
SUMMARY_FIELDS = ["method", "axis", "value", "reps", "mean_test_error", "sd_test_error",
                  "se_test_error", "mean_oob_error", "se_oob_error"]


class ExperimentError(PPForestError):
    """A replicate failed; ``context`` identifies it for reproduction."""

    code = "E_EXPERIMENT"

    def __init__(self, context, cause):
        self.context = context
        super().__init__(f"{context}: {cause}")


@dataclass(frozen=True)
class TriangleSimConfig:
    """Three elongated Gaussian classes with means on a triangle, rotated.

    Before rotation every class has covariance
    ``noise_sd**2 * diag(1 + correlation, 1 - correlation)``, i.e. a
    bivariate normal with correlation ``correlation`` turned so its long
    axis lies along x. Class means sit on an equilateral triangle with
    circumradius ``class_sep`` (one vertex straight up). The whole sample is
    then rotated by ``angle_deg`` counter-clockwise.
    """

    n_per_class: int = 50
    angle_deg: float = 0.0
    class_sep: float = 1.5
    correlation: float = 0.9
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_per_class < 1:
            raise ValueError("n_per_class must be >= 1")
        if not 0.0 <= self.angle_deg <= 90.0:
            raise ValueError("angle_deg must lie in [0, 90]")
        if not 0.0 <= self.correlation < 1.0:
            raise ValueError("correlation must lie in [0, 1)")
        if self.noise_sd <= 0.0:
            raise ValueError("noise_sd must be positive")


def triangle_means(class_sep):
    ang = np.deg2rad([90.0, 210.0, 330.0])
    return class_sep * np.column_stack([np.cos(ang), np.sin(ang)])


def rotation(angle_deg):
    t = np.deg2rad(angle_deg)
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s], [s, c]])


def gen_triangle(cfg: TriangleSimConfig) -> Dataset:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_per_class
    sd = cfg.noise_sd * np.sqrt([1.0 + cfg.correlation, 1.0 - cfg.correlation])
    y = np.repeat(np.arange(3), n)
    base = triangle_means(cfg.class_sep)[y] + rng.standard_normal((3 * n, 2)) * sd
    X = base @ rotation(cfg.angle_deg).T
    return Dataset(X, y, ("A", "B", "C"), ("X1", "X2"))


@dataclass
class ExperimentResult:
    """Per-replicate records plus helpers to aggregate and write them."""

    records: list = field(default_factory=list)

    def extend(self, rows):
        self.records.extend(rows)

    def values(self, method, value, key="test_error"):
        return np.array([r[key] for r in self.records
                         if r["method"] == method and r["value"] == value], dtype=float)

    def summary(self):
        groups = {}
        for r in self.records:
            groups.setdefault((r["method"], r["axis"], r["value"]), []).append(r)
        out = []
        for (method, axis, value), rows in groups.items():
            te = np.array([r["test_error"] for r in rows], dtype=float)
            oob = np.array([r["oob_error"] for r in rows], dtype=float)
            k = len(rows)
            out.append({
                "method": method, "axis": axis, "value": value, "reps": k,
                "mean_test_error": _nanmean(te), "sd_test_error": _nansd(te),
                "se_test_error": _nansd(te) / math.sqrt(k),
                "mean_oob_error": _nanmean(oob), "se_oob_error": _nansd(oob) / math.sqrt(k),
            })
        return out

    def mean(self, method, value, key="test_error"):
        return _nanmean(self.values(method, value, key))

    def se(self, method, value, key="test_error"):
        v = self.values(method, value, key)
        return _nansd(v) / math.sqrt(len(v))

    def to_csv(self, path):
        _write_csv(path, RESULT_FIELDS, self.records)

    def summary_csv(self, path):
        _write_csv(path, SUMMARY_FIELDS, self.summary())


def _nanmean(v):
    v = v[~np.isnan(v)]
    return float(v.mean()) if len(v) else float("nan")


def _nansd(v):
    v = v[~np.isnan(v)]
    return float(v.std(ddof=1)) if len(v) > 1 else 0.0


def _fmt(x):
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return x


def _write_csv(path, fields, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r[k]) for k in fields})


def _record(method, axis, value, rep, seed, train_error, test_error, oob_error=float("nan")):
    return {"method": method, "axis": axis, "value": value, "rep": rep, "seed": seed,
            "train_error": float(train_error), "test_error": float(test_error),
            "oob_error": float(oob_error)}


def _err(model, X, y):
    return float(np.mean(model.predict(X) != y)) if len(y) else float("nan")


def _fit_pair(X, y, train, test, seed, ppf_params, rf_params, methods, axis, value, rep):
    rows = []
    Xtr, ytr, Xte, yte = X[train], y[train], X[test], y[test]
    if PPF in methods:
        m = PPForestClassifier(random_state=derive_seed(seed, 1), **ppf_params).fit(Xtr, ytr)
        rows.append(_record(PPF, axis, value, rep, seed, _err(m, Xtr, ytr), _err(m, Xte, yte),
                            m.oob_error_))
    if RF in methods:
        m = AxisForestClassifier(random_state=derive_seed(seed, 2), **rf_params).fit(Xtr, ytr)
        rows.append(_record(RF, axis, value, rep, seed, _err(m, Xtr, ytr), _err(m, Xte, yte),
                            m.oob_error_))
    return rows


def _run_jobs(jobs, n_jobs):
    out = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(_guard)(ctx, fn, args)
                                                    for ctx, fn, args in jobs)
    result = ExperimentResult()
    for rows in out:
        result.extend(rows)
    return result


def _guard(ctx, fn, args):
    try:
        return fn(*args)
    except Exception as exc:
        raise ExperimentError(ctx, exc) from exc


def _angle_job(angle, rep, data_seed, sim, train_fraction, ppf_params, rf_params, methods):
    d = gen_triangle(TriangleSimConfig(angle_deg=angle, seed=data_seed, **sim))
    rep_seed = derive_seed(data_seed, 7)
    train, test = stratified_split_indices(d.y, d.n_classes, train_fraction, rep_seed)
    return _fit_pair(d.X, d.y, train, test, rep_seed, ppf_params, rf_params, methods,
                     "angle", angle, rep)


# With two predictors the usual sqrt(p) rule samples a single column per
# node, which reduces every projection to an axis-aligned split.
SIM_PPF_DEFAULTS = {"var_fraction": 1.0}


def run_angle_sweep(angles: Sequence[float], reps: int, seed=0, ppf_params=None, rf_params=None,
                    sim=None, train_fraction=2 / 3, methods=(PPF, RF), n_jobs=1):
    """Test error of PPF and the baseline on rotated-triangle data.

    Replicate ``r`` uses the same underlying draw at every angle, so angles
    differ only by the rotation. ``ppf_params`` is layered over
    ``SIM_PPF_DEFAULTS``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    sim = dict(sim or {})
    jobs = []
    for angle in angles:
        for r in range(reps):
            data_seed = derive_seed(seed, r)
            jobs.append(((("angle", angle), ("rep", r), ("seed", data_seed)), _angle_job,
                         (float(angle), r, data_seed, sim, train_fraction,
                          {**SIM_PPF_DEFAULTS, **(ppf_params or {})},
                          dict(rf_params or {}), methods)))
    return _run_jobs(jobs, n_jobs)


def _bench_job(d, rep, rep_seed, var_fractions, train_fraction, ppf_params, rf_params, methods):
    train, test = stratified_split_indices(d.y, d.n_classes, train_fraction, rep_seed)
    rows = []
    for vf in var_fractions:
        rows += _fit_pair(d.X, d.y, train, test, rep_seed, dict(ppf_params, var_fraction=vf), {},
                          [PPF] if PPF in methods else [], "var_fraction", str(vf), rep)
    if RF in methods:
        rows += _fit_pair(d.X, d.y, train, test, rep_seed, {}, rf_params, [RF],
                          "var_fraction", "", rep)
    return rows


DEFAULT_FRACTIONS = (0.6, 0.9, "rf_default")


def run_benchmark(d: Dataset, reps: int, seed=0, var_fractions=DEFAULT_FRACTIONS, ppf_params=None,
                  rf_params=None, train_fraction=2 / 3, methods=(PPF, RF), n_jobs=1):
    """Repeated stratified train/test splits, PPF at several var fractions plus the baseline."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    jobs = []
    for r in range(reps):
        s = derive_seed(seed, r)
        jobs.append(((("rep", r), ("seed", s)), _bench_job,
                     (d, r, s, tuple(var_fractions), train_fraction, dict(ppf_params or {}),
                      dict(rf_params or {}), methods)))
    return _run_jobs(jobs, n_jobs)


def best_ppf(result: ExperimentResult):
    """``(var_fraction, mean_test_error)`` of the best PPF setting."""
    rows = [s for s in result.summary() if s["method"] == PPF]
    best = min(rows, key=lambda s: s["mean_test_error"])
    return best["value"], best["mean_test_error"]


def oob_error_curve(tree_preds, oob_masks, y, n_classes, counts):
    """OOB error using only the first ``c`` trees, for each ``c`` in ``counts``."""
    out = []
    for c in counts:
        votes = vote_counts(tree_preds[:c], n_classes, oob_masks[:c])
        seen = votes.sum(axis=1) > 0
        out.append(float(np.mean(np.argmax(votes[seen], axis=1) != y[seen])) if seen.any()
                   else float("nan"))
    return out


def _tree_count_job(d, rep, rep_seed, counts, ppf_params, rf_params, methods):
    rows = []
    big = max(counts)
    for method in methods:
        if method == PPF:
            m = PPForestClassifier(n_estimators=big, random_state=derive_seed(rep_seed, 1),
                                   **ppf_params).fit(d.X, d.y)
            preds = m.tree_predictions(d.X)
        else:
            m = AxisForestClassifier(n_estimators=big, random_state=derive_seed(rep_seed, 2),
                                     **rf_params).fit(d.X, d.y)
            preds = m.tree_predictions(d.X)
        yc = np.searchsorted(m.classes_, d.y)
        curve = oob_error_curve(preds, m.oob_masks_, yc, len(m.classes_), counts)
        for c, e in zip(counts, curve):
            rows.append(_record(method, "num_trees", int(c), rep, rep_seed, float("nan"),
                                float("nan"), e))
    return rows


def run_tree_count_sweep(d: Dataset, counts: Sequence[int], reps: int, seed=0, ppf_params=None,
                         rf_params=None, methods=(PPF, RF), n_jobs=1):
    """OOB error against number of trees.

    Each replicate fits one forest with ``max(counts)`` trees; smaller
    counts use its leading trees, which are exactly the forest that would be
    fitted with that many trees.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    counts = sorted(int(c) for c in counts)
    if counts[0] < 1:
        raise ValueError("tree counts must be >= 1")
    jobs = [((("rep", r), ("seed", derive_seed(seed, r))), _tree_count_job,
             (d, r, derive_seed(seed, r), counts, dict(ppf_params or {}), dict(rf_params or {}),
              methods)) for r in range(reps)]
    return _run_jobs(jobs, n_jobs)


def run_var_fraction_sweep(d: Dataset, fractions: Sequence, reps: int, seed=0, ppf_params=None,
                           train_fraction=2 / 3, n_jobs=1):
    """PPF test error against the share of variables sampled per node."""
    return run_benchmark(d, reps, seed, fractions, ppf_params, None, train_fraction,
                         methods=(PPF,), n_jobs=n_jobs)


def rasterize_boundary(predict: Callable, bounds, resolution=100):
    """Predicted class over a ``resolution x resolution`` grid of cell centres.

    ``predict`` is a fitted estimator or a callable on an (n, 2) array.
    ``bounds`` is ``(xmin, xmax, ymin, ymax)``. Returns ``(xs, ys, grid)``
    with ``grid[i, j]`` the class at ``(xs[j], ys[i])``.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if hasattr(predict, "predict"):
        if getattr(predict, "n_features_in_", 2) != 2:
            raise ValueError("boundary rasters need a model fitted on 2-D data")
        predict = predict.predict
    xmin, xmax, ymin, ymax = bounds
    xs = xmin + (np.arange(resolution) + 0.5) * (xmax - xmin) / resolution
    ys = ymin + (np.arange(resolution) + 0.5) * (ymax - ymin) / resolution
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    grid = np.asarray(predict(pts)).reshape(resolution, resolution)
    return xs, ys, grid


def write_raster_csv(path, xs, ys, grid, labels=None):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["x", "y", "class"])
        for i, yv in enumerate(ys):
            for j, xv in enumerate(xs):
                c = grid[i, j]
                w.writerow([repr(float(xv)), repr(float(yv)), labels[c] if labels is not None else c])
