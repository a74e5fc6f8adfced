"""Dataset container, CSV ingestion, standardization and stratified sampling."""

import csv
import hashlib
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ._seeding import as_generator
from .exceptions import DataError

BUNDLED = ("crab", "glass", "wine")
LABEL_COLUMN = "class"


@dataclass(frozen=True)
class Standardization:
    """Per-column location and scale used to z-score predictors."""

    mean: np.ndarray
    scale: np.ndarray

    def apply(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def invert(self, Z):
        return np.asarray(Z, dtype=float) * self.scale + self.mean


@dataclass(frozen=True)
class Dataset:
    """Predictor matrix with integer class labels.

    Parameters
    ----------
    X : ndarray of shape (n_samples, n_features)
    y : ndarray of shape (n_samples,)
        Class ids in ``0..n_classes-1``.
    class_names : tuple of str
        Name of each class id, in id order.
    feature_names : tuple of str
    standardization : Standardization or None
        Statistics already applied to ``X``, if any.
    """

    X: np.ndarray
    y: np.ndarray
    class_names: tuple
    feature_names: tuple = ()
    standardization: Optional[Standardization] = None
    class_counts: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=np.intp)
        if X.ndim != 2:
            raise DataError(f"X must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DataError("y must be 1-D with one label per row of X")
        G = len(self.class_names)
        if len(y) and (y.min() < 0 or y.max() >= G):
            raise DataError("labels must lie in 0..n_classes-1")
        if not np.all(np.isfinite(X)):
            raise DataError("predictors must be finite")
        names = tuple(self.feature_names) or tuple(f"X{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError("feature_names length does not match X")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "class_counts", np.bincount(y, minlength=G))

    @property
    def n_samples(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    @property
    def n_classes(self):
        return len(self.class_names)

    def subset(self, rows):
        return replace(self, X=self.X[rows], y=self.y[rows])

    def fingerprint(self):
        """SHA-256 over predictor bytes, labels and class names."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.y, dtype="<i8").tobytes())
        h.update("\x1f".join(self.class_names).encode())
        return h.hexdigest()


def _parse_float(cell, line, column):
    try:
        v = float(cell)
    except ValueError:
        raise DataError(f"line {line}: column {column!r} is not numeric: {cell!r}") from None
    if not math.isfinite(v):
        raise DataError(f"line {line}: column {column!r} is not finite: {cell!r}")
    return v


def _resolve_label(header, label_column):
    if isinstance(label_column, int) or (isinstance(label_column, str) and label_column.isdigit()
                                         and label_column not in header):
        idx = int(label_column)
        if not 0 <= idx < len(header):
            raise DataError(f"label column index {idx} out of range")
        return idx
    if label_column not in header:
        raise DataError(f"label column {label_column!r} not in header")
    return header.index(label_column)


def _read_table(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows or not any(c.strip() for c in rows[0]):
        raise DataError(f"{path}: missing header row")
    header = [c.strip() for c in rows[0]]
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names in header")
    body = [r for r in rows[1:] if r]
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"line {i}: expected {len(header)} fields, got {len(r)}")
    return header, body


def load_csv(path, label_column: Union[str, int] = LABEL_COLUMN, class_names: Sequence[str] = None):
    """Read a labelled CSV file into a :class:`Dataset`.

    Class ids follow the lexicographic order of the distinct label strings
    unless ``class_names`` fixes the mapping (used when re-reading the
    training file of an existing model).
    """
    header, body = _read_table(path)
    li = _resolve_label(header, label_column)
    feats = [h for j, h in enumerate(header) if j != li]
    X = np.empty((len(body), len(feats)))
    labels = []
    for i, r in enumerate(body):
        labels.append(r[li].strip())
        X[i] = [_parse_float(c, i + 2, header[j]) for j, c in enumerate(r) if j != li]
    if class_names is None:
        class_names = sorted(set(labels))
        if len(class_names) < 2:
            raise DataError("need at least 2 classes")
    lookup = {c: k for k, c in enumerate(class_names)}
    unknown = sorted(set(labels) - lookup.keys())
    if unknown:
        raise DataError(f"unknown class labels: {unknown}")
    y = np.array([lookup[s] for s in labels], dtype=np.intp)
    return Dataset(X, y, tuple(class_names), tuple(feats))


def load_predictors(path, n_features=None, drop_column=None):
    """Read an unlabelled predictor CSV; zero data rows is allowed."""
    header, body = _read_table(path)
    keep = [j for j, h in enumerate(header) if h != drop_column]
    if n_features is not None and len(keep) != n_features:
        raise DataError(f"expected {n_features} predictor columns, found {len(keep)}")
    X = np.empty((len(body), len(keep)))
    for i, r in enumerate(body):
        X[i] = [_parse_float(r[j], i + 2, header[j]) for j in keep]
    return X


def load_bundled(name):
    """Load one of the datasets shipped with the package (crab, glass, wine)."""
    stem = Path(name).stem
    if stem not in BUNDLED:
        raise DataError(f"no bundled dataset {name!r}; choose from {BUNDLED}")
    with resources.as_file(resources.files("ppforest") / "data" / f"{stem}.csv") as p:
        return load_csv(p, LABEL_COLUMN)


def resolve_dataset(source, label_column=LABEL_COLUMN):
    """Load ``source`` from disk, falling back to a bundled dataset name."""
    if Path(source).is_file():
        return load_csv(source, label_column)
    if Path(source).stem in BUNDLED and not Path(source).parent.name:
        return load_bundled(source)
    raise DataError(f"no such file: {source}")


def column_stats(X):
    """Column means and population standard deviations.

    Columns whose spread is negligible relative to their magnitude get a
    scale of 1 so they map to zeros instead of dividing by zero.
    """
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    tiny = sd <= 1e-12 * np.maximum(1.0, np.abs(mean))
    sd[tiny] = 1.0
    return Standardization(mean, sd)


def standardize(d: Dataset, stats: Standardization = None) -> Dataset:
    """Z-score the predictors, using ``stats`` if given or ``d``'s own."""
    if stats is None:
        stats = column_stats(d.X)
    return replace(d, X=stats.apply(d.X), standardization=stats)


def split_counts(class_counts, train_fraction):
    """Per-class training sizes: round half up, clamped to ``[1, n_g - 1]``."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must lie in (0, 1)")
    counts = np.asarray(class_counts)
    if np.any(counts < 2):
        raise DataError("every class needs at least 2 rows to split")
    k = np.floor(train_fraction * counts + 0.5).astype(int)
    return np.clip(k, 1, counts - 1)


def stratified_split_indices(y, n_classes, train_fraction, seed):
    rng = as_generator(seed)
    y = np.asarray(y)
    counts = np.bincount(y, minlength=n_classes)
    k = split_counts(counts, train_fraction)
    train, test = [], []
    for g in range(n_classes):
        idx = rng.permutation(np.flatnonzero(y == g))
        train.append(idx[: k[g]])
        test.append(idx[k[g]:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_split(d: Dataset, train_fraction=2 / 3, seed=0):
    """Split ``d`` into (train, test) keeping every class in both parts."""
    tr, te = stratified_split_indices(d.y, d.n_classes, train_fraction, seed)
    return d.subset(tr), d.subset(te)


@dataclass(frozen=True)
class BootstrapSample:
    """Row indices drawn with replacement plus the out-of-bag mask."""

    indices: np.ndarray
    oob_mask: np.ndarray


def stratified_bootstrap(y, seed, n_classes=None) -> BootstrapSample:
    """Resample each class independently with replacement, preserving n_g.

    ``y`` may be a label vector or a :class:`Dataset`.
    """
    if isinstance(y, Dataset):
        n_classes = y.n_classes
        y = y.y
    y = np.asarray(y)
    rng = as_generator(seed)
    if n_classes is None:
        n_classes = int(y.max()) + 1 if len(y) else 0
    parts = []
    for g in range(n_classes):
        members = np.flatnonzero(y == g)
        if len(members):
            parts.append(members[rng.integers(0, len(members), size=len(members))])
    indices = np.concatenate(parts) if parts else np.empty(0, dtype=np.intp)
    oob = np.ones(len(y), dtype=bool)
    oob[indices] = False
    return BootstrapSample(indices, oob)
