"""Projection pursuit random forests: oblique-split tree ensembles for classification."""

from .baseline import AxisForestClassifier
from .dataio import Dataset, load_bundled, load_csv, stratified_bootstrap, stratified_split
from .diagnostics import (classical_mds, diagnose, forest_importance, permuted_importance,
                          proximity, ternary_coords)
from .exceptions import (DataError, DataMismatchError, DegenerateNodeError, ModelFormatError,
                         PPForestError, TreeFitError)
from .forest import ForestConfig, PPForestClassifier, fit_forest, predict_forest
from .pp_index import IndexConfig, lda_index, pda_index, scatter
from .pp_optimize import optimize_projection
from .serialize import load_model, save_model
from .tree import PPTreeClassifier, build_tree

__version__ = "0.1.0"

__all__ = [
    "AxisForestClassifier", "DataError", "DataMismatchError", "Dataset", "DegenerateNodeError",
    "ForestConfig", "IndexConfig", "ModelFormatError", "PPForestClassifier", "PPForestError",
    "PPTreeClassifier", "TreeFitError", "build_tree", "classical_mds", "diagnose", "fit_forest",
    "forest_importance", "lda_index", "load_bundled", "load_csv", "load_model",
    "optimize_projection", "pda_index", "permuted_importance", "predict_forest", "proximity",
    "save_model", "scatter", "stratified_bootstrap", "stratified_split", "ternary_coords",
]
