"""Input validation helpers shared by the estimators."""

import math
import numbers

import numpy as np
from sklearn.utils.validation import check_array
from sklearn.utils.validation import check_X_y as _sk_check_X_y

RF_DEFAULT = "rf_default"


def check_X_y(X, y):
    X, y = _sk_check_X_y(X, y, dtype=np.float64, ensure_min_samples=2)
    return X, y


def check_X(X, n_features):
    X = check_array(X, dtype=np.float64, ensure_min_samples=0)
    if X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} features, but the model was fitted with {n_features}")
    return X


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def normalize_var_fraction(var_fraction):
    """Accept ``"rf_default"`` / ``"rf-default"`` or a float in (0, 1]."""
    if isinstance(var_fraction, str):
        key = var_fraction.strip().lower().replace("-", "_")
        if key == RF_DEFAULT:
            return RF_DEFAULT
        try:
            var_fraction = float(key)
        except ValueError:
            raise ValueError(f"var_fraction must be a number in (0, 1] or 'rf_default', got {var_fraction!r}") from None
    if not isinstance(var_fraction, numbers.Real) or not 0.0 < var_fraction <= 1.0:
        raise ValueError(f"var_fraction must lie in (0, 1], got {var_fraction!r}")
    return float(var_fraction)


def resolve_m_vars(var_fraction, n_features):
    """Number of variables sampled per node.

    ``max(1, round(var_fraction * p))``; ``rf_default`` is ``round(sqrt(p))``.
    Rounding is half-up.
    """
    vf = normalize_var_fraction(var_fraction)
    if vf == RF_DEFAULT:
        m = _round_half_up(math.sqrt(n_features))
    else:
        m = _round_half_up(vf * n_features)
    return min(n_features, max(1, m))
