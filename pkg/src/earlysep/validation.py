"""Small input-validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError

__all__ = ["check_features", "check_labels", "check_windows", "check_is_fitted"]


def check_features(X, allow_nan: bool = False) -> np.ndarray:
    """Coerce to a 2-D float64 (samples, features) array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D (samples, features) array, got shape {X.shape}")
    if not allow_nan and not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values are not allowed")
    return X


def check_windows(X, allow_nan: bool = False) -> np.ndarray:
    """Coerce to a 3-D float64 (samples, features, time) array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3:
        raise ValueError(f"expected a 3-D (samples, features, time) array, got shape {X.shape}")
    if not allow_nan and not np.all(np.isfinite(X)):
        raise ValueError("non-finite window values are not allowed")
    return X


def check_labels(y, n: int | None = None, n_classes: int | None = None) -> np.ndarray:
    """Coerce to a 1-D array of non-negative integer class indices."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {y.shape}")
    if n is not None and len(y) != n:
        raise ValueError(f"expected {n} labels, got {len(y)}")
    if not np.issubdtype(y.dtype, np.integer):
        rounded = np.rint(y)
        if not np.allclose(y, rounded):
            raise ValueError("labels must be integers")
        y = rounded.astype(np.int64)
    else:
        y = y.astype(np.int64)
    if len(y) and y.min() < 0:
        raise ValueError("labels must be non-negative class indices")
    if n_classes is not None and len(y) and y.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes})")
    return y


def check_is_fitted(estimator, attribute: str) -> None:
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first")
