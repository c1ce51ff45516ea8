"""Scikit-learn style estimators wrapping the representation network.

``ViewFusionEncoder`` is a fit/transform feature extractor: fit runs the
alternating optimization on (windows, labels) and transform produces the
fused embeddings. ``ViewFusionClassifier`` chains the encoder with the
boosted-tree head (or, for the tree-only variant, fits the head directly on
flattened windows). Both follow the usual conventions: constructor
arguments are stored verbatim, fitted state lives in trailing-underscore
attributes, and ``get_params``/``set_params`` come from ``BaseEstimator``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from .boosting import BoostedTreesClassifier
from .network import ModelConfig, build_network
from .training import train_alternating
from .validation import check_is_fitted, check_labels, check_windows

__all__ = ["ViewFusionEncoder", "ViewFusionClassifier"]

_ENCODER_PARAMS = dict(
    n_views=35, view_dim=8, view_kernel=5, long_kernel=5, short_kernel=3,
    pool_stride=2, long_channels=64, short_channels=32, heads=4, proj_dim=64,
    alpha=1e-4, beta=1.0, learning_rate=1e-3, epochs=100, batch_size=32,
    seed=0, view_mode="full",
)


class ViewFusionEncoder(TransformerMixin, BaseEstimator):
    """Trainable multi-view temporal encoder with a transform() interface.

    Input windows are (samples, features, time) arrays; labels are class
    indices (the prediction objective needs them during fit). ``ablation``
    may be "full", "no_mere" (skip the view bank) or "no_cdta" (skip the
    temporal encoder).
    """

    def __init__(self, n_views=35, view_dim=8, view_kernel=5, long_kernel=5,
                 short_kernel=3, pool_stride=2, long_channels=64, short_channels=32,
                 heads=4, proj_dim=64, alpha=1e-4, beta=1.0, learning_rate=1e-3,
                 epochs=100, batch_size=32, seed=0, ablation="full", view_mode="full"):
        self.n_views = n_views
        self.view_dim = view_dim
        self.view_kernel = view_kernel
        self.long_kernel = long_kernel
        self.short_kernel = short_kernel
        self.pool_stride = pool_stride
        self.long_channels = long_channels
        self.short_channels = short_channels
        self.heads = heads
        self.proj_dim = proj_dim
        self.alpha = alpha
        self.beta = beta
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.ablation = ablation
        self.view_mode = view_mode

    def _build_config(self, X, y) -> ModelConfig:
        return ModelConfig(
            d_in=X.shape[1], seq_len=X.shape[2],
            n_views=self.n_views, view_dim=self.view_dim, view_kernel=self.view_kernel,
            long_kernel=self.long_kernel, short_kernel=self.short_kernel,
            pool_stride=self.pool_stride, long_channels=self.long_channels,
            short_channels=self.short_channels, heads=self.heads, proj_dim=self.proj_dim,
            n_classes=int(np.max(y)) + 1 if len(y) else 2,
            alpha=self.alpha, beta=self.beta, learning_rate=self.learning_rate,
            epochs=self.epochs, batch_size=self.batch_size, seed=self.seed,
            ablation=self.ablation, view_mode=self.view_mode)

    def fit(self, X, y, validation_set=None) -> "ViewFusionEncoder":
        X = check_windows(X)
        y = check_labels(y, n=len(X))
        config = self._build_config(X, y)
        self.config_ = config
        self.network_ = build_network(config)
        if self.network_ is None:
            raise ValueError("ablation 'no_both' has no encoder; use ViewFusionClassifier")
        self.history_ = train_alternating(self.network_, (X, y), validation_set, config)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "network_")
        X = check_windows(X)
        return self.network_.embed(X)


class ViewFusionClassifier(ClassifierMixin, BaseEstimator):
    """Encoder plus boosted-tree head as a single fit/predict classifier.

    With ``ablation="no_both"`` the encoder is skipped entirely and the tree
    head fits the flattened windows, which is the natural raw-feature
    baseline for ablation comparisons.
    """

    def __init__(self, n_views=35, view_dim=8, view_kernel=5, long_kernel=5,
                 short_kernel=3, pool_stride=2, long_channels=64, short_channels=32,
                 heads=4, proj_dim=64, alpha=1e-4, beta=1.0, learning_rate=1e-3,
                 epochs=100, batch_size=32, seed=0, ablation="full", view_mode="full",
                 n_rounds=100, max_depth=3, shrinkage=0.1, min_samples_leaf=5):
        self.n_views = n_views
        self.view_dim = view_dim
        self.view_kernel = view_kernel
        self.long_kernel = long_kernel
        self.short_kernel = short_kernel
        self.pool_stride = pool_stride
        self.long_channels = long_channels
        self.short_channels = short_channels
        self.heads = heads
        self.proj_dim = proj_dim
        self.alpha = alpha
        self.beta = beta
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.ablation = ablation
        self.view_mode = view_mode
        self.n_rounds = n_rounds
        self.max_depth = max_depth
        self.shrinkage = shrinkage
        self.min_samples_leaf = min_samples_leaf

    def _encoder_kwargs(self) -> dict:
        return {name: getattr(self, name) for name in _ENCODER_PARAMS}

    def fit(self, X, y) -> "ViewFusionClassifier":
        X = check_windows(X)
        y = check_labels(y, n=len(X))
        n_classes = int(y.max()) + 1
        head = BoostedTreesClassifier(
            n_rounds=self.n_rounds, max_depth=self.max_depth, shrinkage=self.shrinkage,
            min_samples_leaf=self.min_samples_leaf, n_classes=n_classes)
        if self.ablation == "no_both":
            self.encoder_ = None
            head.fit(X.reshape(len(X), -1), y)
        else:
            self.encoder_ = ViewFusionEncoder(ablation=self.ablation, **self._encoder_kwargs())
            self.encoder_.fit(X, y)
            head.fit(self.encoder_.transform(X), y)
        self.head_ = head
        self.classes_ = head.classes_
        self.n_features_in_ = X.shape[1]
        return self

    def _features(self, X) -> np.ndarray:
        check_is_fitted(self, "head_")
        X = check_windows(X)
        if self.encoder_ is None:
            return X.reshape(len(X), -1)
        return self.encoder_.transform(X)

    def predict(self, X) -> np.ndarray:
        return self.head_.predict(self._features(X))

    def predict_proba(self, X) -> np.ndarray:
        return self.head_.predict_proba(self._features(X))
