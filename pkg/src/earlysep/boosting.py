"""Multiclass gradient boosting with exact greedy regression trees.

One regression tree per class per round is fit to the softmax residuals
(one-hot minus predicted probability). Splits come from an exhaustive scan
over midpoints of sorted unique feature values maximizing variance
reduction, with deterministic tie-breaking (lowest feature index, then
lowest threshold). Leaf values are residual means, applied with shrinkage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .validation import check_features, check_is_fitted, check_labels

__all__ = ["TreeNode", "RegressionTree", "find_best_split", "BoostedTreesClassifier", "softmax_rows"]


def softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def find_best_split(x: np.ndarray, target: np.ndarray, min_samples_leaf: int):
    """Best (feature, threshold, gain) by variance reduction, or None.

    Thresholds are midpoints between consecutive distinct sorted values.
    Equal gains resolve to the lowest feature index, then lowest threshold.
    """
    n, n_features = x.shape
    if n < 2 * min_samples_leaf:
        return None
    best = None
    total_sum = target.sum()
    total_sq = (target * target).sum()
    sse_parent = total_sq - total_sum * total_sum / n
    if sse_parent <= 1e-12:  # pure node: nothing left to reduce
        return None
    # Different features (or thresholds) can induce the same partition and
    # therefore the same mathematical gain, but the prefix sums are added in
    # different orders; gains within this tolerance count as ties so the
    # lowest-feature / lowest-threshold rule stays deterministic.
    tol = 1e-12 * max(1.0, sse_parent)
    left_sizes = np.arange(1, n)
    right_sizes = n - left_sizes
    size_ok = (left_sizes >= min_samples_leaf) & (right_sizes >= min_samples_leaf)
    for j in range(n_features):
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        ts = target[order]
        boundaries = (xs[1:] != xs[:-1]) & size_ok
        if not boundaries.any():
            continue
        sum_left = np.cumsum(ts)[:-1]
        sq_left = np.cumsum(ts * ts)[:-1]
        sse_left = sq_left - sum_left * sum_left / left_sizes
        sum_right = total_sum - sum_left
        sse_right = (total_sq - sq_left) - sum_right * sum_right / right_sizes
        gains = sse_parent - sse_left - sse_right
        gains[~boundaries] = -np.inf
        # Zero gain is still a valid candidate (variance reduction is never
        # negative; parity patterns only pay off one level deeper).
        top = float(gains.max())
        if not np.isfinite(top):
            continue
        i = int(np.argmax(gains >= top - tol))  # lowest threshold in the tie group
        if best is None or top > best[2] + tol:
            threshold = float((xs[i] + xs[i + 1]) / 2.0)
            best = (j, threshold, top)
    return best


class RegressionTree:
    """Depth-limited least-squares regression tree with exact splits."""

    def __init__(self, max_depth: int = 3, min_samples_leaf: int = 5):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.root: TreeNode | None = None

    def fit(self, x: np.ndarray, target: np.ndarray) -> "RegressionTree":
        self.root = self._build(x, target, depth=0)
        return self

    def _build(self, x: np.ndarray, target: np.ndarray, depth: int) -> TreeNode:
        node = TreeNode(value=float(target.mean()))
        if depth >= self.max_depth:
            return node
        split = find_best_split(x, target, self.min_samples_leaf)
        if split is None:
            return node
        feature, threshold, _ = split
        mask = x[:, feature] <= threshold
        node.feature = feature
        node.threshold = threshold
        node.left = self._build(x[mask], target[mask], depth + 1)
        node.right = self._build(x[~mask], target[~mask], depth + 1)
        return node

    def predict(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(len(x))
        work = [(self.root, np.arange(len(x)))]
        while work:
            node, idx = work.pop()
            if node.is_leaf:
                out[idx] = node.value
                continue
            mask = x[idx, node.feature] <= node.threshold
            work.append((node.left, idx[mask]))
            work.append((node.right, idx[~mask]))
        return out


class BoostedTreesClassifier(ClassifierMixin, BaseEstimator):
    """Boosted regression trees on softmax residuals.

    Parameters
    ----------
    n_rounds : int
        Boosting rounds; each round fits one tree per class.
    max_depth : int
        Maximum tree depth (0 means a single leaf per tree).
    shrinkage : float
        Multiplier applied to every tree's contribution.
    min_samples_leaf : int
        Minimum samples on each side of a split.
    n_classes : int, optional
        Fixed class count; inferred as ``max(y) + 1`` when omitted.
    """

    def __init__(self, n_rounds: int = 100, max_depth: int = 3, shrinkage: float = 0.1,
                 min_samples_leaf: int = 5, n_classes: int | None = None):
        self.n_rounds = n_rounds
        self.max_depth = max_depth
        self.shrinkage = shrinkage
        self.min_samples_leaf = min_samples_leaf
        self.n_classes = n_classes

    def fit(self, X, y) -> "BoostedTreesClassifier":
        X = check_features(X)
        y = check_labels(y, n=len(X))
        if len(X) < 2:
            raise ValueError("need at least 2 samples to fit")
        if len(np.unique(y)) < 2:
            raise ValueError("labels contain a single class; need at least 2")
        k = self.n_classes if self.n_classes is not None else int(y.max()) + 1
        if y.max() >= k:
            raise ValueError(f"labels must lie in [0, {k})")

        n = len(X)
        scores = np.zeros((n, k))
        one_hot = np.zeros((n, k))
        one_hot[np.arange(n), y] = 1.0
        rounds = []
        loss_path = [self._nll(scores, y)]
        for _ in range(self.n_rounds):
            probs = softmax_rows(scores)
            round_trees = []
            for c in range(k):
                residual = one_hot[:, c] - probs[:, c]
                tree = RegressionTree(self.max_depth, self.min_samples_leaf).fit(X, residual)
                scores[:, c] += self.shrinkage * tree.predict(X)
                round_trees.append(tree)
            rounds.append(round_trees)
            loss_path.append(self._nll(scores, y))

        self.classes_ = np.arange(k)
        self.n_features_in_ = X.shape[1]
        self.trees_ = rounds
        self.train_loss_path_ = loss_path
        return self

    @staticmethod
    def _nll(scores: np.ndarray, y: np.ndarray) -> float:
        probs = softmax_rows(scores)
        return float(-np.log(probs[np.arange(len(y)), y]).mean())

    def decision_scores(self, X) -> np.ndarray:
        check_is_fitted(self, "trees_")
        X = check_features(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"feature width {X.shape[1]} does not match fitted width {self.n_features_in_}")
        scores = np.zeros((len(X), len(self.classes_)))
        for round_trees in self.trees_:
            for c, tree in enumerate(round_trees):
                scores[:, c] += self.shrinkage * tree.predict(X)
        return scores

    def predict_proba(self, X) -> np.ndarray:
        return softmax_rows(self.decision_scores(X))

    def predict(self, X) -> np.ndarray:
        return self.decision_scores(X).argmax(axis=1)
