"""Boosted-tree head: split search against a brute-force oracle, boosting
behavior, and the estimator contract."""

import numpy as np
import pytest
from sklearn.base import clone

from earlysep import BoostedTreesClassifier, find_best_split


def split_oracle(x, target, min_samples_leaf):
    """Naive O(n^2 d) scan over every midpoint of sorted unique values.

    Gains within the same partition-noise tolerance as the implementation
    count as ties, resolved to the lowest feature then lowest threshold.
    """
    n, d = x.shape
    best = None
    parent = ((target - target.mean()) ** 2).sum()
    if parent <= 1e-12:
        return None
    tol = 1e-12 * max(1.0, parent)
    for j in range(d):
        values = np.unique(x[:, j])
        for lo, hi in zip(values[:-1], values[1:]):
            thr = (lo + hi) / 2.0
            left = target[x[:, j] <= thr]
            right = target[x[:, j] > thr]
            if len(left) < min_samples_leaf or len(right) < min_samples_leaf:
                continue
            gain = parent
            gain -= ((left - left.mean()) ** 2).sum()
            gain -= ((right - right.mean()) ** 2).sum()
            if best is None or gain > best[2] + tol:
                best = (j, thr, gain)
    return best


class TestSplitSearch:
    def test_matches_oracle_on_random_instances(self, rng):
        for trial in range(100):
            n = int(rng.integers(4, 20))
            d = int(rng.integers(1, 4))
            x = rng.normal(size=(n, d))
            target = rng.normal(size=n)
            got = find_best_split(x, target, min_samples_leaf=1)
            want = split_oracle(x, target, min_samples_leaf=1)
            assert (got is None) == (want is None), f"trial {trial}"
            if got is not None:
                assert got[0] == want[0], f"trial {trial}"
                assert abs(got[1] - want[1]) < 1e-8, f"trial {trial}"
                assert abs(got[2] - want[2]) < 1e-8, f"trial {trial}"

    def test_min_samples_leaf_respected(self, rng):
        x = rng.normal(size=(10, 2))
        target = rng.normal(size=10)
        split = find_best_split(x, target, min_samples_leaf=4)
        if split is not None:
            left = (x[:, split[0]] <= split[1]).sum()
            assert 4 <= left <= 6

    def test_constant_feature_gives_no_split(self):
        x = np.ones((8, 1))
        assert find_best_split(x, np.arange(8.0), min_samples_leaf=1) is None

    def test_pure_target_gives_no_split(self, rng):
        x = rng.normal(size=(8, 2))
        assert find_best_split(x, np.zeros(8), min_samples_leaf=1) is None

    def test_tie_breaks_to_lowest_feature_then_threshold(self):
        # duplicated feature columns force exactly equal gains
        x = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        target = np.array([0.0, 0.0, 1.0, 1.0])
        feature, threshold, _ = find_best_split(x, target, min_samples_leaf=1)
        assert feature == 0
        assert threshold == 1.5


class TestFit:
    def test_simple_threshold_dataset(self):
        x = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0, 0, 1, 1])
        model = BoostedTreesClassifier(n_rounds=1, max_depth=1, min_samples_leaf=1).fit(x, y)
        root = model.trees_[0][0].root
        assert root.threshold == 2.5
        assert np.array_equal(model.predict(x), y)

    def test_constant_features_predict_class_prior(self):
        x = np.ones((9, 3))
        y = np.array([0] * 6 + [1] * 3)
        model = BoostedTreesClassifier(n_rounds=25, min_samples_leaf=1).fit(x, y)
        for round_trees in model.trees_:
            assert all(t.root.is_leaf for t in round_trees)
        assert np.all(model.predict(np.ones((4, 3))) == 0)

    def test_xor_pattern_needs_depth_two(self):
        x = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 1, 1, 0])
        model = BoostedTreesClassifier(n_rounds=5, max_depth=2, min_samples_leaf=1).fit(x, y)
        assert np.array_equal(model.predict(x), y)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="single class"):
            BoostedTreesClassifier().fit(np.zeros((4, 2)), np.zeros(4, dtype=int))

    def test_non_finite_features_rejected(self):
        x = np.array([[1.0], [np.nan]])
        with pytest.raises(ValueError, match="non-finite"):
            BoostedTreesClassifier().fit(x, np.array([0, 1]))

    def test_train_loss_non_increasing_per_round(self, rng):
        x = rng.normal(size=(40, 3))
        y = (x[:, 0] + 0.3 * rng.normal(size=40) > 0).astype(int) + (x[:, 1] > 1).astype(int)
        model = BoostedTreesClassifier(n_rounds=30, min_samples_leaf=2).fit(x, y)
        path = np.array(model.train_loss_path_)
        assert len(path) == 31
        assert np.all(np.diff(path) <= 1e-12)

    def test_deterministic_trees(self, rng):
        x = rng.normal(size=(30, 4))
        y = rng.integers(0, 3, size=30)
        a = BoostedTreesClassifier(n_rounds=10).fit(x, y)
        b = BoostedTreesClassifier(n_rounds=10).fit(x, y)
        assert a.train_loss_path_ == b.train_loss_path_
        assert np.array_equal(a.decision_scores(x), b.decision_scores(x))


class TestPredict:
    def test_zero_rounds_uniform_and_class_zero(self, rng):
        model = BoostedTreesClassifier(n_rounds=0).fit(rng.normal(size=(6, 2)),
                                                       np.array([0, 1, 2, 0, 1, 2]))
        probs = model.predict_proba(rng.normal(size=(4, 2)))
        assert np.allclose(probs, 1.0 / 3.0)
        assert np.all(model.predict(rng.normal(size=(4, 2))) == 0)

    def test_probabilities_sum_to_one(self, rng):
        x = rng.normal(size=(50, 3))
        y = rng.integers(0, 4, size=50)
        model = BoostedTreesClassifier(n_rounds=15).fit(x, y)
        probs = model.predict_proba(rng.normal(size=(20, 3)))
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-8)
        assert np.all(probs >= 0)

    def test_width_mismatch_rejected(self, rng):
        model = BoostedTreesClassifier(n_rounds=2).fit(rng.normal(size=(10, 3)),
                                                       rng.integers(0, 2, size=10))
        with pytest.raises(ValueError, match="width"):
            model.predict(rng.normal(size=(5, 4)))

    def test_monotone_feature_transform_invariance(self, rng):
        # strictly increasing per-column maps move thresholds but not the
        # induced partitions, so predicted classes are unchanged
        for trial in range(5):
            x = rng.normal(size=(24, 3))
            assert all(np.unique(x[:, j]).size == 24 for j in range(3))
            y = rng.integers(0, 3, size=24)
            base = BoostedTreesClassifier(n_rounds=8, min_samples_leaf=2).fit(x, y)
            transformed = np.column_stack([
                np.exp(x[:, 0]), x[:, 1] ** 3 + 2.0 * x[:, 1], np.arctan(x[:, 2]) * 5.0])
            mapped = BoostedTreesClassifier(n_rounds=8, min_samples_leaf=2).fit(transformed, y)
            assert np.array_equal(base.predict(x), mapped.predict(transformed)), f"trial {trial}"


def test_sklearn_estimator_contract(rng):
    model = BoostedTreesClassifier(n_rounds=3, max_depth=2)
    params = model.get_params()
    assert params["n_rounds"] == 3 and params["shrinkage"] == 0.1
    cloned = clone(model)
    x = rng.normal(size=(20, 2))
    y = rng.integers(0, 2, size=20)
    cloned.fit(x, y)
    assert cloned.score(x, y) >= 0.5
    assert np.array_equal(cloned.classes_, [0, 1])
