"""The sklearn-facing estimators: params, cloning, and pipeline behavior."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from earlysep import (SyntheticSpec, ViewFusionClassifier, ViewFusionEncoder,
                      build_window_dataset, generate_synthetic_records,
                      windows_to_arrays)


@pytest.fixture(scope="module")
def xy():
    spec = SyntheticSpec(n_per_class=12, n_classes=2, d_in=3, hours=6,
                         motif_strength=8.0, noise_sd=0.5)
    records, labels = generate_synthetic_records(spec, seed=1)
    dataset, _ = build_window_dataset(records, labels, slots=[6], n_classes=2)
    x, y, _ = windows_to_arrays(dataset.windows(6))
    return x, y


def small_encoder(**kwargs):
    defaults = dict(n_views=2, view_dim=3, view_kernel=3, long_channels=4,
                    short_channels=4, heads=2, proj_dim=8, epochs=4, batch_size=8,
                    seed=0)
    defaults.update(kwargs)
    return ViewFusionEncoder(**defaults)


def test_encoder_fit_transform_shapes(xy):
    x, y = xy
    enc = small_encoder().fit(x, y)
    z = enc.transform(x)
    assert z.shape == (len(x), 8)
    assert len(enc.history_.epochs) == 4


def test_encoder_requires_fit_before_transform(xy):
    with pytest.raises(NotFittedError):
        small_encoder().transform(xy[0])


def test_encoder_clone_keeps_params(xy):
    enc = small_encoder(proj_dim=16, alpha=0.5)
    cloned = clone(enc)
    assert cloned.get_params()["proj_dim"] == 16
    assert cloned.get_params()["alpha"] == 0.5


def test_classifier_end_to_end(xy):
    x, y = xy
    clf = ViewFusionClassifier(n_views=2, view_dim=3, view_kernel=3, long_channels=4,
                               short_channels=4, heads=2, proj_dim=8, epochs=6,
                               batch_size=8, seed=0, n_rounds=15)
    clf.fit(x, y)
    assert clf.score(x, y) >= 0.9
    probs = clf.predict_proba(x)
    assert probs.shape == (len(x), 2)
    assert np.allclose(probs.sum(axis=1), 1.0)


def test_classifier_tree_only_variant(xy):
    x, y = xy
    clf = ViewFusionClassifier(ablation="no_both", n_rounds=15).fit(x, y)
    assert clf.encoder_ is None
    assert clf.score(x, y) >= 0.9


def test_composes_in_sklearn_pipeline(xy):
    from sklearn.pipeline import Pipeline
    from earlysep import WindowPreprocessor

    x, y = xy
    x = x.copy()
    x[0, 1, 2] = np.nan  # raw windows may carry missing cells
    pipe = Pipeline([
        ("prep", WindowPreprocessor()),
        ("clf", ViewFusionClassifier(n_views=2, view_dim=3, view_kernel=3,
                                     long_channels=4, short_channels=4, heads=2,
                                     proj_dim=8, epochs=5, batch_size=8, seed=0,
                                     n_rounds=10)),
    ])
    pipe.fit(x, y)
    assert pipe.score(x, y) >= 0.9
    assert "clf__proj_dim" in pipe.get_params()


def test_classifier_seed_determinism(xy):
    x, y = xy
    kwargs = dict(n_views=2, view_dim=3, view_kernel=3, long_channels=4,
                  short_channels=4, heads=2, proj_dim=8, epochs=3, batch_size=8,
                  seed=3, n_rounds=5)
    a = ViewFusionClassifier(**kwargs).fit(x, y)
    b = ViewFusionClassifier(**kwargs).fit(x, y)
    assert np.array_equal(a.predict_proba(x), b.predict_proba(x))
