"""Seeded experiment harness: single runs, and the slot-by-variant sweep.

One run = split the slot's windows (patient-disjoint, seeded), fit
preprocessing on the training side only, train the configured variant, fit
the tree head on frozen training embeddings, and score the held-out side.
A sweep crosses slots x variants x runs with seeds ``base_seed + run`` and
aggregates mean and population standard deviation per cell.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .boosting import BoostedTreesClassifier
from .configfile import SweepSettings
from .data import WindowDataset, WindowPreprocessor, stratified_split, windows_to_arrays
from .metrics import RunMetrics, compute_metrics
from .network import ModelConfig, build_network
from .seeds import derive_seed
from .training import train_alternating

__all__ = ["SweepCell", "run_once", "sweep", "fit_variant"]


@dataclass
class SweepCell:
    slot_hours: int
    variant: str
    run_count: int
    mean_accuracy: float
    std_accuracy: float
    mean_f1: float
    std_f1: float
    error: str | None = None


def _head_params(settings: SweepSettings, n_classes: int) -> dict:
    return dict(n_rounds=settings.gbdt_rounds, max_depth=settings.gbdt_depth,
                shrinkage=settings.gbdt_shrinkage, min_samples_leaf=settings.gbdt_min_leaf,
                n_classes=n_classes)


def fit_variant(x_train, y_train, variant: str, config: ModelConfig, seed: int,
                n_classes: int, settings: SweepSettings):
    """Train one variant; returns (network_or_None, fitted_head, history)."""
    head = BoostedTreesClassifier(**_head_params(settings, n_classes))
    if variant == "no_both":
        head.fit(x_train.reshape(len(x_train), -1), y_train)
        return None, head, None
    cfg = config.with_overrides(
        ablation=variant,
        d_in=x_train.shape[1],
        seq_len=x_train.shape[2],
        n_classes=n_classes,
        seed=seed,
    )
    network = build_network(cfg)
    history = train_alternating(network, (x_train, y_train), None, cfg)
    head.fit(network.embed(x_train), y_train)
    return network, head, history


def run_once(dataset: WindowDataset, slot: int, variant: str, config: ModelConfig,
             seed: int, settings: SweepSettings | None = None) -> RunMetrics:
    """One seeded train/evaluate pass at a single slot and variant."""
    if settings is None:
        settings = SweepSettings()
    windows = dataset.windows(slot)
    train_w, test_w = stratified_split(windows, settings.split_ratio, derive_seed(seed, "data"))
    x_train_raw, y_train, _ = windows_to_arrays(train_w)
    x_test_raw, y_test, _ = windows_to_arrays(test_w)

    preprocessor = WindowPreprocessor().fit(x_train_raw)
    x_train = preprocessor.transform(x_train_raw)
    x_test = preprocessor.transform(x_test_raw)

    network, head, _ = fit_variant(x_train, y_train, variant, config, seed,
                                   dataset.n_classes, settings)
    if network is None:
        predictions = head.predict(x_test.reshape(len(x_test), -1))
    else:
        predictions = head.predict(network.embed(x_test))
    return compute_metrics(predictions, y_test, dataset.n_classes)


def sweep(dataset: WindowDataset, config: ModelConfig, settings: SweepSettings) -> list:
    """Cross slots x variants x runs; failed runs are recorded, not dropped."""
    settings.validate()
    tasks = [(slot, variant, run)
             for slot in settings.slots
             for variant in settings.variants
             for run in range(settings.runs)]

    def one(task):
        slot, variant, run = task
        try:
            metrics = run_once(dataset, slot, variant, config,
                               seed=settings.base_seed + run, settings=settings)
            return task, metrics, None
        except Exception as exc:  # recorded per-cell, sweep continues
            return task, None, f"run {run}: {exc}"

    results = {}
    if settings.workers > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            for task, metrics, error in pool.map(one, tasks):
                results[task] = (metrics, error)
    else:
        for task in tasks:
            results[task] = one(task)[1:]

    cells = []
    for slot in settings.slots:
        for variant in settings.variants:
            metrics_list, errors = [], []
            for run in range(settings.runs):
                metrics, error = results[(slot, variant, run)]
                if metrics is not None:
                    metrics_list.append(metrics)
                else:
                    errors.append(error)
            if metrics_list:
                accs = np.array([m.accuracy for m in metrics_list])
                f1s = np.array([m.macro_f1 for m in metrics_list])
                cell = SweepCell(slot, variant, len(metrics_list),
                                 float(accs.mean()), float(accs.std()),
                                 float(f1s.mean()), float(f1s.std()),
                                 error="; ".join(errors) if errors else None)
            else:
                cell = SweepCell(slot, variant, 0, float("nan"), float("nan"),
                                 float("nan"), float("nan"), error="; ".join(errors))
            cells.append(cell)
    return cells
