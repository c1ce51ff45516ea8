"""earlysep: early sepsis risk classification from short ICU monitoring windows.

The package combines a small float64 autodiff engine, a multi-view temporal
representation network trained with alternating reconstruction/prediction
objectives, and a boosted-tree prediction head, plus the data ingestion and
evaluation harness around them.
"""

from .boosting import BoostedTreesClassifier, RegressionTree, find_best_split
from .configfile import SweepSettings, load_config_file, parse_config_text
from .data import (LabelRule, LabelRuleSet, PatientRecord, Window, WindowDataset,
                   WindowPreprocessor, apply_label_rules, build_window_dataset,
                   default_rules, make_window, parse_psv, parse_rule_file,
                   serialize_psv, stratified_split, windows_to_arrays)
from .diagnostics import gradcheck_suite, toy_config
from .estimator import ViewFusionClassifier, ViewFusionEncoder
from .functional import (BatchNormState, adaptive_avg_pool1d, batch_norm1d, conv1d,
                         gelu, l2_penalty, linear, maxpool1d, mse,
                         multihead_self_attention, softmax, softmax_cross_entropy)
from .gradcheck import grad_check
from .metrics import RunMetrics, compute_metrics
from .network import (ABLATIONS, ConfigError, LossBreakdown, ModelConfig,
                      ViewFusionNetwork, build_network)
from .optim import Adam, AdamState, adam_step
from .seeds import derive_seed
from .sweep import SweepCell, run_once, sweep
from .synth import SyntheticSpec, generate_synthetic_records
from .tensor import (GraphReleasedError, NumericsError, Tensor, no_grad,
                     slice_axis, stack)
from .temporal import MeanFusion, TemporalEncoder
from .training import TrainHistory, TrainingDiverged, train_alternating
from .views import ViewBank, passthrough_views

__version__ = "0.1.0"

__all__ = [
    "ABLATIONS", "Adam", "AdamState", "BatchNormState", "BoostedTreesClassifier",
    "ConfigError", "GraphReleasedError", "LabelRule", "LabelRuleSet",
    "LossBreakdown", "MeanFusion", "ModelConfig", "NumericsError", "PatientRecord",
    "RegressionTree", "RunMetrics", "SweepCell", "SweepSettings", "SyntheticSpec",
    "TemporalEncoder", "Tensor", "TrainHistory", "TrainingDiverged", "ViewBank",
    "ViewFusionClassifier", "ViewFusionEncoder", "ViewFusionNetwork", "Window",
    "WindowDataset", "WindowPreprocessor", "adam_step", "adaptive_avg_pool1d",
    "apply_label_rules", "batch_norm1d", "build_network", "build_window_dataset",
    "compute_metrics", "conv1d", "default_rules", "derive_seed", "find_best_split",
    "gelu", "generate_synthetic_records", "grad_check", "gradcheck_suite",
    "l2_penalty", "linear", "load_config_file", "make_window", "maxpool1d", "mse",
    "multihead_self_attention", "no_grad", "parse_config_text", "parse_psv",
    "parse_rule_file", "passthrough_views", "run_once", "serialize_psv",
    "slice_axis", "softmax", "softmax_cross_entropy", "stack", "stratified_split",
    "sweep", "toy_config", "train_alternating", "windows_to_arrays",
]
