"""Configuration and assembly of the full representation network.

The network is: multi-view expansion -> temporal encoding/fusion -> one
linear decoder back to the input window (reconstruction) plus one linear
softmax head (differentiable classification proxy). Either encoder stage
can be swapped for its parameter-light fallback via ``ablation``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .functional import l2_penalty, linear, mse, softmax_cross_entropy
from .seeds import derive_seed
from .tensor import Tensor, no_grad
from .temporal import MeanFusion, TemporalEncoder
from .views import ViewBank, passthrough_views

__all__ = ["ABLATIONS", "ConfigError", "ModelConfig", "LossBreakdown", "ViewFusionNetwork", "build_network"]

ABLATIONS = ("full", "no_mere", "no_cdta", "no_both")
VIEW_MODES = ("full", "grouped")


class ConfigError(ValueError):
    """A configuration field violates its invariant."""


@dataclass
class ModelConfig:
    """Every architectural and training hyperparameter in one place."""

    d_in: int
    seq_len: int
    n_views: int = 35
    view_dim: int = 8
    view_kernel: int = 5
    long_kernel: int = 5
    short_kernel: int = 3
    pool_stride: int = 2
    long_channels: int = 64
    short_channels: int = 32
    heads: int = 4
    proj_dim: int = 64
    n_classes: int = 2
    alpha: float = 1e-4
    beta: float = 1.0
    learning_rate: float = 1e-3
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    ablation: str = "full"
    view_mode: str = "full"

    def validate(self) -> None:
        for name in ("d_in", "seq_len", "n_views", "view_dim", "long_channels",
                     "short_channels", "heads", "proj_dim", "pool_stride"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("view_kernel", "long_kernel", "short_kernel"):
            value = getattr(self, name)
            if value < 1 or value % 2 == 0:
                raise ConfigError(f"{name} must be a positive odd integer, got {value}")
        if self.short_kernel >= self.long_kernel:
            raise ConfigError(
                f"short_kernel must be smaller than long_kernel, got {self.short_kernel} >= {self.long_kernel}")
        if self.short_channels % self.heads != 0:
            raise ConfigError(f"heads must divide short_channels, got {self.heads} and {self.short_channels}")
        if self.seq_len < self.pool_stride:
            raise ConfigError(f"seq_len must be >= pool_stride, got {self.seq_len} < {self.pool_stride}")
        if self.n_classes < 2:
            raise ConfigError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")
        if self.view_mode not in VIEW_MODES:
            raise ConfigError(f"view_mode must be one of {VIEW_MODES}, got {self.view_mode!r}")

    def with_overrides(self, **kwargs) -> "ModelConfig":
        return replace(self, **kwargs)

    @classmethod
    def field_names(cls) -> list:
        return [f.name for f in fields(cls)]


@dataclass
class LossBreakdown:
    """The three objective components and their weighted total."""

    l_mse: float
    l_reg: float
    l_pred: float
    total: float

    @classmethod
    def compute(cls, l_mse: float, l_reg: float, l_pred: float, alpha: float, beta: float) -> "LossBreakdown":
        return cls(l_mse, l_reg, l_pred, l_mse + alpha * l_reg + beta * l_pred)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.l_mse, self.l_reg, self.l_pred, self.total))


class ViewFusionNetwork:
    """Multi-view temporal encoder with reconstruction and classifier heads."""

    def __init__(self, config: ModelConfig):
        config.validate()
        if config.ablation == "no_both":
            raise ConfigError("ablation 'no_both' builds no network; use the tree head directly")
        self.config = config

        if config.ablation == "no_mere":
            self.views = None
            n_views, view_dim = 1, config.d_in
        else:
            self.views = ViewBank(
                config.d_in, config.n_views, config.view_dim, config.view_kernel,
                seed=derive_seed(config.seed, "init", "views"), mode=config.view_mode)
            n_views, view_dim = config.n_views, config.view_dim
        self.n_views = n_views
        self.view_dim = view_dim

        if config.ablation == "no_cdta":
            self.temporal = MeanFusion(
                n_views, view_dim, config.proj_dim,
                seed=derive_seed(config.seed, "init", "fusion"))
        else:
            self.temporal = TemporalEncoder(
                n_views, view_dim, config.long_channels, config.short_channels,
                config.long_kernel, config.short_kernel, config.pool_stride,
                config.heads, config.proj_dim,
                seed=derive_seed(config.seed, "init", "temporal"))

        rng = np.random.default_rng(derive_seed(config.seed, "init", "heads"))
        bound = math.sqrt(1.0 / config.proj_dim)
        recon_width = config.d_in * config.seq_len
        self.decoder_w = Tensor(rng.uniform(-bound, bound, size=(config.proj_dim, recon_width)),
                                requires_grad=True, name="decoder.w")
        self.decoder_b = Tensor(np.zeros(recon_width), requires_grad=True, name="decoder.b")
        self.classifier_w = Tensor(rng.uniform(-bound, bound, size=(config.proj_dim, config.n_classes)),
                                   requires_grad=True, name="classifier.w")
        self.classifier_b = Tensor(np.zeros(config.n_classes), requires_grad=True, name="classifier.b")

    # -- forward ------------------------------------------------------------

    def expand_views(self, x: Tensor, training: bool) -> Tensor:
        if self.views is None:
            return passthrough_views(x)
        return self.views.forward(x, training)

    def forward(self, x: Tensor, training: bool = False):
        """Return (embedding, logits, reconstruction) for one input batch."""
        cfg = self.config
        if x.ndim != 3 or x.shape[1] != cfg.d_in or x.shape[2] != cfg.seq_len:
            raise ValueError(
                f"expected input of shape (batch, {cfg.d_in}, {cfg.seq_len}), got {x.shape}")
        views = self.expand_views(x, training)
        z = self.temporal.forward(views)
        logits = linear(z, self.classifier_w, self.classifier_b)
        recon = linear(z, self.decoder_w, self.decoder_b).reshape(x.shape[0], cfg.d_in, cfg.seq_len)
        return z, logits, recon

    def forward_detail(self, x: Tensor, training: bool = False) -> dict:
        """Forward pass that also exposes every intermediate tensor."""
        cfg = self.config
        views = self.expand_views(x, training)
        z, detail = self.temporal.forward(views, return_detail=True)
        logits = linear(z, self.classifier_w, self.classifier_b)
        recon = linear(z, self.decoder_w, self.decoder_b).reshape(x.shape[0], cfg.d_in, cfg.seq_len)
        detail.update({"views": views, "z": z, "logits": logits, "recon": recon})
        return detail

    def embed(self, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Eval-mode embeddings for a (n, d_in, seq_len) array."""
        outs = []
        with no_grad():
            for lo in range(0, len(x), batch_size):
                z, _, _ = self.forward(Tensor(x[lo:lo + batch_size]), training=False)
                outs.append(z.data)
        return np.concatenate(outs, axis=0)

    def predict_logits(self, x: np.ndarray) -> np.ndarray:
        with no_grad():
            _, logits, _ = self.forward(Tensor(x), training=False)
        return logits.data

    # -- loss -----------------------------------------------------------------

    def loss_tensors(self, x: Tensor, labels, training: bool = True) -> dict:
        """Graph tensors for each objective component of one batch."""
        _, logits, recon = self.forward(x, training)
        return {
            "l_mse": mse(recon, x),
            "l_reg": l2_penalty(self.weight_parameters()),
            "l_pred": softmax_cross_entropy(logits, labels),
        }

    def loss_breakdown(self, x: Tensor, labels, training: bool = False) -> LossBreakdown:
        parts = self.loss_tensors(x, labels, training)
        return LossBreakdown.compute(
            parts["l_mse"].item(), parts["l_reg"].item(), parts["l_pred"].item(),
            self.config.alpha, self.config.beta)

    # -- parameter bookkeeping --------------------------------------------------

    def parameters(self) -> dict:
        params: dict[str, Tensor] = {}
        if self.views is not None:
            params.update(self.views.parameters())
        params.update(self.temporal.parameters())
        params["decoder.w"] = self.decoder_w
        params["decoder.b"] = self.decoder_b
        params["classifier.w"] = self.classifier_w
        params["classifier.b"] = self.classifier_b
        return params

    def encoder_parameter_names(self) -> list:
        names = []
        if self.views is not None:
            names.extend(self.views.parameters().keys())
        names.extend(self.temporal.parameters().keys())
        return names

    def reconstruction_parameter_names(self) -> list:
        return self.encoder_parameter_names() + ["decoder.w", "decoder.b"]

    def prediction_parameter_names(self) -> list:
        return self.encoder_parameter_names() + ["classifier.w", "classifier.b"]

    def weight_parameters(self) -> list:
        weights = []
        if self.views is not None:
            weights.extend(self.views.weight_parameters())
        weights.extend(self.temporal.weight_parameters())
        weights.append(self.decoder_w)
        weights.append(self.classifier_w)
        return weights

    def state_arrays(self) -> dict:
        """Parameter values plus normalization buffers for checkpointing."""
        arrays = {name: t.data.copy() for name, t in self.parameters().items()}
        if self.views is not None:
            arrays.update({k: v.copy() for k, v in self.views.state_arrays().items()})
        return arrays

    def load_state_arrays(self, arrays: dict) -> None:
        for name, tensor in self.parameters().items():
            if name not in arrays:
                raise ValueError(f"checkpoint is missing parameter {name!r}")
            value = arrays[name]
            if value.shape != tensor.data.shape:
                raise ValueError(f"checkpoint parameter {name!r} has shape {value.shape}, "
                                 f"expected {tensor.data.shape}")
            tensor.data[...] = value
        if self.views is not None:
            self.views.load_state_arrays(arrays)


def build_network(config: ModelConfig):
    """Construct the network for a config, or None for the tree-only variant."""
    config.validate()
    if config.ablation == "no_both":
        return None
    return ViewFusionNetwork(config)
