"""Differentiable neural-network operations on :class:`~earlysep.tensor.Tensor`.

Convolutions use cross-correlation semantics (no kernel flip). "same"
padding is symmetric zero padding of ``k // 2`` and therefore requires an
odd kernel; "valid" performs no padding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf

from .tensor import Tensor, _accum, _lift, _node

__all__ = [
    "conv1d",
    "BatchNormState",
    "batch_norm1d",
    "gelu",
    "maxpool1d",
    "adaptive_avg_pool1d",
    "linear",
    "softmax",
    "multihead_self_attention",
    "softmax_cross_entropy",
    "mse",
    "l2_penalty",
]

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def conv1d(x: Tensor, w: Tensor, b: Tensor | None = None, padding: str = "same") -> Tensor:
    """Batched 1-D cross-correlation.

    ``x`` is (batch, in_channels, time), ``w`` is (out_channels, in_channels,
    kernel) and ``b`` is (out_channels,). "same" keeps the time axis length,
    "valid" shortens it to ``time - kernel + 1``.
    """
    if x.ndim != 3:
        raise ValueError(f"conv1d input must be 3-D (batch, channels, time), got {x.shape}")
    if w.ndim != 3:
        raise ValueError(f"conv1d kernel must be 3-D (out, in, k), got {w.shape}")
    batch, c_in, length = x.shape
    c_out, c_in_w, k = w.shape
    if c_in != c_in_w:
        raise ValueError(f"conv1d channel mismatch: input has {c_in} channels, kernel expects {c_in_w}")
    if b is not None and b.shape != (c_out,):
        raise ValueError(f"conv1d bias must have shape ({c_out},), got {b.shape}")
    if padding == "same":
        if k % 2 == 0:
            raise ValueError("conv1d 'same' padding requires an odd kernel size")
        pad = k // 2
    elif padding == "valid":
        if k > length:
            raise ValueError(f"conv1d kernel size {k} exceeds sequence length {length}")
        pad = 0
    else:
        raise ValueError(f"unknown padding mode {padding!r}")

    out_len = length + 2 * pad - k + 1
    padded = np.pad(x.data, ((0, 0), (0, 0), (pad, pad))) if pad else x.data
    windows = sliding_window_view(padded, k, axis=2)  # (batch, c_in, out_len, k)
    data = np.einsum("bctj,ocj->bot", windows, w.data, optimize=True)
    if b is not None:
        data = data + b.data[None, :, None]

    def backward_fn(g):
        if b is not None and b.requires_grad:
            _accum(b, g.sum(axis=(0, 2)))
        if w.requires_grad:
            _accum(w, np.einsum("bot,bctj->ocj", g, windows, optimize=True))
        if x.requires_grad:
            gp = np.zeros_like(padded)
            for j in range(k):
                gp[:, :, j:j + out_len] += np.einsum("bot,oc->bct", g, w.data[:, :, j], optimize=True)
            _accum(x, gp[:, :, pad:pad + length] if pad else gp)

    parents = (x, w) if b is None else (x, w, b)
    return _node(data, parents, backward_fn, "conv1d")


@dataclass
class BatchNormState:
    """Running statistics for one batch-normalized channel group."""

    num_channels: int
    momentum: float = 0.1
    eps: float = 1e-5
    running_mean: np.ndarray = field(default=None, repr=False)
    running_var: np.ndarray = field(default=None, repr=False)
    initialized: bool = False

    def __post_init__(self):
        if self.running_mean is None:
            self.running_mean = np.zeros(self.num_channels)
        if self.running_var is None:
            self.running_var = np.ones(self.num_channels)

    def update(self, batch_mean: np.ndarray, batch_var: np.ndarray) -> None:
        if not self.initialized:
            self.running_mean = batch_mean.copy()
            self.running_var = batch_var.copy()
            self.initialized = True
        else:
            m = self.momentum
            self.running_mean = (1.0 - m) * self.running_mean + m * batch_mean
            self.running_var = (1.0 - m) * self.running_var + m * batch_var


def batch_norm1d(x: Tensor, gamma: Tensor, beta: Tensor, state: BatchNormState, training: bool) -> Tensor:
    """Per-channel normalization over the batch and time axes.

    Training mode normalizes with the biased batch variance and folds the
    batch statistics into ``state``; eval mode reuses the running statistics.
    """
    if x.ndim != 3:
        raise ValueError(f"batch_norm1d input must be 3-D, got {x.shape}")
    channels = x.shape[1]
    if channels != state.num_channels or gamma.size != channels or beta.size != channels:
        raise ValueError("batch_norm1d channel count mismatch between input, parameters and state")

    if training:
        if x.shape[0] * x.shape[2] < 2:
            raise ValueError("batch_norm1d training mode needs at least two values per channel")
        mu = x.mean(axis=(0, 2), keepdims=True)
        var = ((x - mu) ** 2).mean(axis=(0, 2), keepdims=True)
        state.update(mu.data.reshape(channels), var.data.reshape(channels))
    else:
        if not state.initialized:
            raise RuntimeError("uninitialized running statistics: run a training-mode pass first")
        mu = Tensor(state.running_mean.reshape(1, channels, 1))
        var = Tensor(state.running_var.reshape(1, channels, 1))

    normed = (x - mu) / ((var + state.eps) ** 0.5)
    return gamma.reshape(1, channels, 1) * normed + beta.reshape(1, channels, 1)


def gelu(x: Tensor) -> Tensor:
    """Exact Gaussian error linear unit, x * Phi(x) with the erf-based CDF."""
    cdf = 0.5 * (1.0 + erf(x.data * _INV_SQRT2))
    data = x.data * cdf

    def backward_fn(g):
        if x.requires_grad:
            pdf = np.exp(-0.5 * x.data * x.data) * _INV_SQRT_2PI
            _accum(x, g * (cdf + x.data * pdf))

    return _node(data, (x,), backward_fn, "gelu")


def maxpool1d(x: Tensor, width: int, stride: int) -> Tensor:
    """Window maxima over the time axis; trailing partial windows are dropped.

    The gradient routes to the first occurrence of each window maximum.
    """
    if width < 1 or stride < 1:
        raise ValueError("maxpool1d width and stride must be >= 1")
    if x.ndim != 3:
        raise ValueError(f"maxpool1d input must be 3-D, got {x.shape}")
    batch, channels, length = x.shape
    if width > length:
        raise ValueError(f"maxpool1d width {width} exceeds sequence length {length}")
    n_out = (length - width) // stride + 1
    starts = np.arange(n_out) * stride
    index = starts[:, None] + np.arange(width)[None, :]
    windows = x.data[:, :, index]  # (batch, channels, n_out, width)
    arg = windows.argmax(axis=3)
    data = np.take_along_axis(windows, arg[..., None], axis=3)[..., 0]

    def backward_fn(g):
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            positions = starts[None, None, :] + arg
            np.add.at(
                gx,
                (np.arange(batch)[:, None, None], np.arange(channels)[None, :, None], positions),
                g,
            )
            _accum(x, gx)

    return _node(data, (x,), backward_fn, "maxpool1d")


def adaptive_avg_pool1d(x: Tensor) -> Tensor:
    """Collapse the time axis of a (batch, channels, time) tensor to its mean."""
    if x.ndim != 3:
        raise ValueError(f"adaptive_avg_pool1d input must be 3-D, got {x.shape}")
    return x.mean(axis=2)


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Affine map ``x @ w + b`` for a 2-D batch of row vectors."""
    if x.ndim != 2 or w.ndim != 2:
        raise ValueError(f"linear expects 2-D input and weight, got {x.shape} and {w.shape}")
    if x.shape[1] != w.shape[0]:
        raise ValueError(f"linear dimension mismatch: input width {x.shape[1]}, weight expects {w.shape[0]}")
    if b.shape != (w.shape[1],):
        raise ValueError(f"linear bias must have shape ({w.shape[1]},), got {b.shape}")
    return x @ w + b


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax built from primitive ops."""
    shifted = x - Tensor(x.data.max(axis=axis, keepdims=True))
    e = shifted.exp()
    return e / e.sum(axis=axis, keepdims=True)


def multihead_self_attention(
    tokens: Tensor,
    wq: Tensor,
    wk: Tensor,
    wv: Tensor,
    heads: int,
    return_weights: bool = False,
):
    """Scaled dot-product self-attention over a (batch, tokens, width) tensor.

    The three projections are shared across heads; each head attends over a
    ``width // heads`` slice and the head outputs are concatenated back to
    the full width.
    """
    if tokens.ndim != 3:
        raise ValueError(f"attention input must be 3-D (batch, tokens, width), got {tokens.shape}")
    batch, n_tokens, width = tokens.shape
    if n_tokens < 1:
        raise ValueError("attention needs at least one token")
    if width % heads != 0:
        raise ValueError(f"head count {heads} must divide token width {width}")
    for name, proj in (("wq", wq), ("wk", wk), ("wv", wv)):
        if proj.shape != (width, width):
            raise ValueError(f"{name} must have shape ({width}, {width}), got {proj.shape}")

    head_dim = width // heads
    scale = 1.0 / math.sqrt(head_dim)

    def split_heads(projected: Tensor) -> Tensor:
        return projected.reshape(batch, n_tokens, heads, head_dim).transpose(0, 2, 1, 3)

    q = split_heads(tokens @ wq)
    k = split_heads(tokens @ wk)
    v = split_heads(tokens @ wv)
    scores = (q @ k.transpose(0, 1, 3, 2)) * scale
    probs = softmax(scores, axis=-1)
    context = (probs @ v).transpose(0, 2, 1, 3).reshape(batch, n_tokens, width)
    if return_weights:
        return context, probs
    return context


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean negative log-likelihood of integer class labels under softmax."""
    if logits.ndim != 2:
        raise ValueError(f"logits must be 2-D (batch, classes), got {logits.shape}")
    batch, n_classes = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (batch,):
        raise ValueError(f"labels must have shape ({batch},), got {labels.shape}")
    labels = labels.astype(np.int64)
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes})")

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    exps = np.exp(shifted)
    sums = exps.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(sums)
    rows = np.arange(batch)
    data = -log_probs[rows, labels].mean()

    def backward_fn(g):
        if logits.requires_grad:
            p = exps / sums
            p[rows, labels] -= 1.0
            _accum(logits, (float(g) / batch) * p)

    return _node(data, (logits,), backward_fn, "softmax_cross_entropy")


def mse(a: Tensor, b: Tensor) -> Tensor:
    """Mean squared elementwise difference of two same-shape tensors."""
    a, b = _lift(a), _lift(b)
    if a.shape != b.shape:
        raise ValueError(f"mse shape mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return (diff * diff).mean()


def l2_penalty(params) -> Tensor:
    """Sum of squared entries over an iterable of weight tensors."""
    total = None
    for p in params:
        term = (p * p).sum()
        total = term if total is None else total + term
    if total is None:
        return Tensor(0.0)
    return total
