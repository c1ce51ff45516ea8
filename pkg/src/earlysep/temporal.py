"""Dual-scale temporal encoding, cross-view attention, and fusion.

Each feature view passes through a long-kernel convolution (max-pooled) and
then a short-kernel convolution (mean-pooled over time), compressing the
window into one vector per view. The per-view vectors form a token sequence
that self-attention mixes across views, and a final linear projection fuses
everything into the embedding used for prediction.
"""

from __future__ import annotations

import math

import numpy as np

from .functional import adaptive_avg_pool1d, conv1d, gelu, linear, maxpool1d, multihead_self_attention
from .tensor import Tensor, slice_axis, stack

__all__ = ["TemporalEncoder", "MeanFusion"]


def _uniform(rng, fan_in: int, shape, name: str) -> Tensor:
    bound = math.sqrt(1.0 / fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name)


class TemporalEncoder:
    """Cascaded long/short convolutions with attention across views."""

    def __init__(self, n_views: int, view_dim: int, long_channels: int, short_channels: int,
                 long_kernel: int, short_kernel: int, pool_stride: int, heads: int,
                 proj_dim: int, seed: int):
        if short_kernel >= long_kernel:
            raise ValueError(
                f"short kernel must be smaller than long kernel, got {short_kernel} >= {long_kernel}")
        if long_kernel % 2 == 0 or short_kernel % 2 == 0:
            raise ValueError("temporal kernels must be odd (same padding)")
        if pool_stride < 1:
            raise ValueError("pool stride must be >= 1")
        if short_channels % heads != 0:
            raise ValueError(f"head count {heads} must divide short conv width {short_channels}")
        self.n_views = n_views
        self.view_dim = view_dim
        self.long_channels = long_channels
        self.short_channels = short_channels
        self.pool_stride = pool_stride
        self.heads = heads
        self.proj_dim = proj_dim

        rng = np.random.default_rng(seed)
        self.long_w = _uniform(rng, view_dim * long_kernel,
                               (long_channels, view_dim, long_kernel), "temporal.long_w")
        self.long_b = Tensor(np.zeros(long_channels), requires_grad=True, name="temporal.long_b")
        self.short_w = _uniform(rng, long_channels * short_kernel,
                                (short_channels, long_channels, short_kernel), "temporal.short_w")
        self.short_b = Tensor(np.zeros(short_channels), requires_grad=True, name="temporal.short_b")
        self.wq = _uniform(rng, short_channels, (short_channels, short_channels), "temporal.wq")
        self.wk = _uniform(rng, short_channels, (short_channels, short_channels), "temporal.wk")
        self.wv = _uniform(rng, short_channels, (short_channels, short_channels), "temporal.wv")
        fused_width = n_views * short_channels
        self.fuse_w = _uniform(rng, fused_width, (fused_width, proj_dim), "temporal.fuse_w")
        self.fuse_b = Tensor(np.zeros(proj_dim), requires_grad=True, name="temporal.fuse_b")

    def encode_view(self, view: Tensor):
        """Compress one (batch, time, view_dim) view.

        Returns the pooled long-range map of shape
        (batch, long_channels, time // pool_stride) and the per-view summary
        vector of shape (batch, short_channels).
        """
        if view.ndim != 3 or view.shape[2] != self.view_dim:
            raise ValueError(f"expected (batch, time, {self.view_dim}) view, got {view.shape}")
        length = view.shape[1]
        if length < self.pool_stride:
            raise ValueError("sequence shorter than pool stride")
        h = view.transpose(0, 2, 1)
        h = gelu(conv1d(h, self.long_w, self.long_b, padding="same"))
        c_long = maxpool1d(h, self.pool_stride, self.pool_stride)
        h = gelu(conv1d(c_long, self.short_w, self.short_b, padding="same"))
        c_short = adaptive_avg_pool1d(h)
        return c_long, c_short

    def attend(self, shorts) -> Tensor:
        """Mix the per-view summary vectors with residual self-attention."""
        shorts = list(shorts)
        if len(shorts) != self.n_views:
            raise ValueError(f"expected {self.n_views} view vectors, got {len(shorts)}")
        shape = shorts[0].shape
        for s in shorts:
            if s.shape != shape:
                raise ValueError("view vectors must share one shape")
        tokens = stack(shorts, axis=1)  # (batch, n_views, short_channels)
        mixed = multihead_self_attention(tokens, self.wq, self.wk, self.wv, self.heads)
        return mixed + tokens

    def fuse(self, attended: Tensor) -> tuple:
        """Flatten (batch, n_views, short_channels) view-major and project."""
        batch = attended.shape[0]
        width = self.n_views * self.short_channels
        if attended.shape[1] * attended.shape[2] != width:
            raise ValueError(
                f"attended width {attended.shape[1] * attended.shape[2]} does not match fusion input {width}")
        flat = attended.reshape(batch, width)
        z = linear(flat, self.fuse_w, self.fuse_b)
        return flat, z

    def forward(self, views: Tensor, return_detail: bool = False):
        """Full per-view encode, attend, fuse pipeline.

        ``views`` is (batch, n_views, time, view_dim); the result is the
        fused (batch, proj_dim) embedding.
        """
        if views.ndim != 4 or views.shape[1] != self.n_views:
            raise ValueError(f"expected (batch, {self.n_views}, time, view_dim) input, got {views.shape}")
        batch, _, length, view_dim = views.shape
        longs, shorts = [], []
        for i in range(self.n_views):
            view = slice_axis(views, 1, i, i + 1).reshape(batch, length, view_dim)
            c_long, c_short = self.encode_view(view)
            longs.append(c_long)
            shorts.append(c_short)
        attended = self.attend(shorts)
        flat, z = self.fuse(attended)
        if return_detail:
            return z, {"c_long": longs, "c_short": shorts, "attended": attended, "flat": flat}
        return z

    def parameters(self) -> dict:
        return {
            "temporal.long_w": self.long_w,
            "temporal.long_b": self.long_b,
            "temporal.short_w": self.short_w,
            "temporal.short_b": self.short_b,
            "temporal.wq": self.wq,
            "temporal.wk": self.wk,
            "temporal.wv": self.wv,
            "temporal.fuse_w": self.fuse_w,
            "temporal.fuse_b": self.fuse_b,
        }

    def weight_parameters(self) -> list:
        return [self.long_w, self.short_w, self.wq, self.wk, self.wv, self.fuse_w]


class MeanFusion:
    """Attention-free fallback: per-view time means through one linear map."""

    def __init__(self, n_views: int, view_dim: int, proj_dim: int, seed: int):
        self.n_views = n_views
        self.view_dim = view_dim
        self.proj_dim = proj_dim
        rng = np.random.default_rng(seed)
        width = n_views * view_dim
        self.fuse_w = _uniform(rng, width, (width, proj_dim), "temporal.fuse_w")
        self.fuse_b = Tensor(np.zeros(proj_dim), requires_grad=True, name="temporal.fuse_b")

    def forward(self, views: Tensor, return_detail: bool = False):
        if views.ndim != 4 or views.shape[1] != self.n_views or views.shape[3] != self.view_dim:
            raise ValueError(
                f"expected (batch, {self.n_views}, time, {self.view_dim}) input, got {views.shape}")
        batch = views.shape[0]
        means = views.mean(axis=2)  # (batch, n_views, view_dim)
        flat = means.reshape(batch, self.n_views * self.view_dim)
        z = linear(flat, self.fuse_w, self.fuse_b)
        if return_detail:
            return z, {"flat": flat}
        return z

    def parameters(self) -> dict:
        return {"temporal.fuse_w": self.fuse_w, "temporal.fuse_b": self.fuse_b}

    def weight_parameters(self) -> list:
        return [self.fuse_w]
