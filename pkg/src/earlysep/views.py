"""Learned multi-view expansion of a raw feature window.

Each view runs its own 1-D convolution bank over the input channels,
normalizes per output channel, and applies a GELU, so one (batch, channels,
time) window becomes a (batch, views, time, view_dim) stack of enriched
feature views. Views never mix with each other at this stage.
"""

from __future__ import annotations

import math

import numpy as np

from .functional import BatchNormState, batch_norm1d, conv1d, gelu
from .tensor import Tensor, slice_axis, stack

__all__ = ["ViewBank", "passthrough_views"]


class ViewBank:
    """Bank of independent convolutional feature views.

    ``mode="full"`` lets every view convolve all input channels;
    ``mode="grouped"`` restricts view ``g`` to input channel ``g % d_in``.
    Kernels are drawn uniformly from ``+-sqrt(1 / (fan_in * kernel))`` and
    biases start at zero; construction is deterministic given the seed.
    """

    def __init__(self, d_in: int, n_views: int, view_dim: int, kernel_size: int,
                 seed: int, mode: str = "full", momentum: float = 0.1, eps: float = 1e-5):
        if kernel_size % 2 == 0 or kernel_size < 1:
            raise ValueError("view kernel size must be odd (same padding)")
        if mode not in ("full", "grouped"):
            raise ValueError(f"unknown view mode {mode!r}")
        if d_in < 1 or n_views < 1 or view_dim < 1:
            raise ValueError("d_in, n_views and view_dim must all be >= 1")
        self.d_in = d_in
        self.n_views = n_views
        self.view_dim = view_dim
        self.kernel_size = kernel_size
        self.mode = mode

        rng = np.random.default_rng(seed)
        in_ch = d_in if mode == "full" else 1
        bound = math.sqrt(1.0 / (in_ch * kernel_size))
        self.kernels = []
        self.biases = []
        self.gammas = []
        self.betas = []
        self.bn_states = []
        for g in range(n_views):
            self.kernels.append(Tensor(
                rng.uniform(-bound, bound, size=(view_dim, in_ch, kernel_size)),
                requires_grad=True, name=f"views.kernel{g}"))
            self.biases.append(Tensor(np.zeros(view_dim), requires_grad=True, name=f"views.bias{g}"))
            self.gammas.append(Tensor(np.ones(view_dim), requires_grad=True, name=f"views.gamma{g}"))
            self.betas.append(Tensor(np.zeros(view_dim), requires_grad=True, name=f"views.beta{g}"))
            self.bn_states.append(BatchNormState(view_dim, momentum=momentum, eps=eps))

    def forward(self, x: Tensor, training: bool) -> Tensor:
        """Map (batch, d_in, time) to (batch, n_views, time, view_dim)."""
        if x.ndim != 3 or x.shape[1] != self.d_in:
            raise ValueError(f"expected input with {self.d_in} channels, got shape {x.shape}")
        outs = []
        for g in range(self.n_views):
            if self.mode == "full":
                src = x
            else:
                channel = g % self.d_in
                src = slice_axis(x, 1, channel, channel + 1)
            h = conv1d(src, self.kernels[g], self.biases[g], padding="same")
            h = batch_norm1d(h, self.gammas[g], self.betas[g], self.bn_states[g], training)
            h = gelu(h)
            outs.append(h.transpose(0, 2, 1))
        return stack(outs, axis=1)

    def parameters(self) -> dict:
        params = {}
        for g in range(self.n_views):
            params[f"views.kernel{g}"] = self.kernels[g]
            params[f"views.bias{g}"] = self.biases[g]
            params[f"views.gamma{g}"] = self.gammas[g]
            params[f"views.beta{g}"] = self.betas[g]
        return params

    def weight_parameters(self) -> list:
        return list(self.kernels)

    def state_arrays(self) -> dict:
        """Running-statistics buffers, keyed for checkpointing."""
        out = {}
        for g, st in enumerate(self.bn_states):
            if st.initialized:
                out[f"views.bn{g}.running_mean"] = st.running_mean
                out[f"views.bn{g}.running_var"] = st.running_var
        return out

    def load_state_arrays(self, arrays: dict) -> None:
        for g, st in enumerate(self.bn_states):
            mean_key = f"views.bn{g}.running_mean"
            var_key = f"views.bn{g}.running_var"
            if mean_key in arrays and var_key in arrays:
                st.running_mean = arrays[mean_key].copy()
                st.running_var = arrays[var_key].copy()
                st.initialized = True


def passthrough_views(x: Tensor) -> Tensor:
    """Repackage raw channels as a single identity view (no parameters)."""
    if x.ndim != 3:
        raise ValueError(f"expected a 3-D window tensor, got shape {x.shape}")
    batch, d_in, length = x.shape
    return x.transpose(0, 2, 1).reshape(batch, 1, length, d_in)
