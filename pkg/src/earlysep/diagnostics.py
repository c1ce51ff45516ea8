"""Gradient-fidelity suite: finite-difference checks for every
differentiable operation plus the fully composed model loss.

Each check builds a small smooth scalar function at fixed toy shapes from a
fixed seed, so the suite is deterministic and completes in seconds.
"""

from __future__ import annotations

import numpy as np

from . import functional as F
from .gradcheck import grad_check
from .network import ModelConfig, build_network
from .tensor import Tensor
from .temporal import MeanFusion, TemporalEncoder
from .views import ViewBank, passthrough_views

__all__ = ["gradcheck_suite", "GRADCHECK_TOLERANCE", "toy_config"]

GRADCHECK_TOLERANCE = 1e-4


def toy_config(**overrides) -> ModelConfig:
    """Small composed-model configuration used by the gradient suite."""
    base = dict(d_in=3, seq_len=8, n_views=2, view_dim=4, view_kernel=3,
                long_kernel=5, short_kernel=3, pool_stride=2, long_channels=6,
                short_channels=4, heads=2, proj_dim=8, n_classes=3,
                alpha=1e-3, beta=1.0, epochs=1, batch_size=2, seed=7)
    base.update(overrides)
    return ModelConfig(**base)


def _rng():
    return np.random.default_rng(20240917)


def _check_conv_same():
    rng = _rng()
    x = Tensor(rng.normal(size=(2, 3, 6)), requires_grad=True)
    w = Tensor(rng.normal(size=(4, 3, 3)) * 0.4, requires_grad=True)
    b = Tensor(rng.normal(size=(4,)) * 0.1, requires_grad=True)
    target = Tensor(rng.normal(size=(2, 4, 6)))
    return lambda: F.mse(F.conv1d(x, w, b, "same"), target), [x, w, b]


def _check_conv_valid():
    rng = _rng()
    x = Tensor(rng.normal(size=(2, 3, 7)), requires_grad=True)
    w = Tensor(rng.normal(size=(4, 3, 3)) * 0.4, requires_grad=True)
    b = Tensor(rng.normal(size=(4,)) * 0.1, requires_grad=True)
    target = Tensor(rng.normal(size=(2, 4, 5)))
    return lambda: F.mse(F.conv1d(x, w, b, "valid"), target), [x, w, b]


def _check_batch_norm():
    rng = _rng()
    x = Tensor(rng.normal(size=(2, 3, 5)), requires_grad=True)
    gamma = Tensor(rng.normal(size=(3,)) * 0.5 + 1.0, requires_grad=True)
    beta = Tensor(rng.normal(size=(3,)) * 0.2, requires_grad=True)
    state = F.BatchNormState(3)
    target = Tensor(rng.normal(size=(2, 3, 5)))
    return lambda: F.mse(F.batch_norm1d(x, gamma, beta, state, True), target), [x, gamma, beta]


def _check_gelu():
    rng = _rng()
    x = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    return lambda: (F.gelu(x) * F.gelu(x)).mean(), [x]


def _check_maxpool():
    rng = _rng()
    x = Tensor(rng.normal(size=(2, 3, 8)), requires_grad=True)  # continuous draws: no ties
    return lambda: (F.maxpool1d(x, 2, 2) ** 2).mean(), [x]


def _check_avg_pool():
    rng = _rng()
    x = Tensor(rng.normal(size=(2, 3, 6)), requires_grad=True)
    return lambda: (F.adaptive_avg_pool1d(x) ** 2).mean(), [x]


def _check_linear():
    rng = _rng()
    x = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    w = Tensor(rng.normal(size=(4, 5)) * 0.5, requires_grad=True)
    b = Tensor(rng.normal(size=(5,)) * 0.1, requires_grad=True)
    return lambda: F.linear(x, w, b).sum(), [x, w, b]


def _check_attention():
    rng = _rng()
    tokens = Tensor(rng.normal(size=(2, 3, 4)), requires_grad=True)
    wq = Tensor(rng.normal(size=(4, 4)) * 0.5, requires_grad=True)
    wk = Tensor(rng.normal(size=(4, 4)) * 0.5, requires_grad=True)
    wv = Tensor(rng.normal(size=(4, 4)) * 0.5, requires_grad=True)
    return (lambda: (F.multihead_self_attention(tokens, wq, wk, wv, 2) ** 2).mean(),
            [tokens, wq, wk, wv])


def _check_cross_entropy():
    rng = _rng()
    logits = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
    labels = np.array([0, 2, 1, 2])
    return lambda: F.softmax_cross_entropy(logits, labels), [logits]


def _check_mse():
    rng = _rng()
    a = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    b = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    return lambda: F.mse(a, b), [a, b]


def _check_l2_penalty():
    rng = _rng()
    a = Tensor(rng.normal(size=(3, 2)), requires_grad=True)
    b = Tensor(rng.normal(size=(4,)), requires_grad=True)
    return lambda: F.l2_penalty([a, b]), [a, b]


def _check_view_bank():
    # The 0.1 loss scale keeps float noise on identically-zero gradient
    # coordinates (conv biases are cancelled by the following batch norm)
    # well below the 1e-8 floor of the relative-error denominator.
    rng = _rng()
    bank = ViewBank(d_in=3, n_views=2, view_dim=4, kernel_size=3, seed=11)
    x = Tensor(rng.normal(size=(2, 3, 6)), requires_grad=True)
    target = Tensor(rng.normal(size=(2, 2, 6, 4)))
    params = [x] + list(bank.parameters().values())
    return lambda: 0.1 * F.mse(bank.forward(x, training=True), target), params


def _check_passthrough_views():
    rng = _rng()
    x = Tensor(rng.normal(size=(2, 3, 5)), requires_grad=True)
    target = Tensor(rng.normal(size=(2, 1, 5, 3)))
    return lambda: F.mse(passthrough_views(x), target), [x]


def _check_temporal_encoder():
    rng = _rng()
    enc = TemporalEncoder(n_views=2, view_dim=4, long_channels=6, short_channels=4,
                          long_kernel=5, short_kernel=3, pool_stride=2, heads=2,
                          proj_dim=8, seed=13)
    views = Tensor(rng.normal(size=(2, 2, 8, 4)), requires_grad=True)
    target = Tensor(rng.normal(size=(2, 8)))
    params = [views] + list(enc.parameters().values())
    return lambda: 0.1 * F.mse(enc.forward(views), target), params


def _check_mean_fusion():
    rng = _rng()
    fusion = MeanFusion(n_views=2, view_dim=4, proj_dim=8, seed=17)
    views = Tensor(rng.normal(size=(2, 2, 8, 4)), requires_grad=True)
    target = Tensor(rng.normal(size=(2, 8)))
    params = [views] + list(fusion.parameters().values())
    return lambda: F.mse(fusion.forward(views), target), params


def _check_composed_model(config: ModelConfig | None):
    rng = _rng()
    cfg = config if config is not None else toy_config()
    model = build_network(cfg)
    x = Tensor(rng.normal(size=(cfg.batch_size, cfg.d_in, cfg.seq_len)), requires_grad=True)
    labels = rng.integers(0, cfg.n_classes, size=cfg.batch_size)

    def f():
        # Same 0.1 conditioning as the view-bank check (dead bias coordinates).
        parts = model.loss_tensors(x, labels, training=True)
        return 0.1 * (parts["l_mse"] + cfg.alpha * parts["l_reg"] + cfg.beta * parts["l_pred"])

    return f, [x] + list(model.parameters().values())


def gradcheck_suite(config: ModelConfig | None = None, corrupt: str | None = None) -> list:
    """Run every gradient check once; returns [(op_name, max_rel_error)].

    ``corrupt`` injects a fault into the named check's reported error so the
    failure path of callers can be exercised deliberately.
    """
    checks = [
        ("conv1d_same", _check_conv_same),
        ("conv1d_valid", _check_conv_valid),
        ("batch_norm1d", _check_batch_norm),
        ("gelu", _check_gelu),
        ("maxpool1d", _check_maxpool),
        ("adaptive_avg_pool1d", _check_avg_pool),
        ("linear", _check_linear),
        ("multihead_self_attention", _check_attention),
        ("softmax_cross_entropy", _check_cross_entropy),
        ("mse", _check_mse),
        ("l2_penalty", _check_l2_penalty),
        ("view_bank", _check_view_bank),
        ("passthrough_views", _check_passthrough_views),
        ("temporal_encoder", _check_temporal_encoder),
        ("mean_fusion", _check_mean_fusion),
        ("composed_model_loss", lambda: _check_composed_model(config)),
    ]
    if corrupt is not None and corrupt not in {name for name, _ in checks}:
        raise ValueError(f"unknown op name for fault injection: {corrupt!r}")
    results = []
    for name, make in checks:
        f, inputs = make()
        err = grad_check(f, inputs)
        if corrupt == name:
            err += 1.0  # injected fault for failure-path testing
        results.append((name, err))
    return results
