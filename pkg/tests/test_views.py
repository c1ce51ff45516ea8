"""The multi-view feature bank: shapes, init statistics, and gradients."""

import math

import numpy as np
import pytest

from earlysep import Tensor, ViewBank, gelu, grad_check, mse, passthrough_views


def make_bank(**kwargs):
    defaults = dict(d_in=4, n_views=3, view_dim=5, kernel_size=3, seed=99)
    defaults.update(kwargs)
    return ViewBank(**defaults)


def test_same_seed_gives_identical_banks():
    a, b = make_bank(), make_bank()
    for ka, kb in zip(a.kernels, b.kernels):
        assert np.array_equal(ka.data, kb.data)


def test_bank_shapes_at_reference_scale():
    # 35 views over 40 input features with width-5 kernels, 8-dim embeddings
    bank = ViewBank(d_in=40, n_views=35, view_dim=8, kernel_size=5, seed=1)
    assert len(bank.kernels) == 35
    for kernel in bank.kernels:
        assert kernel.shape == (8, 40, 5)


def test_kernel_init_statistics():
    # uniform on +-sqrt(1/(d_in*k)); the mean of 10^4 draws stays within
    # three standard errors of zero
    bank = ViewBank(d_in=10, n_views=20, view_dim=10, kernel_size=5, seed=7)
    draws = np.concatenate([k.data.ravel() for k in bank.kernels])
    assert draws.size == 10_000
    bound = math.sqrt(1.0 / (10 * 5))
    assert np.abs(draws).max() <= bound
    sigma = bound / math.sqrt(3.0)
    assert abs(draws.mean()) < 3.0 * sigma / 100.0


def test_biases_start_at_zero():
    assert all(np.all(b.data == 0.0) for b in make_bank().biases)


def test_forward_output_shape(rng):
    bank = ViewBank(d_in=4, n_views=3, view_dim=5, kernel_size=3, seed=0)
    out = bank.forward(Tensor(rng.normal(size=(2, 4, 8))), training=True)
    assert out.shape == (2, 3, 8, 5)


def test_zero_input_neutral_eval_stats_gives_zero(rng):
    bank = make_bank()
    for state in bank.bn_states:
        state.initialized = True  # neutral stats: zero mean, unit variance
    out = bank.forward(Tensor(np.zeros((2, 4, 6))), training=False)
    assert np.allclose(out.data, 0.0, atol=1e-12)


def test_identity_kernel_view_is_gelu_of_channel(rng):
    bank = ViewBank(d_in=3, n_views=1, view_dim=1, kernel_size=3, seed=0, eps=0.0)
    kernel = np.zeros((1, 3, 3))
    kernel[0, 0, 1] = 1.0  # center tap on channel 0
    bank.kernels[0].data[...] = kernel
    bank.biases[0].data[...] = 0.0
    bank.bn_states[0].initialized = True  # neutral running stats
    x = rng.normal(size=(2, 3, 6))
    out = bank.forward(Tensor(x), training=False)
    want = gelu(Tensor(x[:, 0, :])).data
    assert np.allclose(out.data[:, 0, :, 0], want, atol=1e-12)


def test_view_order_permutes_outputs(rng):
    bank = make_bank(n_views=4)
    x = Tensor(rng.normal(size=(2, 4, 6)))
    base = bank.forward(x, training=True).data
    perm = [2, 0, 3, 1]
    for attr in ("kernels", "biases", "gammas", "betas", "bn_states"):
        setattr(bank, attr, [getattr(bank, attr)[i] for i in perm])
    for state in bank.bn_states:
        state.initialized = False  # fresh stats either way: train mode recomputes
    permuted = bank.forward(x, training=True).data
    assert np.allclose(permuted, base[:, perm])


def test_grouped_mode_uses_single_channels(rng):
    bank = make_bank(mode="grouped", n_views=5)
    assert all(k.shape == (5, 1, 3) for k in bank.kernels)
    out = bank.forward(Tensor(rng.normal(size=(2, 4, 6))), training=True)
    assert out.shape == (2, 5, 6, 5)


def test_wrong_channel_count_rejected(rng):
    with pytest.raises(ValueError, match="channels"):
        make_bank().forward(Tensor(rng.normal(size=(2, 3, 6))), training=True)


def test_even_kernel_rejected():
    with pytest.raises(ValueError, match="odd"):
        make_bank(kernel_size=4)


def test_gradients_pass_finite_differences(rng):
    bank = ViewBank(d_in=2, n_views=2, view_dim=3, kernel_size=3, seed=5)
    x = Tensor(rng.normal(size=(2, 2, 5)), requires_grad=True)
    target = Tensor(rng.normal(size=(2, 2, 5, 3)))
    inputs = [x] + list(bank.parameters().values())
    err = grad_check(lambda: 0.1 * mse(bank.forward(x, training=True), target), inputs)
    assert err < 1e-4


def test_conv_bias_gradient_is_dead_under_batch_norm(rng):
    # mean subtraction cancels any constant channel shift, so the conv bias
    # cannot influence the output; its gradient must be (numerically) zero
    bank = make_bank()
    x = Tensor(rng.normal(size=(2, 4, 6)))
    target = Tensor(rng.normal(size=(2, 3, 6, 5)))
    mse(bank.forward(x, training=True), target).backward()
    for bias in bank.biases:
        assert np.all(np.abs(bias.grad) < 1e-12)


class TestPassthrough:
    def test_shape(self, rng):
        out = passthrough_views(Tensor(rng.normal(size=(3, 4, 7))))
        assert out.shape == (3, 1, 7, 4)

    def test_values_preserved(self, rng):
        x = rng.normal(size=(2, 3, 5))
        out = passthrough_views(Tensor(x))
        assert np.array_equal(out.data[:, 0], x.transpose(0, 2, 1))

    def test_gradient_is_permutation(self, rng):
        x = Tensor(rng.normal(size=(2, 3, 5)), requires_grad=True)
        target = Tensor(rng.normal(size=(2, 1, 5, 3)))
        assert grad_check(lambda: mse(passthrough_views(x), target), [x]) < 1e-6
