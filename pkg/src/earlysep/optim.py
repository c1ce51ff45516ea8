"""Bias-corrected Adam for named parameter tensors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import NumericsError, Tensor

__all__ = ["AdamState", "adam_step", "Adam"]


@dataclass
class AdamState:
    """Moment estimates for one parameter tensor."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.step_count < 0:
            raise ValueError("step_count must be non-negative")
        if not 0.0 < self.beta1 < 1.0:
            raise ValueError("beta1 must lie in (0, 1)")
        if not 0.0 < self.beta2 < 1.0:
            raise ValueError("beta2 must lie in (0, 1)")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.first_moment.shape != self.second_moment.shape:
            raise ValueError("moment arrays must have identical shape")

    @classmethod
    def initial(cls, shape, learning_rate: float = 1e-3, beta1: float = 0.9,
                beta2: float = 0.999, epsilon: float = 1e-8) -> "AdamState":
        return cls(
            first_moment=np.zeros(shape),
            second_moment=np.zeros(shape),
            learning_rate=learning_rate,
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
        )


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState, name: str = "parameter"):
    """One in-place Adam update; returns the updated (params, state) pair."""
    if params.shape != grads.shape:
        raise ValueError(f"gradient shape {grads.shape} does not match {name} shape {params.shape}")
    if params.shape != state.first_moment.shape:
        raise ValueError(f"optimizer state shape does not match {name}")
    if not np.all(np.isfinite(grads)):
        raise NumericsError(f"non-finite gradient for {name}")

    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    state.first_moment *= b1
    state.first_moment += (1.0 - b1) * grads
    state.second_moment *= b2
    state.second_moment += (1.0 - b2) * grads * grads
    m_hat = state.first_moment / (1.0 - b1 ** t)
    v_hat = state.second_moment / (1.0 - b2 ** t)
    params -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params, state


class Adam:
    """Adam over a dict of named :class:`Tensor` parameters.

    Each parameter keeps its own moment estimates and step counter, so
    updating different parameter subsets on different steps stays
    bias-correct per parameter.
    """

    def __init__(self, params: dict, learning_rate: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8):
        self.params: dict[str, Tensor] = dict(params)
        self.states: dict[str, AdamState] = {
            name: AdamState.initial(t.data.shape, learning_rate, beta1, beta2, epsilon)
            for name, t in self.params.items()
        }

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def step(self, names=None) -> None:
        """Update the named parameters (all of them when ``names`` is None).

        Parameters whose gradient slot is empty are left untouched.
        """
        if names is None:
            names = self.params.keys()
        for name in names:
            t = self.params[name]
            if t.grad is None:
                continue
            adam_step(t.data, t.grad, self.states[name], name=name)
