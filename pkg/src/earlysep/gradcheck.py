"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, no_grad

__all__ = ["grad_check"]


def grad_check(f, inputs, step: float = 1e-4) -> float:
    """Compare analytic gradients of ``f`` against central differences.

    ``f`` is a zero-argument callable that rebuilds a scalar loss from the
    given input tensors each time it is invoked; ``inputs`` are the tensors
    whose gradients are checked (they must have ``requires_grad`` set).

    Returns the maximum over all coordinates of
    ``|analytic - numeric| / max(1e-8, |analytic| + |numeric|)``.
    """
    inputs = list(inputs)
    for t in inputs:
        t.grad = None
    out = f()
    if not isinstance(out, Tensor) or out.size != 1:
        raise ValueError("grad_check requires a scalar-valued tensor function")
    out.backward()
    analytic = [
        (t.grad.copy() if t.grad is not None else np.zeros_like(t.data)) for t in inputs
    ]

    worst = 0.0
    for t, grads in zip(inputs, analytic):
        flat = t.data.reshape(-1)
        flat_grad = grads.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            with no_grad():
                f_plus = float(f().data)
            flat[i] = original - step
            with no_grad():
                f_minus = float(f().data)
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * step)
            a = float(flat_grad[i])
            err = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
            if err > worst:
                worst = err
    return worst
