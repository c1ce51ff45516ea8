"""Alternating-objective training loop.

Mini-batch steps alternate between the two sub-objectives: odd steps move
the encoder and decoder down the reconstruction-plus-regularization
gradient, even steps move the encoder and classifier head down the
prediction gradient. A single Adam instance owns one persistent moment
state per parameter across both phases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import LossBreakdown, ModelConfig, ViewFusionNetwork
from .optim import Adam
from .seeds import derive_seed
from .tensor import NumericsError, Tensor, no_grad

__all__ = ["EpochLog", "TrainHistory", "TrainingDiverged", "train_alternating"]


class TrainingDiverged(RuntimeError):
    """The loss went non-finite; carries the epoch and step where it happened."""

    def __init__(self, epoch: int, step: int, detail: str):
        super().__init__(f"non-finite loss at epoch {epoch}, step {step}: {detail}")
        self.epoch = epoch
        self.step = step


@dataclass
class EpochLog:
    loss: LossBreakdown
    val_accuracy: float | None = None


@dataclass
class TrainHistory:
    epochs: list = field(default_factory=list)
    step_losses: list = field(default_factory=list)

    def final_val_accuracy(self) -> float | None:
        return self.epochs[-1].val_accuracy if self.epochs else None


def _validation_accuracy(model: ViewFusionNetwork, valid_set) -> float:
    x, y = valid_set
    with no_grad():
        _, logits, _ = model.forward(Tensor(x), training=False)
    return float((logits.data.argmax(axis=1) == np.asarray(y)).mean())


def train_alternating(model: ViewFusionNetwork, train_set, valid_set=None,
                      config: ModelConfig | None = None, mse_scale: float = 1.0) -> TrainHistory:
    """Train ``model`` on (x, y) arrays, alternating objectives per step.

    ``mse_scale`` rescales the reconstruction term inside the odd-step
    objective only (logged breakdowns stay canonical); it exists so tests
    can isolate the regularization gradient.
    """
    if config is None:
        config = model.config
    x_all, y_all = train_set
    x_all = np.asarray(x_all, dtype=np.float64)
    y_all = np.asarray(y_all)
    n = len(x_all)
    if n == 0:
        raise ValueError("training set is empty")
    if len(y_all) != n:
        raise ValueError("training features and labels differ in length")

    optimizer = Adam(model.parameters(), learning_rate=config.learning_rate)
    recon_names = model.reconstruction_parameter_names()
    pred_names = model.prediction_parameter_names()
    shuffle_rng = np.random.default_rng(derive_seed(config.seed, "shuffle"))

    history = TrainHistory()
    alpha, beta = config.alpha, config.beta
    step = 0
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        sums = np.zeros(3)
        n_steps = 0
        for lo in range(0, n, config.batch_size):
            idx = order[lo:lo + config.batch_size]
            step += 1
            xb = Tensor(x_all[idx])
            yb = y_all[idx]
            try:
                parts = model.loss_tensors(xb, yb, training=True)
            except NumericsError as exc:
                raise TrainingDiverged(epoch, step, str(exc)) from exc
            breakdown = LossBreakdown.compute(
                parts["l_mse"].item(), parts["l_reg"].item(), parts["l_pred"].item(), alpha, beta)
            if not breakdown.is_finite():
                raise TrainingDiverged(epoch, step, "loss components are not finite")

            optimizer.zero_grad()
            if step % 2 == 1:
                objective = None
                if mse_scale != 0.0:
                    objective = parts["l_mse"] if mse_scale == 1.0 else mse_scale * parts["l_mse"]
                if alpha != 0.0:
                    reg = alpha * parts["l_reg"]
                    objective = reg if objective is None else objective + reg
                if objective is not None:
                    objective.backward()
                    optimizer.step(recon_names)
            else:
                if beta != 0.0:
                    (beta * parts["l_pred"]).backward()
                    optimizer.step(pred_names)

            history.step_losses.append(breakdown)
            sums += (breakdown.l_mse, breakdown.l_reg, breakdown.l_pred)
            n_steps += 1

        means = sums / n_steps
        epoch_loss = LossBreakdown.compute(means[0], means[1], means[2], alpha, beta)
        val_acc = _validation_accuracy(model, valid_set) if valid_set is not None else None
        history.epochs.append(EpochLog(loss=epoch_loss, val_accuracy=val_acc))
    return history
