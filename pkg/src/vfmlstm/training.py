"""Sequence-by-sequence training loop (batch size 1, Adam, fixed epochs)."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DimensionError, NonFiniteError, WindowError
from .nn import AdamState, adam_step
from .windowing import SlidingDataset, train_val_split

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingProtocol:
    epochs: int = 10
    batch_size: int = 1
    validation_fraction: float = 0.05
    seed: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size != 1:
            raise ValueError("only batch_size=1 is supported")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in [0, 1)")


@dataclass
class TrainingHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    steps: int = 0

    def lines(self, timestamps: bool = True) -> list[str]:
        """``epoch,train_loss,val_loss,seconds`` rows, header first."""
        rows = ["epoch,train_loss,val_loss,seconds"]
        for e, (tr, va, sec) in enumerate(zip(self.train_loss, self.val_loss, self.seconds), start=1):
            rows.append(f"{e},{tr!r},{va!r},{sec if timestamps else 0.0!r}")
        return rows

    def write(self, path, timestamps: bool = True) -> None:
        Path(path).write_text("\n".join(self.lines(timestamps)) + "\n")


def shuffle_rng(seed: int) -> np.random.Generator:
    # separate stream from weight initialization, which uses PCG64(seed)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 1])))


def _check_shapes(model, dataset: SlidingDataset) -> None:
    _, l_i, m = dataset.X.shape
    n = dataset.Y.shape[2]
    if model.kind == "lstm":
        ok = m == model.input_size and n == model.output_size and dataset.X.shape[1] == dataset.Y.shape[1]
    else:
        cfg = model.config
        ok = l_i * m == model.input_size and (n, dataset.Y.shape[1]) == (cfg.output_features, cfg.output_steps)
    if not ok:
        raise DimensionError(
            f"dataset X{dataset.X.shape}/Y{dataset.Y.shape} does not fit {model.kind} model "
            f"(inputs {model.input_size}, outputs {model.output_size})"
        )


def train(model, dataset: SlidingDataset, protocol: TrainingProtocol,
          on_epoch: Callable[[int, float, float, float], None] | None = None):
    """Train ``model`` in place; returns ``(model, history)``.

    Each epoch visits the training windows in a seeded random order and
    takes one Adam step per window. The tail ``validation_fraction`` of the
    windows is only evaluated, never trained on.
    """
    train_set, val_set = train_val_split(dataset, protocol.validation_fraction)
    if len(train_set) == 0:
        raise WindowError("empty training split")
    _check_shapes(model, dataset)
    rng = shuffle_rng(protocol.seed)
    state = AdamState.fresh(model.n_params, lr=protocol.lr, beta1=protocol.beta1,
                            beta2=protocol.beta2, epsilon=protocol.epsilon)
    history = TrainingHistory()
    X, Y = train_set.X, train_set.Y
    for epoch in range(1, protocol.epochs + 1):
        tic = time.perf_counter()
        total = 0.0
        for idx in rng.permutation(len(train_set)):
            loss, grad = model.loss_and_grad(X[idx], Y[idx])
            if not math.isfinite(loss):
                raise NonFiniteError(f"non-finite loss at epoch {epoch}, sequence {train_set.starts[idx]}")
            try:
                adam_step(model.params, grad, state)
            except NonFiniteError as exc:
                raise NonFiniteError(f"epoch {epoch}, sequence {train_set.starts[idx]}: {exc}") from exc
            total += loss
        train_loss = total / len(train_set)
        if len(val_set):
            val_loss = float(np.mean([model.loss(x, y) for x, y in zip(val_set.X, val_set.Y)]))
        else:
            val_loss = float("nan")
        seconds = time.perf_counter() - tic
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        history.seconds.append(seconds)
        log.info("%d, %.6g, %.6g, %.2f", epoch, train_loss, val_loss, seconds)
        if on_epoch is not None:
            on_epoch(epoch, train_loss, val_loss, seconds)
    history.steps = state.t
    return model, history
