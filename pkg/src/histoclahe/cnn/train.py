"""Mini-batch SGD training and evaluation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..metrics import ConfusionMatrix, tally_confusion
from .network import Network, NetworkSpec

__all__ = ["TrainConfig", "TrainResult", "TrainingDivergence", "train_classifier", "evaluate_classifier"]

log = logging.getLogger(__name__)


class TrainingDivergence(FloatingPointError):
    def __init__(self, epoch: int, loss: float, arm: str | None = None):
        where = f" in arm {arm!r}" if arm else ""
        super().__init__(f"training diverged{where} at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss
        self.arm = arm


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.05
    epochs: int = 30
    batch_size: int = 16
    seed: int = 0


@dataclass
class TrainResult:
    network: Network
    # mean mini-batch loss seen during each epoch
    loss_trace: list[float] = field(default_factory=list)


def train_classifier(spec: NetworkSpec, images: np.ndarray, labels, hyper: TrainConfig) -> TrainResult:
    """Train with plain SGD on shuffled mini-batches.

    Weights are initialised from ``spec.seed``; the shuffle order comes from
    ``hyper.seed``.  Identical inputs give bit-identical parameters.
    """
    x = np.asarray(images, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.shape[0] == 0:
        raise ValueError("training set is empty")
    if x.shape[0] != y.shape[0]:
        raise ValueError("images and labels differ in length")
    net = Network(spec)
    if (y < 0).any() or (y >= spec.num_classes).any():
        raise ValueError(f"labels must lie in [0, {spec.num_classes})")
    rng = np.random.default_rng(hyper.seed)
    n = x.shape[0]
    trace: list[float] = []
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, hyper.batch_size):
            idx = order[start:start + hyper.batch_size]
            loss, grads = net.loss_and_grads(x[idx], y[idx])
            if not np.isfinite(loss):
                raise TrainingDivergence(epoch, loss)
            total += loss * len(idx)
            for p, g in zip(net.params, grads):
                p -= hyper.lr * g
        trace.append(total / n)
        log.debug("epoch %d loss %.6f", epoch, trace[-1])
    return TrainResult(net, trace)


def evaluate_classifier(network: Network, images: np.ndarray, labels, batch_size: int = 64):
    """Predicted classes (argmax, lowest index on ties) and the confusion matrix
    with class 1 as the positive class."""
    x = np.asarray(images, dtype=np.float64)
    preds = np.concatenate(
        [network.predict(x[i:i + batch_size]) for i in range(0, x.shape[0], batch_size)]
    ) if x.shape[0] else np.zeros(0, dtype=np.int64)
    cm: ConfusionMatrix = tally_confusion(preds.tolist(), np.asarray(labels).tolist(), positive=1)
    return preds, cm
