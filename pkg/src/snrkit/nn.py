"""Minimal feed-forward classifier with manual backprop and momentum SGD.

A plain ReLU MLP with identity output (logits), float64 throughout, exact
chain-rule gradients, and a single-threaded training loop that is
bit-reproducible given (seed, config, data).  The loss is cross entropy,
optionally plus the SNR statistics loss with batch-wise or epoch-wise
threshold updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data_io import BatchStream, Dataset
from .snr_loss import (
    EtaState,
    LogitClassStats,
    SnrLossConfig,
    class_conditional_stats,
    eta_update,
    snr_loss_backward,
    snr_total_loss,
)

__all__ = [
    "DivergenceError",
    "MlpModel",
    "TrainConfig",
    "MetricsRecord",
    "init_mlp",
    "forward",
    "forward_cached",
    "backward",
    "softmax_cross_entropy",
    "sgd_momentum_step",
    "effective_batch_size",
    "evaluate_accuracy",
    "train",
    "LOSS_MODES",
]

LOSS_MODES = ("ce", "ce-snr-batch", "ce-snr-epoch")


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss or parameter."""


@dataclass
class MlpModel:
    """Weights/biases per layer; ReLU on hidden layers, identity output."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def copy(self) -> "MlpModel":
        return MlpModel(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def init_mlp(dims: list[int], seed) -> MlpModel:
    """Fan-in-scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)); zero biases."""
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError("dims must list at least input and output sizes")
    rng = np.random.default_rng([int(seed), 0x1217])
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights=weights, biases=biases)


def forward_cached(model: MlpModel, x: np.ndarray):
    """Logits plus the per-layer activations needed for backprop."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.weights[0].shape[0]:
        raise ValueError(
            f"input width {x.shape} does not match model input {model.weights[0].shape[0]}"
        )
    activations = [x]
    a = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w + b
        a = z if i == last else np.maximum(z, 0.0)
        activations.append(a)
    return a, activations


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    return forward_cached(model, x)[0]


def backward(model: MlpModel, activations: list[np.ndarray], dlogits: np.ndarray):
    """Exact parameter gradients for a given dL/dlogits.

    ReLU masks are recovered from the cached activations (a > 0 iff
    z > 0 for ReLU outputs).
    """
    if dlogits.shape != activations[-1].shape:
        raise ValueError("dlogits shape does not match the logits")
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    delta = np.asarray(dlogits, dtype=np.float64)
    for i in range(len(model.weights) - 1, -1, -1):
        grads_w[i] = activations[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (activations[i] > 0.0)
    return grads_w, grads_b


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross entropy and its gradient (softmax - onehot) / n."""
    logits = np.asarray(logits, dtype=np.float64)
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_z[:, None]
    loss = -log_probs[np.arange(n), labels].mean()
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def sgd_momentum_step(model: MlpModel, grads_w, grads_b, velocity, lr, beta):
    """Classical momentum: v <- beta*v + g; theta <- theta - lr*v.

    velocity is a (vw, vb) pair of lists, mutated in place; pass None to
    start from zero velocity.  Returns the velocity for chaining.
    """
    if velocity is None:
        velocity = (
            [np.zeros_like(w) for w in model.weights],
            [np.zeros_like(b) for b in model.biases],
        )
    vw, vb = velocity
    for i in range(len(model.weights)):
        vw[i] *= beta
        vw[i] += grads_w[i]
        model.weights[i] -= lr * vw[i]
        vb[i] *= beta
        vb[i] += grads_b[i]
        model.biases[i] -= lr * vb[i]
    return velocity


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; defaults follow the desk-scale protocol."""

    lr: float = 0.05
    momentum_beta: float = 0.9
    batch_size: int = 1024
    epochs: int = 20
    seed: int = 0
    loss_mode: str = "ce"
    snr: SnrLossConfig = field(default_factory=SnrLossConfig)
    m_mult: float = 4.0
    hidden_dims: tuple[int, ...] = (256, 128)
    lr_decay_every: int = 10
    lr_decay_factor: float = 0.5
    # Elementwise cap on the weighted SNR logit gradient, in multiples of
    # 1/batch (cross entropy's own per-entry bound).  When class pairs
    # genuinely overlap, the threshold-ordering constraints are infeasible,
    # the hinge pressure never shuts off, and the scale-invariant SNR terms
    # let logits inflate until near-crossing spikes wreck the run; the cap
    # keeps the SNR contribution at cross entropy's scale.  0 disables.
    snr_grad_clip: float = 1.0
    # Global parameter-gradient norm clip (applies in every loss mode).
    # Healthy runs stay well under 10; a runaway from inflated activations
    # grows without bound, so this is a circuit breaker, not a tuning
    # knob.  0 disables.
    grad_clip_norm: float = 25.0

    def __post_init__(self):
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"loss_mode must be one of {LOSS_MODES}")
        if not (self.lr > 0 and np.isfinite(self.lr)):
            raise ValueError("lr must be positive")
        if not 0.0 <= self.momentum_beta < 1.0:
            raise ValueError("momentum_beta must be in [0, 1)")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if self.lr_decay_every < 1 or not 0.0 < self.lr_decay_factor <= 1.0:
            raise ValueError("bad lr decay configuration")
        if self.snr_grad_clip < 0 or not np.isfinite(self.snr_grad_clip):
            raise ValueError("snr_grad_clip must be finite and >= 0")
        if self.grad_clip_norm < 0 or not np.isfinite(self.grad_clip_norm):
            raise ValueError("grad_clip_norm must be finite and >= 0")


@dataclass(frozen=True)
class MetricsRecord:
    epoch: int
    train_loss_ce: float
    train_loss_snr: float
    val_accuracy: float
    eta_snapshot: tuple[float, ...]


def effective_batch_size(requested: int, train_size: int) -> int:
    """Batch size capped at ceil(n/8) for small train splits so per-batch
    class statistics keep enough samples."""
    if train_size >= 8192:
        return min(requested, train_size)
    return min(requested, math.ceil(train_size / 8))


def evaluate_accuracy(model: MlpModel, ds: Dataset, batch: int = 4096) -> float:
    correct = 0
    for start in range(0, len(ds), batch):
        logits = forward(model, ds.inputs[start : start + batch])
        correct += int((logits.argmax(axis=1) == ds.labels[start : start + batch]).sum())
    return correct / len(ds)


class _EpochStats:
    """Accumulates class-conditional first/second moments across batches."""

    def __init__(self, class_count: int):
        self.count = np.zeros(class_count, dtype=np.int64)
        self.sum = np.zeros((class_count, class_count))
        self.sumsq = np.zeros((class_count, class_count))

    def add(self, logits: np.ndarray, labels: np.ndarray):
        for n in np.unique(labels):
            rows = logits[labels == n]
            self.count[n] += rows.shape[0]
            self.sum[n] += rows.sum(axis=0)
            self.sumsq[n] += (rows * rows).sum(axis=0)

    def finalize(self) -> LogitClassStats:
        c = self.count.size
        present = self.count >= 2
        mean = np.zeros((c, c))
        var = np.zeros((c, c))
        for n in np.flatnonzero(present):
            k = self.count[n]
            mean[n] = self.sum[n] / k
            var[n] = np.maximum(self.sumsq[n] - k * mean[n] ** 2, 0.0) / (k - 1)
        return LogitClassStats(
            present=present, count=self.count.copy(), mean=mean, var=var
        )


def _check_finite(model: MlpModel, context: str):
    for arr in (*model.weights, *model.biases):
        if not np.all(np.isfinite(arr)):
            raise DivergenceError(f"non-finite parameters {context}")


def train(
    model: MlpModel, train_set: Dataset, val_set: Dataset, cfg: TrainConfig
) -> list[MetricsRecord]:
    """Full training loop; one MetricsRecord per epoch.

    Per-epoch seeded reshuffle, forward, CE (+ weighted SNR) loss,
    backprop, momentum step.  Thresholds are initialized by a statistics
    pass before the first optimizer step (first batch for batch-wise,
    full forward epoch for epoch-wise) and refreshed at the configured
    cadence.  A zero SNR weight short-circuits all SNR bookkeeping, so
    the run is bit-identical to plain CE.  Non-finite losses or
    parameters abort with DivergenceError.
    """
    c = train_set.class_count
    snr_active = cfg.loss_mode != "ce" and cfg.snr.weight != 0.0
    eta_mode = "epoch" if cfg.loss_mode == "ce-snr-epoch" else "batch"
    stream = BatchStream(
        train_set, effective_batch_size(cfg.batch_size, len(train_set)), cfg.seed
    )
    eta = EtaState.fresh(c, m_mult=cfg.m_mult, mode=eta_mode)

    if snr_active:  # threshold init before the first optimizer step
        init_stats = _EpochStats(c)
        for x, y in stream.epoch_batches(0):
            init_stats.add(forward(model, x), y)
            if eta_mode == "batch":
                break  # one statistics pass on the first batch
        first = init_stats.finalize()
        if not first.empty:
            eta = eta_update(eta, first)
        # else: initialized lazily by the first batch with usable statistics

    velocity = None
    records = []
    for epoch in range(cfg.epochs):
        lr = cfg.lr * cfg.lr_decay_factor ** (epoch // cfg.lr_decay_every)
        ce_sum = 0.0
        snr_sum = 0.0
        seen = 0
        epoch_stats = _EpochStats(c) if snr_active and eta_mode == "epoch" else None
        for x, y in stream.epoch_batches(epoch):
            logits, cache = forward_cached(model, x)
            ce, dlogits = softmax_cross_entropy(logits, y)
            snr_val = 0.0
            if snr_active:
                stats = class_conditional_stats(logits, y)
                if eta.initialized:
                    snr_val = snr_total_loss(stats, eta, cfg.snr)
                    if not stats.empty:
                        g_snr = cfg.snr.weight * snr_loss_backward(
                            logits, y, eta, cfg.snr
                        )
                        if cfg.snr_grad_clip > 0:
                            cap = cfg.snr_grad_clip / len(y)
                            np.clip(g_snr, -cap, cap, out=g_snr)
                        dlogits = dlogits + g_snr
                if epoch_stats is not None:
                    epoch_stats.add(logits, y)
                elif not stats.empty:
                    eta = eta_update(eta, stats)  # also performs lazy init
            total = ce + cfg.snr.weight * snr_val if snr_active else ce
            if not np.isfinite(total):
                raise DivergenceError(
                    f"non-finite loss {total} at epoch {epoch + 1}"
                )
            grads_w, grads_b = backward(model, cache, dlogits)
            if cfg.grad_clip_norm > 0:
                norm = math.sqrt(
                    sum(float((g * g).sum()) for g in (*grads_w, *grads_b))
                )
                if norm > cfg.grad_clip_norm:
                    scale = cfg.grad_clip_norm / norm
                    grads_w = [g * scale for g in grads_w]
                    grads_b = [g * scale for g in grads_b]
            velocity = sgd_momentum_step(
                model, grads_w, grads_b, velocity, lr, cfg.momentum_beta
            )
            _check_finite(model, f"after step at epoch {epoch + 1}")
            ce_sum += ce * len(y)
            snr_sum += snr_val * len(y)
            seen += len(y)
        if epoch_stats is not None:
            final = epoch_stats.finalize()
            if not final.empty:
                eta = eta_update(eta, final)
        records.append(
            MetricsRecord(
                epoch=epoch + 1,
                train_loss_ce=ce_sum / seen,
                train_loss_snr=snr_sum / seen,
                val_accuracy=evaluate_accuracy(model, val_set),
                eta_snapshot=tuple(float(v) for v in eta.eta) if snr_active else (),
            )
        )
    return records
