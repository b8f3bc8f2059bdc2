"""Signal-to-noise-ratio classification loss over logit statistics.

For a batch of logits, each class n with at least two samples contributes
class-conditional statistics: the mean/variance of its own logit column
(mu_n, var_n) and of every other column i restricted to class-n rows
(mu_{i|n}, var_{i|n}).  With a per-class threshold eta_n, the intra- and
inter-class SNRs are

    s_n     = (mu_n - eta_n)^2 / var_n
    s_{i|n} = (eta_n - mu_{i|n})^2 / var_{i|n}

and the loss minimizes the noise-to-signal ratios 1/s plus hinge
penalties that keep eta_n below mu_n and above every mu_{i|n}:

    pair(n, i) = var_n/((mu_n-eta_n)^2 + eps)
               + var_{i|n}/((eta_n-mu_{i|n})^2 + eps)
               + lam * (max(0, mu_{i|n}-eta_n-margin)
                        + max(0, eta_n-mu_n+margin))

summed over all ordered pairs (n, i != n) with class-n statistics
present, optionally divided by the pair count.  eps regularizes the
squared distances so untrained, near-constant logits keep the loss
finite.

Thresholds live in EtaState and are not differentiated through; they are
refreshed by the explicit rule eta_n = mean_n - m_mult * std_n, either
every batch or once per epoch.  The backward pass differentiates the loss
analytically through both the sample means and the unbiased sample
variances.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "SnrLossConfig",
    "LogitClassStats",
    "EtaState",
    "class_conditional_stats",
    "snr_pair_loss",
    "snr_total_loss",
    "snr_loss_backward",
    "eta_update",
]


@dataclass(frozen=True)
class SnrLossConfig:
    """Hyperparameters of the SNR loss.

    lam      -- multiplier on the hinge penalties (Lagrange-style).
    margin   -- hinge margin; the eta update's m_mult already offsets the
                threshold by multiples of the class std, so this defaults
                to 0 and is a separate knob on purpose.
    eps      -- floor added to squared mean-threshold distances.  Every
                class-pair mean must cross its threshold during training
                (the ordering constraints start out violated), and the
                1/s slope near a crossing grows like var/eps^1.5, so a
                too-small floor lets a single near-crossing batch emit
                gradients orders of magnitude above cross entropy's and
                blow up the run.  0.25 keeps the worst-case slope at the
                scale of the variances themselves.
    weight   -- multiplier on the SNR term when combined with cross
                entropy (total = CE + weight * SNR).
    normalize_pairs -- divide the pair sum by the number of summed pairs,
                making the magnitude independent of batch composition;
                disable for the raw double sum.
    """

    lam: float = 1.0
    margin: float = 0.0
    eps: float = 0.25
    weight: float = 1.0
    normalize_pairs: bool = True

    def __post_init__(self):
        for name in ("lam", "margin", "eps", "weight"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class LogitClassStats:
    """Class-conditional logit statistics for one batch.

    mean[n, i] / var[n, i] hold the sample mean and unbiased variance of
    logit column i over the rows labeled n; row n is valid only where
    present[n] (count[n] >= 2).  mean[n, n] is the own-logit statistic
    mu_n, off-diagonal entries are mu_{i|n}.
    """

    present: np.ndarray  # bool[C]
    count: np.ndarray  # int[C]
    mean: np.ndarray  # float[C, C]
    var: np.ndarray  # float[C, C]

    @property
    def class_count(self) -> int:
        return self.present.size

    @property
    def empty(self) -> bool:
        return not bool(self.present.any())


@dataclass(frozen=True)
class EtaState:
    """Per-class thresholds plus the update rule's configuration.

    After any update, eta[n] equals mean_n - m_mult * std_n computed from
    the statistics fed to that update; classes absent from the statistics
    keep their previous value.
    """

    eta: np.ndarray
    m_mult: float = 4.0
    mode: str = "batch"  # "batch" or "epoch"
    initialized: bool = False

    def __post_init__(self):
        if self.mode not in ("batch", "epoch"):
            raise ValueError(f"mode must be 'batch' or 'epoch', got {self.mode!r}")
        eta = np.asarray(self.eta, dtype=np.float64)
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)

    @classmethod
    def fresh(cls, class_count: int, m_mult: float = 4.0, mode: str = "batch"):
        return cls(eta=np.zeros(class_count), m_mult=m_mult, mode=mode)


def class_conditional_stats(
    logits: np.ndarray, labels: np.ndarray, class_count: int | None = None
) -> LogitClassStats:
    """Per-class means and unbiased variances of every logit column.

    Classes with fewer than two samples in the batch are omitted (the
    unbiased variance needs two); if no class reaches two samples the
    result is empty and the loss contributes zero.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2 or logits.shape[0] == 0:
        raise ValueError("logits must be a non-empty [samples x classes] matrix")
    if labels.shape != (logits.shape[0],):
        raise ValueError("labels must match the number of logit rows")
    width = logits.shape[1]
    c = int(class_count) if class_count is not None else width
    if c != width:
        raise ValueError("class_count must equal the logit width")
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError("labels out of range")

    present = np.zeros(c, dtype=bool)
    count = np.zeros(c, dtype=np.int64)
    mean = np.zeros((c, width))
    var = np.zeros((c, width))
    for n in np.unique(labels):
        rows = logits[labels == n]
        count[n] = rows.shape[0]
        if rows.shape[0] < 2:
            continue
        present[n] = True
        mean[n] = rows.mean(axis=0)
        var[n] = rows.var(axis=0, ddof=1)
    return LogitClassStats(present=present, count=count, mean=mean, var=var)


def snr_pair_loss(
    mu_n: float,
    var_n: float,
    mu_in: float,
    var_in: float,
    eta_n: float,
    cfg: SnrLossConfig,
) -> float:
    """Loss contribution of one (true class n, other logit i) pair."""
    nsr_self = var_n / ((mu_n - eta_n) ** 2 + cfg.eps)
    nsr_cross = var_in / ((eta_n - mu_in) ** 2 + cfg.eps)
    penalty = max(0.0, mu_in - eta_n - cfg.margin) + max(
        0.0, eta_n - mu_n + cfg.margin
    )
    return nsr_self + nsr_cross + cfg.lam * penalty


def _pair_count(stats: LogitClassStats) -> int:
    width = stats.mean.shape[1]
    return int(stats.present.sum()) * (width - 1)


def snr_total_loss(stats: LogitClassStats, eta: EtaState, cfg: SnrLossConfig) -> float:
    """Sum of snr_pair_loss over every present class n and logit i != n,
    divided by the pair count when cfg.normalize_pairs is set."""
    if not eta.initialized:
        raise ValueError("eta thresholds have not been initialized")
    if stats.empty:
        return 0.0
    width = stats.mean.shape[1]
    total = 0.0
    for n in np.flatnonzero(stats.present):
        e = eta.eta[n]
        d_self = stats.mean[n, n] - e
        nsr_self = stats.var[n, n] / (d_self * d_self + cfg.eps)
        pen_self = max(0.0, e - stats.mean[n, n] + cfg.margin)
        others = np.arange(width) != n
        d_cross = e - stats.mean[n, others]
        nsr_cross = stats.var[n, others] / (d_cross * d_cross + cfg.eps)
        pen_cross = np.maximum(0.0, stats.mean[n, others] - e - cfg.margin)
        total += (width - 1) * (nsr_self + cfg.lam * pen_self)
        total += float(nsr_cross.sum() + cfg.lam * pen_cross.sum())
    if cfg.normalize_pairs:
        total /= _pair_count(stats)
    return total


def snr_loss_backward(
    logits: np.ndarray,
    labels: np.ndarray,
    eta: EtaState,
    cfg: SnrLossConfig,
    class_count: int | None = None,
) -> np.ndarray:
    """Exact gradient of snr_total_loss with respect to every logit.

    eta is treated as a constant (the update rule lives outside the
    optimizer).  Gradients flow through both the sample mean
    (d mean / d x_r = 1/k) and the unbiased sample variance
    (d var / d x_r = 2 (x_r - mean) / (k - 1)).  Hinge penalties use the
    subgradient that is zero at the kink.
    """
    if not eta.initialized:
        raise ValueError("eta thresholds have not been initialized")
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    stats = class_conditional_stats(logits, labels, class_count)
    grad = np.zeros_like(logits)
    if stats.empty:
        return grad
    width = logits.shape[1]
    scale = 1.0 / _pair_count(stats) if cfg.normalize_pairs else 1.0

    for n in np.flatnonzero(stats.present):
        rows = labels == n
        k = stats.count[n]
        e = eta.eta[n]

        # d loss / d mean[n, :] and d loss / d var[n, :]
        dmean = np.zeros(width)
        dvar = np.zeros(width)

        d_self = stats.mean[n, n] - e
        denom_self = d_self * d_self + cfg.eps
        dmean[n] = (width - 1) * (
            -2.0 * stats.var[n, n] * d_self / (denom_self * denom_self)
            - cfg.lam * (1.0 if e - stats.mean[n, n] + cfg.margin > 0 else 0.0)
        )
        dvar[n] = (width - 1) / denom_self

        others = np.arange(width) != n
        d_cross = e - stats.mean[n, others]
        denom_cross = d_cross * d_cross + cfg.eps
        dmean[others] = (
            2.0 * stats.var[n, others] * d_cross / (denom_cross * denom_cross)
            + cfg.lam * (stats.mean[n, others] - e - cfg.margin > 0)
        )
        dvar[others] = 1.0 / denom_cross

        centered = logits[rows] - stats.mean[n]
        grad[rows] += scale * (dmean / k + dvar * 2.0 * centered / (k - 1))
    return grad


def eta_update(state: EtaState, stats: LogitClassStats) -> EtaState:
    """New thresholds eta_n = mean_n - m_mult * std_n for present classes.

    Classes absent from the statistics keep their previous eta.  std is
    the square root of the unbiased variance; the returned state is
    marked initialized.
    """
    if stats.empty:
        raise ValueError("eta_update needs statistics for at least one class")
    if stats.class_count != state.eta.size:
        raise ValueError("class count mismatch between state and statistics")
    eta = state.eta.copy()
    for n in np.flatnonzero(stats.present):
        eta[n] = stats.mean[n, n] - state.m_mult * np.sqrt(stats.var[n, n])
    return replace(state, eta=eta, initialized=True)
