"""Linear classifiers for independent Bernoulli observations.

Binary problem: each coordinate x_i ~ Bernoulli(theta_i); class 0 means
theta_i < p_i in every coordinate, class 1 means theta_i >= p_i.  Two
linear scores are compared under identical simulated draws:

  * arccos weighting  w_i = arccos(p_i) -- derived from maximizing the
    worst-case true-positive probability s/(1+s) through the Fisher
    information of the Bernoulli family (variance-stabilizing
    reparameterization, evaluated at the per-coordinate boundary p_i);
  * likelihood-ratio weighting  w_i = -log(p_i) -- the plug-in maximum
    likelihood ratio score.

Both are calibrated the same way: the decision threshold tau maximizes
empirical accuracy on a held-out calibration sample.  The theta-sampling
protocol is a configuration choice; the default draws theta_i uniformly
below p_i for class 0 and uniformly on [p_i, min(1, upper_factor*p_i)]
for class 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "BernoulliProblem",
    "LinearClassifier",
    "SimProtocol",
    "SimResult",
    "fisher_information_bernoulli",
    "snr_classifier_weights",
    "ml_classifier_weights",
    "calibrate_tau",
    "simulate_accuracy",
    "benchmark_configuration",
]

ThetaSampler = Callable[[np.random.Generator, np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class BernoulliProblem:
    """Per-coordinate class boundaries p_i, each strictly inside (0, 1)."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("p must be a non-empty 1-d vector")
        if not np.all((p > 0.0) & (p < 1.0)):
            raise ValueError("every p_i must lie strictly in (0, 1)")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def dim(self) -> int:
        return self.p.size


@dataclass(frozen=True)
class LinearClassifier:
    """Score w . x compared against threshold tau; class 1 iff score > tau."""

    weights: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError("weights must be 1-d")
        if not np.isfinite(self.tau):
            raise ValueError("tau must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def scores(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.weights

    def predict(self, x: np.ndarray) -> np.ndarray:
        return (self.scores(x) > self.tau).astype(np.int64)

    def with_tau(self, tau: float) -> "LinearClassifier":
        return LinearClassifier(weights=self.weights, tau=float(tau))


@dataclass(frozen=True)
class SimProtocol:
    """How theta is drawn within each class, plus trial counts and seed.

    Default samplers: class 0 draws theta_i ~ U(0, p_i); class 1 draws
    theta_i ~ U(p_i, min(1, upper_factor * p_i)).  Custom samplers
    (rng, p, n) -> theta matrix may be supplied; they must respect
    theta_i < p_i for class 0 and theta_i >= p_i for class 1.
    """

    n_trials: int = 100_000
    seed: int = 0
    upper_factor: float = 10.0
    calibration_trials: int = 20_000
    sampler_class0: ThetaSampler | None = field(default=None, repr=False)
    sampler_class1: ThetaSampler | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.n_trials < 2:
            raise ValueError("n_trials must be >= 2")
        if self.calibration_trials < 2:
            raise ValueError("calibration_trials must be >= 2")
        if self.upper_factor <= 1.0:
            raise ValueError("upper_factor must exceed 1")

    def sample_theta(self, rng: np.random.Generator, p: np.ndarray, label: int, n: int) -> np.ndarray:
        if label == 0:
            if self.sampler_class0 is not None:
                return self.sampler_class0(rng, p, n)
            return rng.uniform(0.0, p, size=(n, p.size))
        if self.sampler_class1 is not None:
            return self.sampler_class1(rng, p, n)
        hi = np.minimum(1.0, self.upper_factor * p)
        return rng.uniform(p, hi, size=(n, p.size))


@dataclass(frozen=True)
class SimResult:
    acc_snr: float
    acc_ml: float
    tau_snr: float
    tau_ml: float
    n_trials: int
    seed: int


def benchmark_configuration() -> BernoulliProblem:
    """The 10-coordinate benchmark: four rare boundaries at 0.001, six at 0.1."""
    return BernoulliProblem(p=np.array([0.001] * 4 + [0.1] * 6))


def fisher_information_bernoulli(theta: np.ndarray) -> np.ndarray:
    """Diagonal of the Fisher information matrix: 1 / (theta_i (1 - theta_i)).

    Each coordinate is an independent Bernoulli(theta_i), so the matrix is
    diagonal; theta_i in {0, 1} makes it singular and is rejected.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if not np.all((theta > 0.0) & (theta < 1.0)):
        raise ValueError("Fisher information is singular at theta in {0, 1}")
    return 1.0 / (theta * (1.0 - theta))


def snr_classifier_weights(
    prob: BernoulliProblem, protocol: SimProtocol | None = None
) -> LinearClassifier:
    """arccos-weighted linear score, w_i = arccos(p_i) in radians.

    Rare coordinates (small p_i) approach the maximal weight pi/2; as
    p_i -> 1 the coordinate carries no weight.  When a protocol is given,
    tau is calibrated on a held-out sample; otherwise tau = 0.
    """
    c = LinearClassifier(weights=np.arccos(prob.p))
    if protocol is not None:
        c = c.with_tau(calibrate_tau(c, prob, protocol))
    return c


def ml_classifier_weights(
    prob: BernoulliProblem, protocol: SimProtocol | None = None
) -> LinearClassifier:
    """Likelihood-ratio linear score, w_i = -log(p_i)."""
    c = LinearClassifier(weights=-np.log(prob.p))
    if protocol is not None:
        c = c.with_tau(calibrate_tau(c, prob, protocol))
    return c


def _draw_trials(
    prob: BernoulliProblem, protocol: SimProtocol, rng: np.random.Generator, n: int
):
    """Balanced paired draws: labels, theta per protocol, x ~ Bernoulli(theta)."""
    n0 = n // 2
    labels = np.concatenate([np.zeros(n0, np.int64), np.ones(n - n0, np.int64)])
    theta = np.empty((n, prob.dim))
    theta[:n0] = protocol.sample_theta(rng, prob.p, 0, n0)
    theta[n0:] = protocol.sample_theta(rng, prob.p, 1, n - n0)
    x = (rng.uniform(size=theta.shape) < theta).astype(np.float64)
    return x, labels


def calibrate_tau(
    c: LinearClassifier, prob: BernoulliProblem, protocol: SimProtocol
) -> float:
    """Threshold maximizing empirical accuracy on a calibration sample.

    Candidates are midpoints between adjacent achievable scores plus 0 and
    outer sentinels; accuracy ties break toward the smallest |tau| (then
    the smallest tau), so an all-zero-weight classifier gets tau = 0.
    Deterministic given the protocol seed (which is offset so calibration
    draws never overlap the evaluation draws).
    """
    rng = np.random.default_rng([protocol.seed, 0xCA11B])
    x, labels = _draw_trials(prob, protocol, rng, protocol.calibration_trials)
    scores = c.scores(x)
    uniq = np.unique(scores)
    if uniq.size == 1:
        candidates = np.array([0.0])
    else:
        mids = (uniq[:-1] + uniq[1:]) / 2.0
        span = uniq[-1] - uniq[0]
        candidates = np.concatenate(
            [[0.0, uniq[0] - span - 1.0, uniq[-1] + span + 1.0], mids]
        )
    # accuracy of "class 1 iff score > tau" for every candidate at once
    pred = scores[None, :] > candidates[:, None]
    acc = (pred == (labels == 1)[None, :]).mean(axis=1)
    best = acc.max()
    tied = candidates[acc >= best - 1e-15]
    order = np.lexsort((tied, np.abs(tied)))
    return float(tied[order[0]])


def simulate_accuracy(prob: BernoulliProblem, protocol: SimProtocol) -> SimResult:
    """Monte Carlo accuracy of both classifiers under identical draws.

    The arccos and likelihood-ratio classifiers are calibrated by the same
    procedure and then classify the same paired sample (balanced labels,
    theta per protocol, shared Bernoulli draws), so the accuracy
    difference is not inflated by sampling noise.  Deterministic given the
    protocol seed.
    """
    snr = snr_classifier_weights(prob, protocol)
    ml = ml_classifier_weights(prob, protocol)
    rng = np.random.default_rng([protocol.seed, 0xE7A1])
    x, labels = _draw_trials(prob, protocol, rng, protocol.n_trials)
    acc_snr = float((snr.predict(x) == labels).mean())
    acc_ml = float((ml.predict(x) == labels).mean())
    return SimResult(
        acc_snr=acc_snr,
        acc_ml=acc_ml,
        tau_snr=snr.tau,
        tau_ml=ml.tau,
        n_trials=protocol.n_trials,
        seed=protocol.seed,
    )
