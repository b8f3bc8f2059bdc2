"""Tightest two-moment probability bounds.

Closed-form, distribution-free bounds on tail, interval and CDF
probabilities of a scalar random variable, given only its mean mu and
variance sigma^2.  "Tightest" means each bound is attained (or approached
arbitrarily closely) by some distribution with exactly those moments; the
companion module :mod:`snrkit.extremal` builds the attaining distributions
and an enumeration oracle that certifies tightness numerically.

All functions are pure and operate on plain floats; none of them bakes in
a tolerance.  Zero-variance inputs are rejected rather than special-cased,
because every formula divides by expressions that vanish with sigma^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "DegenerateThresholdError",
    "Moments",
    "Interval",
    "CdfEnvelope",
    "upper_tail_bound",
    "cdf_envelope",
    "outside_interval_upper_bound",
    "inside_interval_upper_bound",
    "inside_interval_lower_bound",
    "tp_bound_from_snr",
]


class DegenerateThresholdError(ValueError):
    """Raised when a threshold coincides with the mean in a case the
    interval bound does not cover."""


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Moments:
    """First two moments (mean, variance) of a scalar random variable.

    ``var`` may be zero so that exact moments of a point mass are
    representable; the bound functions themselves reject var == 0.
    """

    mu: float
    var: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _require_finite("mu", self.mu))
        object.__setattr__(self, "var", _require_finite("var", self.var))
        if self.var < 0:
            raise ValueError(f"variance must be >= 0, got {self.var}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.var)


@dataclass(frozen=True)
class Interval:
    """An open-ended pair of thresholds lo < hi."""

    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", _require_finite("lo", self.lo))
        object.__setattr__(self, "hi", _require_finite("hi", self.hi))
        if not self.lo < self.hi:
            raise ValueError(f"interval requires lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class CdfEnvelope:
    """Feasible range [lower, upper] for a CDF value F(eta)."""

    lower: float
    upper: float

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper <= 1.0:
            raise ValueError(
                f"envelope must satisfy 0 <= lower <= upper <= 1, "
                f"got [{self.lower}, {self.upper}]"
            )


def _checked(m: Moments) -> Moments:
    if m.var == 0.0:
        raise ValueError("bounds are undefined for zero variance")
    return m


def upper_tail_bound(m: Moments, eta: float) -> float:
    """Tightest upper bound on Pr(x > eta).

    Returns sigma^2 / (sigma^2 + (eta - mu)^2) for eta >= mu, else 1.
    This is the one-sided (Cantelli-type) bound; it is attained exactly by
    a two-point distribution when eta > mu, and approached by spike
    mixtures when eta <= mu.
    """
    _checked(m)
    eta = _require_finite("eta", eta)
    if eta < m.mu:
        return 1.0
    d = eta - m.mu
    return m.var / (m.var + d * d)


def cdf_envelope(m: Moments, eta: float) -> CdfEnvelope:
    """Feasible interval for the CDF value F(eta) = Pr(x <= eta).

    lower = (eta - mu)^2 / (sigma^2 + (eta - mu)^2) for eta >= mu, else 0;
    upper = 1 for eta > mu, else sigma^2 / (sigma^2 + (eta - mu)^2).
    Both edges follow from the tail bound applied to x and to -x.
    """
    _checked(m)
    eta = _require_finite("eta", eta)
    d = eta - m.mu
    if eta >= m.mu:
        lower = d * d / (m.var + d * d)
    else:
        lower = 0.0
    if eta > m.mu:
        upper = 1.0
    else:
        upper = m.var / (m.var + d * d)
    return CdfEnvelope(lower=lower, upper=upper)


def outside_interval_upper_bound(m: Moments, iv: Interval) -> float:
    """Tightest upper bound on Pr(x <= lo or x >= hi).

    For lo < mu < hi, in standardized units a1 = (mu-lo)/sigma and
    a2 = (hi-mu)/sigma, the supremum has three regimes:

      a1*a2 < 1:                     1  (a two-point mixture puts all
                                        mass outside the interval)
      amin*(amax - amin) <= 2:       1 - 4*(a1*a2 - 1) / (a1 + a2)^2
      amin*(amax - amin) >  2:       1 / (1 + amin^2)

    The middle regime is attained by a three-point mixture with atoms at
    the thresholds and at their midpoint; once the asymmetry exceeds
    amin*(amax - amin) = 2 the midpoint atom leaves its feasibility
    window, the extremal collapses to the two-point pair through the
    nearer threshold, and the one-sided value takes over.  The three
    expressions agree at the regime boundaries.  In the symmetric case
    a1 = a2 = t the middle regime reduces to the familiar 1/t^2.

    If both thresholds lie on the same side of mu (including on it), the
    tightest bound is 1.
    """
    _checked(m)
    if not (iv.lo < m.mu < iv.hi):
        return 1.0
    sigma = m.sigma
    a1 = (m.mu - iv.lo) / sigma
    a2 = (iv.hi - m.mu) / sigma
    if a1 * a2 < 1.0:
        return 1.0
    amin, amax = min(a1, a2), max(a1, a2)
    if amin * (amax - amin) <= 2.0:
        span = a1 + a2
        return 1.0 - 4.0 * (a1 * a2 - 1.0) / (span * span)
    return 1.0 / (1.0 + amin * amin)


def inside_interval_upper_bound(m: Moments, iv: Interval) -> float:
    """Tightest upper bound on Pr(lo <= x <= hi).

    Same-side thresholds: sigma^2 / (sigma^2 + dmin^2) with dmin the
    distance from mu to the nearer threshold.  Straddling thresholds
    (lo < mu < hi): 1.  A threshold exactly at mu falls in neither stated
    case and is rejected as degenerate.
    """
    _checked(m)
    if iv.lo == m.mu or iv.hi == m.mu:
        raise DegenerateThresholdError(
            f"interval endpoint equals the mean {m.mu}; the bound is not "
            "defined for this boundary case"
        )
    if iv.lo < m.mu < iv.hi:
        return 1.0
    dmin = min(abs(iv.lo - m.mu), abs(iv.hi - m.mu))
    return m.var / (m.var + dmin * dmin)


def inside_interval_lower_bound(m: Moments, iv: Interval) -> float:
    """Tightest lower bound on Pr(lo <= x <= hi).

    Complement of the outside-interval bound on its non-degenerate branch:
    for lo < mu < hi with a1*a2 >= 1 (standardized) the bound is
    1 - outside_interval_upper_bound; otherwise 0.
    """
    _checked(m)
    if not (iv.lo < m.mu < iv.hi):
        return 0.0
    sigma = m.sigma
    a1 = (m.mu - iv.lo) / sigma
    a2 = (iv.hi - m.mu) / sigma
    if a1 * a2 < 1.0:
        return 0.0
    return 1.0 - outside_interval_upper_bound(m, iv)


def tp_bound_from_snr(s: float) -> float:
    """Worst-case true-positive probability s / (1 + s) for SNR s >= 0.

    s is the squared distance of a logit's mean from its decision
    threshold divided by the logit's variance; the returned value is the
    guaranteed probability that the logit clears the threshold, monotone
    increasing in s with range [0, 1).
    """
    s = _require_finite("s", s)
    if s < 0:
        raise ValueError(f"snr must be >= 0, got {s}")
    return s / (1.0 + s)
