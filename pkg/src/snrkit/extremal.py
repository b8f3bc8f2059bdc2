"""Extremal discrete distributions and a brute-force tightness oracle.

Every bound in :mod:`snrkit.bounds` is "tightest" in the sense that some
distribution with the prescribed mean and variance attains it (or comes
arbitrarily close).  The attaining distributions are finite mixtures of at
most three point masses; this module constructs them explicitly and also
provides an independent enumeration oracle that searches two- and
three-atom distributions on a grid, solving the moment equations exactly
for the masses.  The oracle is the certification path for the closed-form
bounds: its supremum must approach each bound as the grid step shrinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import DegenerateThresholdError, Moments

__all__ = [
    "InfeasibleError",
    "GenerationError",
    "DiscreteDist",
    "TailEvent",
    "OutsideEvent",
    "InsideEvent",
    "Grid",
    "OracleResult",
    "moments_of",
    "construct_tail_extremal",
    "construct_spike",
    "construct_outside_extremal",
    "oracle_max_event",
    "random_moment_dist",
]

# Mass tolerance when solving the 2x2 / 3x3 linear moment systems.
MASS_TOL = 1e-12


class InfeasibleError(ValueError):
    """No distribution with the requested moments satisfies the event/grid
    constraints."""


class GenerationError(RuntimeError):
    """Random distribution generation exhausted its attempt budget."""


@dataclass(frozen=True)
class DiscreteDist:
    """Finite mixture of point masses: support ``xs`` with weights ``ps``.

    Invariants: xs strictly increasing, ps >= 0, sum(ps) == 1 within
    1e-12.  Arrays are stored read-only.
    """

    xs: np.ndarray
    ps: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=np.float64)
        ps = np.asarray(self.ps, dtype=np.float64)
        if xs.ndim != 1 or xs.shape != ps.shape or xs.size == 0:
            raise ValueError("xs and ps must be equal-length 1-d arrays")
        order = np.argsort(xs, kind="stable")
        xs, ps = xs[order], ps[order]
        if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ps)):
            raise ValueError("support points and masses must be finite")
        if xs.size > 1 and np.min(np.diff(xs)) <= 0:
            raise ValueError("support points must be distinct")
        if np.min(ps) < -MASS_TOL:
            raise ValueError(f"negative mass {np.min(ps)}")
        if abs(ps.sum() - 1.0) > 1e-12:
            raise ValueError(f"masses sum to {ps.sum()}, not 1")
        ps = np.clip(ps, 0.0, None)
        total = ps.sum()
        if total != 1.0:  # remove clip/roundoff dust
            ps = ps / total
        xs.setflags(write=False)
        ps.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ps", ps)

    @property
    def points(self) -> list[tuple[float, float]]:
        return [(float(x), float(p)) for x, p in zip(self.xs, self.ps)]

    # Event probabilities (inclusive comparisons, exact finite sums).
    def prob_tail(self, eta: float) -> float:
        return float(self.ps[self.xs >= eta].sum())

    def prob_cdf(self, eta: float) -> float:
        return float(self.ps[self.xs <= eta].sum())

    def prob_inside(self, lo: float, hi: float) -> float:
        return float(self.ps[(self.xs >= lo) & (self.xs <= hi)].sum())

    def prob_outside(self, lo: float, hi: float) -> float:
        return float(self.ps[(self.xs <= lo) | (self.xs >= hi)].sum())


def moments_of(d: DiscreteDist) -> Moments:
    """Exact weighted mean and variance of a discrete distribution."""
    mu = float(np.dot(d.ps, d.xs))
    var = float(np.dot(d.ps, (d.xs - mu) ** 2))
    return Moments(mu=mu, var=var)


# ---------------------------------------------------------------------------
# Events


@dataclass(frozen=True)
class TailEvent:
    """Event {x >= eta}."""

    eta: float

    def member(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) >= self.eta


@dataclass(frozen=True)
class OutsideEvent:
    """Event {x <= lo or x >= hi}."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("outside event requires lo < hi")

    def member(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        return (x <= self.lo) | (x >= self.hi)


@dataclass(frozen=True)
class InsideEvent:
    """Event {lo <= x <= hi}."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("inside event requires lo < hi")

    def member(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        return (x >= self.lo) & (x <= self.hi)


@dataclass(frozen=True)
class Grid:
    """Enumeration lattice: points x_min + k*step up to x_max."""

    x_min: float
    x_max: float
    step: float

    def __post_init__(self):
        if not (self.step > 0 and self.x_min < self.x_max):
            raise ValueError("grid requires x_min < x_max and step > 0")

    @classmethod
    def default_for(cls, m: Moments) -> "Grid":
        sigma = m.sigma
        return cls(x_min=m.mu - 6 * sigma, x_max=m.mu + 6 * sigma, step=sigma / 100)

    def lattice(self) -> np.ndarray:
        n = int(math.floor((self.x_max - self.x_min) / self.step + 1e-9)) + 1
        return self.x_min + self.step * np.arange(n)


@dataclass(frozen=True)
class OracleResult:
    sup_prob: float
    witness: DiscreteDist
    grid_step: float


# ---------------------------------------------------------------------------
# Closed-form extremal constructions


def construct_tail_extremal(m: Moments, eta: float) -> DiscreteDist:
    """Two-point distribution with moments ``m`` attaining the tail bound.

    For eta > mu the standardized support is {eta~, -1/eta~} with masses
    {1/(1+eta~^2), eta~^2/(1+eta~^2)}; this is the unique two-point
    solution of the moment equations with an atom at the threshold, and
    its mass at {x >= eta} equals the closed-form upper tail bound
    exactly.  At eta == mu the construction degenerates (the bound 1 is
    approached by spikes, never attained).
    """
    if m.var == 0.0:
        raise ValueError("tail extremal construction requires var > 0")
    if eta < m.mu:
        raise ValueError("tail extremal construction requires eta >= mu")
    if eta == m.mu:
        raise DegenerateThresholdError(
            "eta == mu: the bound 1 is approached but not attained"
        )
    sigma = m.sigma
    z = (eta - m.mu) / sigma
    mass_hi = 1.0 / (1.0 + z * z)
    xs = np.array([m.mu - sigma / z, eta])
    ps = np.array([1.0 - mass_hi, mass_hi])
    return DiscreteDist(xs=xs, ps=ps)


def construct_spike(m: Moments, eps: float) -> DiscreteDist:
    """Three-point spike mixture: mass 1-eps at mu, eps/2 at mu +- sigma/sqrt(eps).

    Has moments exactly ``m`` for any eps in (0, 1).  As eps -> 0 it
    witnesses every "bound = 1" branch: nearly all mass concentrates at
    the mean while the two vanishing side atoms carry the whole variance.
    """
    if m.var == 0.0:
        raise ValueError("spike construction requires var > 0")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    w = m.sigma / math.sqrt(eps)
    xs = np.array([m.mu - w, m.mu, m.mu + w])
    ps = np.array([eps / 2, 1.0 - eps, eps / 2])
    return DiscreteDist(xs=xs, ps=ps)


def construct_outside_extremal(m: Moments, iv: Interval) -> DiscreteDist:
    """Two-point distribution with all mass outside [iv.lo, iv.hi].

    Requires lo < mu < hi and, in standardized units, |lo~| * hi~ < 1;
    then with lam = k * max(|lo~|, hi~, 1) (k = -1 when |lo~| is the
    strict maximum and exceeds 1, else k = 1) the support
    {-1/lam, lam} with masses {lam^2/(lam^2+1), 1/(lam^2+1)} has the
    requested moments and event probability exactly 1.
    """
    if m.var == 0.0:
        raise ValueError("outside extremal construction requires var > 0")
    lo, hi = iv.lo, iv.hi
    if not lo < m.mu < hi:
        raise InfeasibleError("requires lo < mu < hi")
    sigma = m.sigma
    a1 = (m.mu - lo) / sigma
    a2 = (hi - m.mu) / sigma
    if a1 * a2 >= 1.0:
        raise InfeasibleError(
            f"standardized threshold product {a1 * a2} >= 1: no distribution "
            "with these moments puts all mass outside the interval"
        )
    # Conjugate pair pinned at the dominating threshold (standardized
    # support {lam, -1/lam} with lam = +-max(a1, a2, 1)); pinning keeps the
    # threshold atom exactly on the event boundary in floating point.
    if a1 > a2 and a1 > 1.0:
        t = lo
    elif max(a1, a2, 1.0) == a2:
        t = hi
    else:
        t = m.mu + sigma  # both thresholds within one sigma
    d = t - m.mu
    u = m.mu - m.var / d
    mass_t = m.var / (m.var + d * d)
    return DiscreteDist(xs=[t, u], ps=[mass_t, 1.0 - mass_t])


# ---------------------------------------------------------------------------
# Enumeration oracle


def _two_point_candidates(m: Moments, xs: np.ndarray, event):
    """All two-atom distributions with one atom on the lattice.

    For an on-lattice atom t != mu the conjugate atom and both masses are
    fully determined by the moment equations:

        u = mu - var/(t - mu),   p_t = var / (var + (t-mu)^2).

    Conjugates are kept only when they fall inside the grid's range.
    Returns (probs, atoms[n,2], masses[n,2]) with atoms sorted per row.
    """
    t = xs[xs != m.mu]
    d = t - m.mu
    u = m.mu - m.var / d
    ok = (u >= xs[0]) & (u <= xs[-1]) & (u != t)
    t, u, d = t[ok], u[ok], d[ok]
    if t.size == 0:
        return None
    pt = m.var / (m.var + d * d)
    pu = 1.0 - pt
    probs = pt * event.member(t) + pu * event.member(u)
    atoms = np.stack([np.minimum(t, u), np.maximum(t, u)], axis=1)
    masses = np.where((t <= u)[:, None], np.stack([pt, pu], 1), np.stack([pu, pt], 1))
    return probs, atoms, masses


def _lattice_snap(grid_x0: float, step: float, values: np.ndarray) -> np.ndarray:
    return grid_x0 + step * np.round((values - grid_x0) / step)


def _three_point_candidates(m: Moments, xs: np.ndarray, step: float, event):
    """Three-atom supports {c < b < a} with the outer atoms bracketing the
    interval event and the middle atom inside it (or vice versa).

    For fixed outer lattice atoms (c, a) the three masses solve the 3x3
    moment system in closed form (Lagrange weights of the quadratics
    vanishing at the other two atoms).  The middle atom's location is a
    free parameter; the event probability is monotone in (b-c)(a-b), so
    the optimum sits either at the clamped midpoint of (c, a) or at an
    edge of the feasible window

        mu - var/(a - mu)  <=  b  <=  mu + var/(mu - c),

    the window where the outer masses stay nonnegative.  All three
    placements are evaluated, snapped to the lattice, and masked by exact
    mass feasibility.
    """
    if isinstance(event, OutsideEvent):
        c_pool = xs[(xs <= event.lo) & (xs < m.mu)]
        a_pool = xs[(xs >= event.hi) & (xs > m.mu)]
    else:  # InsideEvent
        c_pool = xs[(xs < event.lo) & (xs < m.mu)]
        a_pool = xs[(xs > event.hi) & (xs > m.mu)]
    if c_pool.size == 0 or a_pool.size == 0:
        return None

    c = np.repeat(c_pool, a_pool.size)
    a = np.tile(a_pool, c_pool.size)

    b_lo = np.maximum(event.lo, m.mu - m.var / (a - m.mu))
    b_hi = np.minimum(event.hi, m.mu + m.var / (m.mu - c))
    b_mid = np.clip((c + a) / 2.0, b_lo, b_hi)

    results = []
    second = m.var + m.mu * m.mu
    for b_raw in (b_mid, b_lo, b_hi):
        b = _lattice_snap(xs[0], step, b_raw)
        ok = (b > c) & (b < a) & (b >= event.lo) & (b <= event.hi)
        if isinstance(event, OutsideEvent):
            # middle atom must stay out of the event
            ok &= (b > event.lo) & (b < event.hi)
        if not np.any(ok):
            continue
        cc, aa, bb = c[ok], a[ok], b[ok]
        # Lagrange-weight solution of (sum p, sum p x, sum p x^2) = (1, mu, second)
        pc = (second - (bb + aa) * m.mu + bb * aa) / ((cc - bb) * (cc - aa))
        pa = (second - (bb + cc) * m.mu + bb * cc) / ((aa - bb) * (aa - cc))
        pb = (second - (cc + aa) * m.mu + cc * aa) / ((bb - cc) * (bb - aa))
        feas = (pc >= -MASS_TOL) & (pa >= -MASS_TOL) & (pb >= -MASS_TOL)
        if not np.any(feas):
            continue
        cc, aa, bb = cc[feas], aa[feas], bb[feas]
        pc, pa, pb = pc[feas], pa[feas], pb[feas]
        probs = (
            pc * event.member(cc) + pb * event.member(bb) + pa * event.member(aa)
        )
        atoms = np.stack([cc, bb, aa], axis=1)
        masses = np.stack([pc, pb, pa], axis=1)
        results.append((probs, atoms, masses))
    return results or None


def _clamp_event(event, x_min: float, x_max: float):
    clip = lambda v: min(max(v, x_min), x_max)
    if isinstance(event, TailEvent):
        return TailEvent(clip(event.eta))
    lo, hi = clip(event.lo), clip(event.hi)
    if not lo < hi:
        raise InfeasibleError("event interval collapses after grid clamping")
    return type(event)(lo, hi)


def oracle_max_event(m: Moments, event, grid: Grid | None = None) -> OracleResult:
    """Supremum of the event probability over grid-supported distributions
    with moments ``m``, found by exhaustive support enumeration.

    Two-atom supports are enumerated for every event; interval events
    (outside/inside) additionally get three-atom supports, which realize
    the extremal mass splits two atoms cannot.  Extremal distributions
    for second-moment problems never need more than three atoms, so the
    search space is exhaustive up to the lattice resolution.  Event-region
    atoms range over the lattice; companion atoms and all masses are
    solved exactly from the moment equations (and must stay within the
    grid's range), so every witness reproduces its moments to float
    precision and attains its event probability as a finite sum.

    Thresholds are clamped into [x_min, x_max].  Ties between equally
    good witnesses are broken toward the smallest atom locations, making
    the result deterministic.
    """
    if m.var == 0.0:
        raise ValueError("oracle requires var > 0")
    if grid is None:
        grid = Grid.default_for(m)
    sigma = m.sigma
    slack = 1e-9 * sigma
    if grid.x_min > m.mu - 6 * sigma + slack or grid.x_max < m.mu + 6 * sigma - slack:
        raise ValueError("grid must cover [mu - 6 sigma, mu + 6 sigma]")
    xs = grid.lattice()
    event = _clamp_event(event, grid.x_min, grid.x_max)

    families = []
    two = _two_point_candidates(m, xs, event)
    if two is not None:
        families.append(two)
    if isinstance(event, (OutsideEvent, InsideEvent)):
        three = _three_point_candidates(m, xs, grid.step, event)
        if three:
            families.extend(three)
    if not families:
        raise InfeasibleError("no feasible distribution on the grid")

    best_prob = -1.0
    best_atoms = None
    best_masses = None
    for probs, atoms, masses in families:
        i = int(np.argmax(probs))
        p = float(probs[i])
        if p < best_prob:
            continue
        # within a family, prefer the smallest atom tuple among exact ties
        tied = np.flatnonzero(probs == p)
        if tied.size > 1:
            order = np.lexsort(atoms[tied].T[::-1])
            i = int(tied[order[0]])
        cand_atoms = atoms[i]
        if p > best_prob or (
            best_atoms is not None
            and _atom_key(cand_atoms) < _atom_key(best_atoms)
        ):
            best_prob = p
            best_atoms = cand_atoms
            best_masses = masses[i]

    keep = best_masses > 1e-13  # drop zero-mass atoms left by edge solutions
    witness = DiscreteDist(
        xs=best_atoms[keep], ps=best_masses[keep] / best_masses[keep].sum()
    )
    return OracleResult(sup_prob=best_prob, witness=witness, grid_step=grid.step)


def _atom_key(atoms: np.ndarray) -> tuple:
    key = tuple(float(x) for x in atoms)
    return key + (-math.inf,) * (3 - len(key))


# ---------------------------------------------------------------------------
# Random distributions with prescribed moments


def random_moment_dist(
    m: Moments, k: int, seed, max_attempts: int = 500
) -> DiscreteDist:
    """Random k-point distribution with moments exactly ``m``.

    Draws k-2 free (location, mass) pairs, then completes with a two-point
    mixture whose locations and masses are solved from the residual mass,
    mean and variance; the completion is exact by construction, so the
    result's moments match to float precision.  Infeasible draws (negative
    residual variance, colliding atoms) are retried.  Deterministic given
    the seed.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if m.var == 0.0:
        raise ValueError("random construction requires var > 0")
    rng = np.random.default_rng(seed)
    sigma = m.sigma
    second = m.var + m.mu * m.mu
    for _ in range(max_attempts):
        if k > 2:
            fx = m.mu + sigma * rng.uniform(-3.0, 3.0, size=k - 2)
            raw = rng.uniform(0.05, 1.0, size=k - 2)
            q = raw / raw.sum() * rng.uniform(0.1, 0.7)
        else:
            fx = np.empty(0)
            q = np.empty(0)
        r = 1.0 - q.sum()
        mr = (m.mu - q @ fx) / r
        v2r = (second - q @ (fx * fx)) / r
        vr = v2r - mr * mr
        if vr <= 1e-10 * m.var:
            continue
        s = rng.uniform(0.4, 2.5)
        sr = math.sqrt(vr)
        xa = mr + sr * s
        xb = mr - sr / s
        pa = r / (1.0 + s * s)
        xs_all = np.concatenate([fx, [xb, xa]])
        ps_all = np.concatenate([q, [r - pa, pa]])
        order = np.argsort(xs_all)
        xs_all, ps_all = xs_all[order], ps_all[order]
        if xs_all.size > 1 and np.min(np.diff(xs_all)) <= 1e-9 * sigma:
            continue
        return DiscreteDist(xs=xs_all, ps=ps_all)
    raise GenerationError(
        f"could not generate a feasible {k}-point distribution "
        f"in {max_attempts} attempts"
    )
