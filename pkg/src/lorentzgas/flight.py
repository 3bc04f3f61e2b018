"""The limiting random flight process: a Markov chain with memory two over
path segments, stationary initialization, finite-time evaluation, particle
estimates of the evolution operator, and the semigroup-failure experiment.

The chain state between collisions is (direction V, remaining flight time
xi, impact parameter w of the upcoming collision).  At a collision the new
direction is the hard-disk scattering of V by w, and the next (flight time,
impact parameter) pair is drawn from the transition kernel conditioned on
the exit parameter of the collision just performed.  For hard disks that
exit parameter equals -w, so the kernel conditioning variable is w itself;
the Python-level step() computes it through the geometry map and the
equality is pinned by tests.
"""

import dataclasses
import math

import numpy as np
from numba import njit

from .geometry import exit_parameter, random_direction, scatter_from_impact
from .kernel import (
    NU2,
    SamplingCapError,
    _sample_xi_b_core,
    phi0_scalar,
    sample_xi_b,
    sample_xi_b_exponential,
)

_INIT_CAP = 1_000_000
_STEP_CAP = 10_000_000


class ChainTooShortError(RuntimeError):
    """A chain did not reach the requested evaluation time."""

    def __init__(self, needed):
        super().__init__(
            f"chain too short; extend by at least {needed:.6g} time units"
        )
        self.needed = needed


@dataclasses.dataclass(frozen=True)
class ExtendedState:
    """Extended phase-space point: position, direction, time to the next
    collision, and the direction after that collision."""

    Q: np.ndarray
    V: np.ndarray
    xi: float
    V_plus: np.ndarray

    def __post_init__(self):
        if not self.xi > 0.0:
            raise ValueError("flight time must be positive")
        if abs(self.V[0] - self.V_plus[0]) + abs(self.V[1] - self.V_plus[1]) == 0.0:
            raise ValueError("V_plus must differ from V")


@dataclasses.dataclass(frozen=True)
class PathChain:
    """Polygonal path: origin, straight segments between collisions, and the
    outgoing direction after the final collision."""

    origin: np.ndarray
    segments: np.ndarray  # (n, 2)
    final_direction: np.ndarray | None = None

    @property
    def n(self):
        return len(self.segments)

    @property
    def times(self):
        """Collision times T_1..T_n (T_0 = 0 is implicit)."""
        return np.cumsum(np.linalg.norm(self.segments, axis=1))

    @property
    def points(self):
        """Origin followed by the n collision points."""
        return self.origin[None, :] + np.concatenate(
            [np.zeros((1, 2)), np.cumsum(self.segments, axis=0)]
        )

    def directions(self):
        return self.segments / np.linalg.norm(self.segments, axis=1)[:, None]


@dataclasses.dataclass(frozen=True)
class InitialDistribution:
    """Absolutely continuous law for the initial (position, direction).

    kind is 'uniform-box' (box = (x0, x1, y0, y1)) or 'fixed-position'
    (q0 = position); direction_sampler(rng) overrides the default uniform
    direction law.
    """

    kind: str = "uniform-box"
    box: tuple = (0.0, 1.0, 0.0, 1.0)
    q0: np.ndarray | None = None
    direction_sampler: object = None

    def draw(self, rng):
        if self.kind == "uniform-box":
            x0, x1, y0, y1 = self.box
            q = np.array([x0 + (x1 - x0) * rng.random(), y0 + (y1 - y0) * rng.random()])
        elif self.kind == "fixed-position":
            q = np.asarray(self.q0, dtype=float).copy()
        else:
            raise ValueError(f"unknown initial distribution kind {self.kind!r}")
        if self.direction_sampler is not None:
            v = np.asarray(self.direction_sampler(rng), dtype=float)
            v = v / np.hypot(v[0], v[1])
        else:
            v = random_direction(rng)
        return q, v

    def draw_batch(self, n, rng):
        qs = np.empty((n, 2))
        vs = np.empty((n, 2))
        for i in range(n):
            qs[i], vs[i] = self.draw(rng)
        return qs, vs


@dataclasses.dataclass(frozen=True)
class PhaseSpaceSet:
    """Rectangle in position space crossed with an angular sector (either
    may be omitted); boundaries have measure zero."""

    rect: tuple | None = None
    sector: tuple | None = None

    def contains(self, qs, vs):
        qs = np.atleast_2d(qs)
        vs = np.atleast_2d(vs)
        mask = np.ones(len(qs), dtype=bool)
        if self.rect is not None:
            x0, x1, y0, y1 = self.rect
            mask &= (qs[:, 0] >= x0) & (qs[:, 0] < x1)
            mask &= (qs[:, 1] >= y0) & (qs[:, 1] < y1)
        if self.sector is not None:
            a0, a1 = self.sector
            width = a1 - a0
            if not 0.0 < width <= 2.0 * math.pi:
                raise ValueError("sector width must lie in (0, 2*pi]")
            ang = np.mod(np.arctan2(vs[:, 1], vs[:, 0]) - a0, 2.0 * math.pi)
            mask &= ang < width
        return mask


# ---------------------------------------------------------------------------
# numba cores
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _scatter_components(vx, vy, b):
    theta = math.pi - 2.0 * math.asin(abs(b))
    if b < 0.0:
        theta = -theta
    c = math.cos(theta)
    s = math.sin(theta)
    return c * vx - s * vy, s * vx + c * vy


@njit(cache=True)
def _stationary_xi_w(rng, cap):
    """Sample (remaining flight time, upcoming impact parameter) from the
    stationary law: total flight length biased by its duration, position
    uniform within the flight.

    Proposal mixture: a uniform box over flights shorter than 2, plus a
    Pareto tail paired with the corner slab of (w, z) values that can
    produce long flights.  Returns (xi, w, iterations), iterations == 0 on
    cap exhaustion.
    """
    p_box = 0.9
    bound = 10.81  # max of (12/pi^2)/(p_box/8) and (6/pi^2)/(1 - p_box)
    for it in range(cap):
        if rng.random() < p_box:
            ell = 2.0 * rng.random()
            w = 2.0 * rng.random() - 1.0
            z = 2.0 * rng.random() - 1.0
            q = p_box / 8.0
        else:
            ell = 2.0 / max(rng.random(), 1e-300)
            side = 1.0 if rng.random() < 0.5 else -1.0
            w = side * (1.0 - rng.random() / ell)
            z = side * (1.0 - rng.random() / ell)
            q = 1.0 - p_box
        if rng.random() * bound * q < ell * phi0_scalar(ell, w, z):
            return rng.random() * ell, w, it + 1
    return -1.0, 0.0, 0


@njit(cache=True)
def _stationary_xi_w_exponential(rng):
    xi = -math.log(max(rng.random(), 1e-300)) / NU2
    w = 2.0 * rng.random() - 1.0
    return xi, w


@njit(cache=True)
def _burn_in_xi_w(t_star, rng, cap):
    """Residual (flight time, upcoming impact) at deterministic time t_star
    of a chain started from the memoryless kernel; renewal convergence
    makes this approximately stationary for t_star of a few mean flights."""
    xi = -math.log(max(rng.random(), 1e-300)) / NU2
    w = 2.0 * rng.random() - 1.0
    elapsed = 0.0
    while elapsed + xi <= t_star:
        elapsed += xi
        xi, b, it = _sample_xi_b_core(w, rng, cap)
        if it == 0:
            return -1.0, 0.0
        w = b
    return elapsed + xi - t_star, w


@njit(cache=True)
def _chain_batch(n_chains, n_segs, xi_trunc, exponential, rng):
    """Sample flight-process chains as segment vectors.

    Chains containing a flight longer than xi_trunc are flagged invalid
    (ok = 0) so billiard ensembles with the same truncation stay
    statistically comparable.
    """
    segs = np.zeros((n_chains, n_segs, 2))
    ok = np.zeros(n_chains, dtype=np.uint8)
    for i in range(n_chains):
        a = 2.0 * math.pi * rng.random()
        vx = math.cos(a)
        vy = math.sin(a)
        if exponential:
            xi, w = _stationary_xi_w_exponential(rng)
        else:
            xi, w, it = _stationary_xi_w(rng, _INIT_CAP)
            if it == 0:
                continue
        good = True
        for j in range(n_segs):
            if xi > xi_trunc:
                good = False
                break
            segs[i, j, 0] = xi * vx
            segs[i, j, 1] = xi * vy
            vx, vy = _scatter_components(vx, vy, w)
            if exponential:
                xi = -math.log(max(rng.random(), 1e-300)) / NU2
                w = 2.0 * rng.random() - 1.0
            else:
                xi, b, it = _sample_xi_b_core(w, rng, _STEP_CAP)
                if it == 0:
                    good = False
                    break
                w = b
        if good:
            ok[i] = 1
    return segs, ok


@njit(cache=True)
def _evolve_batch(qs, vs, horizon, exponential, rng):
    """Evolve particles to a fixed time; returns final positions,
    directions, residual flight times, and collision counts."""
    n = len(qs)
    out_q = np.empty((n, 2))
    out_v = np.empty((n, 2))
    residual = np.empty(n)
    n_coll = np.zeros(n, dtype=np.int64)
    for i in range(n):
        qx = qs[i, 0]
        qy = qs[i, 1]
        vx = vs[i, 0]
        vy = vs[i, 1]
        if exponential:
            xi, w = _stationary_xi_w_exponential(rng)
        else:
            xi, w, it = _stationary_xi_w(rng, _INIT_CAP)
            if it == 0:
                residual[i] = -1.0
                continue
        t_rem = horizon
        failed = False
        while xi <= t_rem:
            qx += xi * vx
            qy += xi * vy
            t_rem -= xi
            vx, vy = _scatter_components(vx, vy, w)
            n_coll[i] += 1
            if exponential:
                xi = -math.log(max(rng.random(), 1e-300)) / NU2
                w = 2.0 * rng.random() - 1.0
            else:
                xi, b, it = _sample_xi_b_core(w, rng, _STEP_CAP)
                if it == 0:
                    failed = True
                    break
                w = b
        if failed:
            residual[i] = -1.0
            continue
        out_q[i, 0] = qx + t_rem * vx
        out_q[i, 1] = qy + t_rem * vy
        out_v[i, 0] = vx
        out_v[i, 1] = vy
        residual[i] = xi - t_rem
    return out_q, out_v, residual, n_coll


# ---------------------------------------------------------------------------
# single-state operations
# ---------------------------------------------------------------------------


def init_state(dist: InitialDistribution, burn_in, rng, exact=None):
    """Draw an extended state: (Q, V) from the initial distribution and
    (xi, V_plus) from the stationary law given V.

    With exact=True (the default when burn_in == 0) the stationary pair is
    drawn by rejection.  Otherwise the memory-two chain is run from an
    exponential-kernel start for about burn_in collisions and the state is
    read off at a random time in the second half of the elapsed window,
    which realizes the time-stationary (length-biased) flight law.
    """
    if exact is None:
        exact = burn_in == 0
    q, v = dist.draw(rng)
    if exact:
        if burn_in != 0:
            raise ValueError("exact mode draws the stationary pair directly; use burn_in=0")
        xi, w, it = _stationary_xi_w(rng, _INIT_CAP)
        if it == 0:
            raise SamplingCapError("stationary initialization rejection cap exceeded")
        v_plus = scatter_from_impact(v, w)
        return ExtendedState(Q=q, V=v, xi=xi, V_plus=v_plus)

    if burn_in < 1:
        raise ValueError("burn_in must be >= 1 outside exact mode")
    # observe the chain at a deterministic time: about burn_in collisions
    # elapse (mean flight 1/2), after which the residual flight law has
    # relaxed to the stationary one by renewal convergence
    residual, w = _burn_in_xi_w(0.5 * burn_in, rng, _STEP_CAP)
    if residual < 0.0:
        raise SamplingCapError("kernel sampler cap exceeded during burn-in")
    residual = max(residual, 1e-300)
    # rotate the in-flight (V, V_plus) pair so V matches the requested
    # direction; the stationary pair law is isotropic
    rel = math.pi - 2.0 * math.asin(abs(w))
    if w < 0.0:
        rel = -rel
    v_plus = np.array([
        v[0] * math.cos(rel) - v[1] * math.sin(rel),
        v[0] * math.sin(rel) + v[1] * math.cos(rel),
    ])
    return ExtendedState(Q=q, V=v, xi=residual, V_plus=v_plus)


def step(prev_V, cur: ExtendedState, rng, kernel="periodic"):
    """Advance the chain by one collision."""
    if abs(prev_V[0] - cur.V[0]) + abs(prev_V[1] - cur.V[1]) == 0.0:
        raise ValueError("previous direction must differ from the current one")
    new_q = cur.Q + cur.xi * cur.V
    new_v = cur.V_plus
    if kernel == "exponential":
        xi, b = sample_xi_b_exponential(rng)
    elif kernel == "periodic":
        s = exit_parameter(new_v, cur.V)
        xi, b = sample_xi_b(s, rng)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    v_plus = scatter_from_impact(new_v, b)
    return ExtendedState(Q=new_q, V=new_v, xi=xi, V_plus=v_plus)


def simulate_chain(dist, n_segments, rng, kernel="periodic", burn_in=0):
    """Run the flight process for n_segments full flights; the first segment
    uses the stationary remaining-flight law."""
    state = init_state(dist, burn_in, rng)
    origin = state.Q.copy()
    segments = np.empty((n_segments, 2))
    prev_v = -state.V  # placeholder distinct from V; first step only needs V, V_plus
    for j in range(n_segments):
        segments[j] = state.xi * state.V
        nxt = step(prev_v, state, rng, kernel=kernel)
        prev_v = state.V
        state = nxt
    return PathChain(origin=origin, segments=segments, final_direction=state.V.copy())


def evaluate_at_times(chain: PathChain, times):
    """Position and direction of the unit-speed traversal at the given
    nondecreasing times (right-continuous at collision instants)."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0.0):
        raise ValueError("times must be nondecreasing")
    t_colls = np.concatenate([[0.0], chain.times])
    points = chain.points
    dirs = chain.directions()
    out = []
    for t in times:
        n = int(np.searchsorted(t_colls, t, side="right")) - 1
        if n >= chain.n:
            if t == t_colls[chain.n] and chain.final_direction is not None:
                out.append((points[chain.n].copy(), chain.final_direction.copy()))
                continue
            raise ChainTooShortError(t - t_colls[chain.n])
        pos = points[n] + (t - t_colls[n]) * dirs[n]
        out.append((pos, dirs[n].copy()))
    return out


# ---------------------------------------------------------------------------
# ensemble estimates
# ---------------------------------------------------------------------------


def sample_chains(n_chains, n_segments, rng, xi_trunc=math.inf, kernel="periodic"):
    """Batch chain sampler; returns (segments (n, k, 2), valid mask)."""
    segs, ok = _chain_batch(
        int(n_chains), int(n_segments), xi_trunc, kernel == "exponential", rng
    )
    return segs, ok.astype(bool)


def states_at_time(dist, t, n_particles, rng, kernel="periodic"):
    """Ensemble of (Q, V, residual flight time, collision count) at time t."""
    qs, vs = dist.draw_batch(int(n_particles), rng)
    out_q, out_v, residual, n_coll = _evolve_batch(
        qs, vs, float(t), kernel == "exponential", rng
    )
    good = residual >= 0.0
    if not np.all(good):
        raise SamplingCapError("kernel sampler cap exceeded inside evolve")
    return out_q, out_v, residual, n_coll


def lt_estimate(dist, t, test_sets, n_particles, rng, kernel="periodic"):
    """Monte Carlo estimate of the time-t occupation probabilities of the
    given phase-space sets, with binomial standard errors."""
    out_q, out_v, _, _ = states_at_time(dist, t, n_particles, rng, kernel=kernel)
    n = len(out_q)
    probs = np.empty(len(test_sets))
    errs = np.empty(len(test_sets))
    for i, ts in enumerate(test_sets):
        p = float(np.mean(ts.contains(out_q, out_v)))
        probs[i] = p
        errs[i] = math.sqrt(max(p * (1.0 - p), 0.0) / n)
    return probs, errs


def semigroup_compare(s, t, n_particles, rng, dist=None):
    """Compare evolving straight to time s+t against evolving to s,
    projecting to (Q, V), and restarting for t (composition of the limiting
    operators).  Observables: residual flight time at the final instant and
    displacement magnitude.  The exponential kernel is the same-kernel
    control: memoryless restarts leave it divergence-free.
    """
    from .stats import EmpiricalCdf, ks_two_sample

    if dist is None:
        dist = InitialDistribution(kind="fixed-position", q0=np.zeros(2))
    report = {}
    for kernel in ("periodic", "exponential"):
        exp_flag = kernel == "exponential"
        q0, v0 = dist.draw_batch(int(n_particles), rng)
        qa, va, res_a, _ = _evolve_batch(q0, v0, float(s + t), exp_flag, rng)
        disp_a = np.linalg.norm(qa - q0, axis=1)

        q0b, v0b = dist.draw_batch(int(n_particles), rng)
        qm, vm, _, _ = _evolve_batch(q0b, v0b, float(s), exp_flag, rng)
        qb, vb, res_b, _ = _evolve_batch(qm, vm, float(t), exp_flag, rng)
        disp_b = np.linalg.norm(qb - q0b, axis=1)

        ks_res = ks_two_sample(
            EmpiricalCdf.from_samples(res_a), EmpiricalCdf.from_samples(res_b),
            name=f"semigroup_residual_{kernel}",
        )
        ks_disp = ks_two_sample(
            EmpiricalCdf.from_samples(disp_a), EmpiricalCdf.from_samples(disp_b),
            name=f"semigroup_displacement_{kernel}",
        )
        report[kernel] = {
            "residual": ks_res,
            "displacement": ks_disp,
            "divergence": max(ks_res.statistic, ks_disp.statistic),
        }
    report["ratio"] = report["periodic"]["divergence"] / max(
        report["exponential"]["divergence"], 1e-12
    )
    return report
