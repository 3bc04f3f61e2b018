"""Exact microscopic dynamics of the 2D Lorentz gas.

Scatterers of radius rho sit on a covolume-one lattice (periodic mode) or
form a Poisson point process (disordered mode).  Collision detection walks
lattice cells incrementally along the ray (Amanatides-Woo in lattice
coordinates), testing the O(1) candidate centers whose disks can meet the
ray inside each traversed cell, so the cost of a flight is proportional to
its length; this is what makes the infinite-horizon channels at small rho
tractable.  Poisson configurations are generated lazily cell-by-cell from a
counter-based hash so unbounded flights stay cheap and every trajectory sees
a fresh, reproducible realization.
"""

import dataclasses
import math

import numpy as np
from numba import njit

from .flight import PathChain
from .geometry import random_direction, reflect

BIG_INT = 2**60  # sentinel lattice index meaning "no exclusion"
_HIT_EPS = 1e-9


def _reduce_basis(basis):
    """Lagrange-Gauss reduction of a 2D basis (rows = basis vectors);
    returns an equivalent basis with b1 the shortest lattice vector."""
    b1 = basis[0].astype(float).copy()
    b2 = basis[1].astype(float).copy()
    for _ in range(64):
        if b1 @ b1 > b2 @ b2:
            b1, b2 = b2, b1
        mu = round((b1 @ b2) / (b1 @ b1))
        if mu == 0:
            break
        b2 = b2 - mu * b1
    if b1 @ b1 > b2 @ b2:
        b1, b2 = b2, b1
    return np.array([b1, b2])


@dataclasses.dataclass(frozen=True)
class ScattererConfig:
    """Scatterer layout: lattice basis (rows, microscopic units, covolume
    one) and disk radius; or a Poisson process of the given intensity.
    Immutable after construction and safe to share across workers."""

    basis: np.ndarray
    rho: float
    kind: str = "periodic"
    intensity: float = 1.0

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if self.kind == "periodic":
            det = abs(np.linalg.det(basis))
            if abs(det - 1.0) > 1e-12:
                raise ValueError(f"lattice covolume must be 1, got {det!r}")
            basis = _reduce_basis(basis)
            lam1 = math.hypot(*basis[0])
            if not 0.0 < self.rho < 0.5 * lam1:
                raise ValueError(
                    f"need 0 < rho < {0.5 * lam1:.6g} so scatterers stay disjoint"
                )
        elif self.kind == "poisson":
            basis = np.eye(2)
            if not 0.0 < self.rho < 1.0:
                raise ValueError("poisson mode needs 0 < rho < 1")
            if not self.intensity >= 0.0:
                raise ValueError("intensity must be nonnegative")
        else:
            raise ValueError(f"unknown scatterer kind {self.kind!r}")
        object.__setattr__(self, "basis", basis)
        binv = np.linalg.inv(basis)
        object.__setattr__(self, "_binv", binv)
        object.__setattr__(self, "_rlat", self.rho * float(np.linalg.norm(binv, 2)))

    @classmethod
    def square(cls, rho):
        return cls(basis=np.eye(2), rho=rho)

    @classmethod
    def hexagonal(cls, rho):
        a = (2.0 / math.sqrt(3.0)) ** 0.5
        return cls(basis=a * np.array([[1.0, 0.0], [0.5, 0.5 * math.sqrt(3.0)]]), rho=rho)

    @classmethod
    def poisson(cls, rho, intensity=1.0):
        return cls(basis=np.eye(2), rho=rho, kind="poisson", intensity=intensity)

    def default_t_max(self):
        """Microscopic flight cutoff equivalent to macroscopic xi = 10."""
        return 10.0 / self.rho


@dataclasses.dataclass(frozen=True)
class MicroState:
    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        n = math.hypot(v[0], v[1])
        if n < 1e-300:
            raise ValueError("zero velocity")
        object.__setattr__(self, "v", v / n)
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))


@dataclasses.dataclass(frozen=True)
class CollisionRecord:
    tau: float
    center: np.ndarray
    hit_point: np.ndarray
    b_in: float


# ---------------------------------------------------------------------------
# numba cores
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _disk_hit(cx, cy, qx, qy, vx, vy, rho):
    """First positive intersection time of the ray with the disk, or -1.

    Starting on the boundary moving outward or tangentially never hits;
    starting on/inside the boundary moving inward hits immediately."""
    ox = cx - qx
    oy = cy - qy
    tm = ox * vx + oy * vy
    d2 = ox * ox + oy * oy
    disc = rho * rho - (d2 - tm * tm)
    if disc <= 0.0:
        return -1.0
    t_in = tm - math.sqrt(disc)
    if t_in > _HIT_EPS:
        return t_in
    if d2 <= rho * rho * (1.0 + 1e-9) and tm > _HIT_EPS:
        return max(t_in, 0.0)
    return -1.0


@njit(cache=True)
def _free_path_cells(basis, binv, rlat, rho, qx, qy, vx, vy, t_max, ex1, ex2):
    """Cell-traversal collision search on the periodic configuration.

    Returns (hit, tau, m1, m2) with (m1, m2) the integer coordinates of the
    scatterer hit; the lattice point (ex1, ex2) is ignored (pass BIG_INT
    for no exclusion)."""
    px = qx * binv[0, 0] + qy * binv[1, 0]
    py = qx * binv[0, 1] + qy * binv[1, 1]
    dx = vx * binv[0, 0] + vy * binv[1, 0]
    dy = vx * binv[0, 1] + vy * binv[1, 1]

    ci = math.floor(px)
    cj = math.floor(py)
    if dx > 0.0:
        stepi, tmaxx, tdx = 1.0, (ci + 1.0 - px) / dx, 1.0 / dx
    elif dx < 0.0:
        stepi, tmaxx, tdx = -1.0, (ci - px) / dx, -1.0 / dx
    else:
        stepi, tmaxx, tdx = 0.0, math.inf, math.inf
    if dy > 0.0:
        stepj, tmaxy, tdy = 1.0, (cj + 1.0 - py) / dy, 1.0 / dy
    elif dy < 0.0:
        stepj, tmaxy, tdy = -1.0, (cj - py) / dy, -1.0 / dy
    else:
        stepj, tmaxy, tdy = 0.0, math.inf, math.inf

    best_t = math.inf
    bm1 = 0
    bm2 = 0
    max_steps = int((abs(dx) + abs(dy)) * t_max) + 8
    for _ in range(max_steps):
        lo1 = int(math.ceil(ci - rlat))
        hi1 = int(math.floor(ci + 1.0 + rlat))
        lo2 = int(math.ceil(cj - rlat))
        hi2 = int(math.floor(cj + 1.0 + rlat))
        for m1 in range(lo1, hi1 + 1):
            for m2 in range(lo2, hi2 + 1):
                if m1 == ex1 and m2 == ex2:
                    continue
                cx = m1 * basis[0, 0] + m2 * basis[1, 0]
                cy = m1 * basis[0, 1] + m2 * basis[1, 1]
                t = _disk_hit(cx, cy, qx, qy, vx, vy, rho)
                if 0.0 <= t < best_t:
                    best_t = t
                    bm1 = m1
                    bm2 = m2
        t_exit = min(tmaxx, tmaxy)
        if best_t <= t_exit or t_exit > t_max:
            break
        if tmaxx < tmaxy:
            ci += stepi
            tmaxx += tdx
        else:
            cj += stepj
            tmaxy += tdy
    if best_t <= t_max:
        return True, best_t, bm1, bm2
    return False, 0.0, 0, 0


_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, inline="always")
def _mix64(x):
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & _MASK64
    x = ((x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
    x = ((x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
    return x ^ (x >> np.uint64(31))


@njit(cache=True, inline="always")
def _cell_state(seed, ci, cj):
    h = _mix64(seed ^ (np.uint64(ci) * np.uint64(0x9E3779B97F4A7C15)))
    return _mix64(h ^ (np.uint64(cj) * np.uint64(0xC2B2AE3D27D4EB4F)))


@njit(cache=True, inline="always")
def _u01(state):
    state = _mix64(state)
    return (state >> np.uint64(11)) * (1.0 / 9007199254740992.0), state


@njit(cache=True, inline="always")
def _poisson_count(lam, state):
    u, state = _u01(state)
    p = math.exp(-lam)
    cum = p
    k = 0
    while u > cum and k < 256:
        k += 1
        p *= lam / k
        cum += p
    return k, state


@njit(cache=True)
def _free_path_poisson(intensity, rho, seed, q0x, q0y, qx, qy, vx, vy, t_max):
    """Collision search on a hashed Poisson realization of unit-cell
    intensity; centers within rho of the trajectory start (q0x, q0y) are
    thinned away so the particle never starts inside a scatterer."""
    ci = math.floor(qx)
    cj = math.floor(qy)
    if vx > 0.0:
        stepi, tmaxx, tdx = 1.0, (ci + 1.0 - qx) / vx, 1.0 / vx
    elif vx < 0.0:
        stepi, tmaxx, tdx = -1.0, (ci - qx) / vx, -1.0 / vx
    else:
        stepi, tmaxx, tdx = 0.0, math.inf, math.inf
    if vy > 0.0:
        stepj, tmaxy, tdy = 1.0, (cj + 1.0 - qy) / vy, 1.0 / vy
    elif vy < 0.0:
        stepj, tmaxy, tdy = -1.0, (cj - qy) / vy, -1.0 / vy
    else:
        stepj, tmaxy, tdy = 0.0, math.inf, math.inf

    best_t = math.inf
    bcx = 0.0
    bcy = 0.0
    rho2 = rho * rho
    max_steps = int(2.0 * t_max) + 8
    for _ in range(max_steps):
        for ni in range(int(ci) - 1, int(ci) + 2):
            for nj in range(int(cj) - 1, int(cj) + 2):
                st = _cell_state(seed, ni, nj)
                k, st = _poisson_count(intensity, st)
                for _c in range(k):
                    u1, st = _u01(st)
                    u2, st = _u01(st)
                    cx = ni + u1
                    cy = nj + u2
                    if (cx - q0x) ** 2 + (cy - q0y) ** 2 < rho2:
                        continue
                    t = _disk_hit(cx, cy, qx, qy, vx, vy, rho)
                    if 0.0 <= t < best_t:
                        best_t = t
                        bcx = cx
                        bcy = cy
        t_exit = min(tmaxx, tmaxy)
        if best_t <= t_exit or t_exit > t_max:
            break
        if tmaxx < tmaxy:
            ci += stepi
            tmaxx += tdx
        else:
            cj += stepj
            tmaxy += tdy
    if best_t <= t_max:
        return True, best_t, bcx, bcy
    return False, 0.0, 0.0, 0.0


@njit(cache=True, inline="always")
def _near_lattice_point(basis, rho, qlx, qly, qx, qy):
    """Integer coordinates of the lattice point whose open disk contains
    (qx, qy), or (BIG_INT, BIG_INT)."""
    ci = int(math.floor(qlx))
    cj = int(math.floor(qly))
    for m1 in range(ci - 1, ci + 3):
        for m2 in range(cj - 1, cj + 3):
            cx = m1 * basis[0, 0] + m2 * basis[1, 0]
            cy = m1 * basis[0, 1] + m2 * basis[1, 1]
            if (cx - qx) ** 2 + (cy - qy) ** 2 < (rho * (1.0 - 1e-9)) ** 2:
                return m1, m2
    return BIG_INT, BIG_INT


@njit(cache=True)
def _draw_generic_start(basis, rho, rng):
    """Uniform point of the fundamental cell outside every scatterer."""
    for _ in range(100000):
        u1 = rng.random()
        u2 = rng.random()
        qx = u1 * basis[0, 0] + u2 * basis[1, 0]
        qy = u1 * basis[0, 1] + u2 * basis[1, 1]
        if _near_lattice_point(basis, rho, u1, u2, qx, qy)[0] == BIG_INT:
            return qx, qy
    return 0.5 * (basis[0, 0] + basis[1, 0]), 0.5 * (basis[0, 1] + basis[1, 1])


@njit(cache=True)
def _sample_fpl_periodic(basis, binv, rlat, rho, mode, qfx, qfy, ex1, ex2,
                         n, t_max, rng):
    """Free-path ensemble; mode 0 = fresh generic start per sample,
    1 = fixed start, 2 = lattice-point center.  Censored flights are -1."""
    out = np.empty(n)
    for i in range(n):
        if mode == 0:
            qx, qy = _draw_generic_start(basis, rho, rng)
            e1, e2 = BIG_INT, BIG_INT
        elif mode == 1:
            qx, qy = qfx, qfy
            e1, e2 = ex1, ex2
        else:
            qx, qy = 0.0, 0.0
            e1, e2 = 0, 0
        a = 2.0 * math.pi * rng.random()
        hit, t, _, _ = _free_path_cells(
            basis, binv, rlat, rho, qx, qy, math.cos(a), math.sin(a), t_max, e1, e2
        )
        out[i] = t if hit else -1.0
    return out


@njit(cache=True)
def _sample_fpl_poisson(intensity, rho, n, t_max, master, rng):
    """Free-path ensemble on annealed Poisson configurations (a fresh
    realization per trajectory, derived from the master seed)."""
    out = np.empty(n)
    for i in range(n):
        seed = _mix64(master ^ np.uint64(i))
        a = 2.0 * math.pi * rng.random()
        hit, t, _, _ = _free_path_poisson(
            intensity, rho, seed, 0.0, 0.0, 0.0, 0.0, math.cos(a), math.sin(a), t_max
        )
        out[i] = t if hit else -1.0
    return out


@njit(cache=True)
def _chain_batch(basis, binv, rlat, rho, n_chains, n_segs, flight_t_max, rng):
    """Billiard path chains from generic starts; chains with a censored
    flight are flagged invalid."""
    segs = np.zeros((n_chains, n_segs, 2))
    ok = np.zeros(n_chains, dtype=np.uint8)
    for i in range(n_chains):
        qx, qy = _draw_generic_start(basis, rho, rng)
        a = 2.0 * math.pi * rng.random()
        vx = math.cos(a)
        vy = math.sin(a)
        good = True
        for j in range(n_segs):
            hit, t, m1, m2 = _free_path_cells(
                basis, binv, rlat, rho, qx, qy, vx, vy, flight_t_max, BIG_INT, BIG_INT
            )
            if not hit:
                good = False
                break
            segs[i, j, 0] = t * vx
            segs[i, j, 1] = t * vy
            cx = m1 * basis[0, 0] + m2 * basis[1, 0]
            cy = m1 * basis[0, 1] + m2 * basis[1, 1]
            qx += t * vx
            qy += t * vy
            nx = (qx - cx) / rho
            ny = (qy - cy) / rho
            nn = math.hypot(nx, ny)
            nx /= nn
            ny /= nn
            dot = 2.0 * (vx * nx + vy * ny)
            vx -= dot * nx
            vy -= dot * ny
            vn = math.hypot(vx, vy)
            vx /= vn
            vy /= vn
        if good:
            ok[i] = 1
    return segs, ok


@njit(cache=True)
def _states_at_time(basis, binv, rlat, rho, qs, vs, t_star):
    """Deterministic evolution of each (q, v) to microscopic time t_star;
    returns final positions and directions."""
    n = len(qs)
    out_q = np.empty((n, 2))
    out_v = np.empty((n, 2))
    for i in range(n):
        qx = qs[i, 0]
        qy = qs[i, 1]
        vx = vs[i, 0]
        vy = vs[i, 1]
        qlx = qx * binv[0, 0] + qy * binv[1, 0]
        qly = qx * binv[0, 1] + qy * binv[1, 1]
        e1, e2 = _near_lattice_point(basis, rho, qlx, qly, qx, qy)
        t_rem = t_star
        while t_rem > 0.0:
            hit, t, m1, m2 = _free_path_cells(
                basis, binv, rlat, rho, qx, qy, vx, vy, t_rem, e1, e2
            )
            e1, e2 = BIG_INT, BIG_INT
            if not hit:
                qx += t_rem * vx
                qy += t_rem * vy
                break
            cx = m1 * basis[0, 0] + m2 * basis[1, 0]
            cy = m1 * basis[0, 1] + m2 * basis[1, 1]
            qx += t * vx
            qy += t * vy
            t_rem -= t
            nx = (qx - cx) / rho
            ny = (qy - cy) / rho
            nn = math.hypot(nx, ny)
            nx /= nn
            ny /= nn
            dot = 2.0 * (vx * nx + vy * ny)
            vx -= dot * nx
            vy -= dot * ny
            vn = math.hypot(vx, vy)
            vx /= vn
            vy /= vn
        out_q[i, 0] = qx
        out_q[i, 1] = qy
        out_v[i, 0] = vx
        out_v[i, 1] = vy
    return out_q, out_v


# ---------------------------------------------------------------------------
# Python API
# ---------------------------------------------------------------------------


def _exclusion_for(cfg, q):
    qlat = q @ cfg._binv
    return _near_lattice_point(cfg.basis, cfg.rho, qlat[0], qlat[1], q[0], q[1])


def free_path(cfg, state, t_max=None, realization_seed=0):
    """First collision of the ray from the given state, or None if none
    occurs before t_max (microscopic units).

    A scatterer containing the start point (including the start-at-center
    ensemble) is excluded, i.e. the particle leaves its own disk freely.
    """
    if t_max is None:
        t_max = cfg.default_t_max()
    q = np.asarray(state.q, dtype=float)
    v = np.asarray(state.v, dtype=float)
    if cfg.kind == "periodic":
        ex1, ex2 = _exclusion_for(cfg, q)
        hit, tau, m1, m2 = _free_path_cells(
            cfg.basis, cfg._binv, cfg._rlat, cfg.rho,
            q[0], q[1], v[0], v[1], float(t_max), ex1, ex2,
        )
        if not hit:
            return None
        center = np.array([m1, m2]) @ cfg.basis
    else:
        hit, tau, cx, cy = _free_path_poisson(
            cfg.intensity, cfg.rho, np.uint64(realization_seed),
            q[0], q[1], q[0], q[1], v[0], v[1], float(t_max),
        )
        if not hit:
            return None
        center = np.array([cx, cy])
    hit_point = q + tau * v
    rel = center - hit_point
    b_in = (rel[0] * v[1] - rel[1] * v[0]) / cfg.rho
    return CollisionRecord(tau=float(tau), center=center, hit_point=hit_point,
                           b_in=float(b_in))


def collide(cfg, state, rec):
    """Specular update at a collision record produced by free_path."""
    n = (rec.hit_point - rec.center) / cfg.rho
    n = n / math.hypot(n[0], n[1])
    return MicroState(q=rec.hit_point, v=reflect(state.v, n))


def trajectory(cfg, state, n_collisions, t_max=None, realization_seed=0):
    """Chain of straight segments between consecutive collisions, truncated
    early if a flight exceeds t_max."""
    if n_collisions < 1:
        raise ValueError("need at least one collision")
    if t_max is None:
        t_max = cfg.default_t_max()
    origin = np.asarray(state.q, dtype=float).copy()
    segments = []
    cur = state
    q0 = origin
    for _ in range(n_collisions):
        if cfg.kind == "poisson":
            rec = _poisson_free_path_from(cfg, cur, q0, t_max, realization_seed)
        else:
            rec = free_path(cfg, cur, t_max=t_max)
        if rec is None:
            break
        segments.append(rec.tau * cur.v)
        cur = collide(cfg, cur, rec)
    return PathChain(
        origin=origin,
        segments=np.array(segments).reshape(-1, 2),
        final_direction=cur.v.copy(),
    )


def _poisson_free_path_from(cfg, state, q0, t_max, realization_seed):
    hit, tau, cx, cy = _free_path_poisson(
        cfg.intensity, cfg.rho, np.uint64(realization_seed),
        q0[0], q0[1], state.q[0], state.q[1], state.v[0], state.v[1], float(t_max),
    )
    if not hit:
        return None
    center = np.array([cx, cy])
    hit_point = state.q + tau * state.v
    rel = center - hit_point
    return CollisionRecord(
        tau=float(tau), center=center, hit_point=hit_point,
        b_in=float((rel[0] * state.v[1] - rel[1] * state.v[0]) / cfg.rho),
    )


def to_macroscopic(chain, rho):
    """Boltzmann-Grad rescaling of a microscopic chain: lengths and times
    shrink by rho (d = 2), directions are unchanged."""
    return PathChain(
        origin=chain.origin * rho,
        segments=chain.segments * rho,
        final_direction=chain.final_direction,
    )


def sample_fpl(cfg, source, n_samples, rng, t_max=None):
    """Macroscopic free path length ensemble.

    source: 'generic' (fresh uniform start per sample), ('fixed', q), or
    'center' (start at a lattice point, its own scatterer removed).
    Returns (samples, n_censored); censored flights appear as +inf.
    """
    if t_max is None:
        t_max = cfg.default_t_max()
    n = int(n_samples)
    if cfg.kind == "poisson":
        if source != "generic":
            raise ValueError("poisson mode supports only generic starts")
        master = np.uint64(rng.integers(0, 2**63))
        micro = _sample_fpl_poisson(cfg.intensity, cfg.rho, n, float(t_max), master, rng)
    else:
        if source == "generic":
            mode, qf, ex = 0, np.zeros(2), (BIG_INT, BIG_INT)
        elif source == "center":
            mode, qf, ex = 2, np.zeros(2), (0, 0)
        elif isinstance(source, tuple) and source[0] == "fixed":
            qf = np.asarray(source[1], dtype=float)
            mode, ex = 1, _exclusion_for(cfg, qf)
        else:
            raise ValueError(f"unknown source {source!r}")
        micro = _sample_fpl_periodic(
            cfg.basis, cfg._binv, cfg._rlat, cfg.rho, mode,
            qf[0], qf[1], ex[0], ex[1], n, float(t_max), rng,
        )
    censored = micro < 0.0
    samples = np.where(censored, np.inf, micro * cfg.rho)
    return samples, int(censored.sum())


def sample_chains(cfg, n_chains, n_segments, rng, t_max=None):
    """Billiard chains from generic starts, as macroscopic segment vectors;
    returns (segments (n, k, 2), valid mask)."""
    if t_max is None:
        t_max = cfg.default_t_max()
    if cfg.kind != "periodic":
        raise ValueError("chain ensembles are defined for periodic configurations")
    segs, ok = _chain_batch(
        cfg.basis, cfg._binv, cfg._rlat, cfg.rho,
        int(n_chains), int(n_segments), float(t_max), rng,
    )
    return segs * cfg.rho, ok.astype(bool)


def states_at_time(cfg, macro_box, t_macro, n_particles, rng):
    """Billiard ensemble evaluated at macroscopic time t: initial positions
    uniform in the macroscopic box, directions uniform; returns macroscopic
    (positions, directions)."""
    if cfg.kind != "periodic":
        raise ValueError("defined for periodic configurations")
    n = int(n_particles)
    x0, x1, y0, y1 = macro_box
    qs = np.empty((n, 2))
    vs = np.empty((n, 2))
    for i in range(n):
        qs[i, 0] = (x0 + (x1 - x0) * rng.random()) / cfg.rho
        qs[i, 1] = (y0 + (y1 - y0) * rng.random()) / cfg.rho
        vs[i] = random_direction(rng)
    out_q, out_v = _states_at_time(
        cfg.basis, cfg._binv, cfg._rlat, cfg.rho, qs, vs, float(t_macro) / cfg.rho
    )
    return out_q * cfg.rho, out_v


def poisson_realize(intensity, rho, region, seed, exclude_q=None):
    """Scatterer centers of the hashed Poisson realization inside the
    region (x0, x1, y0, y1), thinned around exclude_q."""
    x0, x1, y0, y1 = region
    seed = np.uint64(seed)
    pts = []
    for ci in range(int(math.floor(x0)), int(math.ceil(x1)) + 1):
        for cj in range(int(math.floor(y0)), int(math.ceil(y1)) + 1):
            st = _cell_state(seed, ci, cj)
            k, st = _poisson_count(intensity, st)
            for _ in range(k):
                u1, st = _u01(st)
                u2, st = _u01(st)
                pts.append((ci + u1, cj + u2))
    pts = np.array(pts).reshape(-1, 2)
    inside = (pts[:, 0] >= x0) & (pts[:, 0] < x1) & (pts[:, 1] >= y0) & (pts[:, 1] < y1)
    pts = pts[inside]
    if exclude_q is not None:
        d2 = np.sum((pts - np.asarray(exclude_q)) ** 2, axis=1)
        pts = pts[d2 >= rho * rho]
    return pts


def trajectory_rows(chain, rho=None):
    """Rows (t, qx, qy, vx, vy, event) describing a chain for CSV dumps;
    positions are rescaled by rho when given (macroscopic output)."""
    scale = 1.0 if rho is None else rho
    pts = chain.points * scale
    times = np.concatenate([[0.0], chain.times * scale])
    dirs = chain.directions()
    rows = []
    for j in range(chain.n + 1):
        if j < chain.n:
            v = dirs[j]
            event = "start" if j == 0 else "collision"
        else:
            v = chain.final_direction if chain.final_direction is not None else dirs[-1]
            event = "end"
        rows.append((times[j], pts[j][0], pts[j][1], v[0], v[1], event))
    return rows
