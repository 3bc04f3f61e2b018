"""Haar-random unimodular lattices and affine lattices in the plane,
cylinder intersection tests, and the renormalization identity.

A random lattice is built from a point (x, y) of the modular surface drawn
from the hyperbolic area measure (3/pi) dx dy / y^2 on the standard
fundamental domain, the basis {y^(-1/2)(1,0), y^(-1/2)(x,y)}, and an
independent uniform rotation (cylinder tests are not rotation invariant, so
the full frame bundle matters).  Affine samples add a translation uniform in
the fundamental cell.  Intersection probabilities of the reference cylinder
Z(xi) = (0, xi) x (-1, 1) with random (affine) lattices estimate the free
path CDFs independently of both the billiard and the kernel quadrature.

Lattice points within 1e-12 of the cylinder boundary are counted as misses
and tallied; the tally must stay a negligible fraction of the sample.
"""

import dataclasses
import math

import numpy as np
from numba import njit

BOUNDARY_TOL = 1e-12
_SQRT3_2 = math.sqrt(3.0) / 2.0


@dataclasses.dataclass(frozen=True)
class LatticeSample:
    """Unimodular basis (rows) plus a translation (zero for lattice-space
    samples, inside the fundamental cell for affine samples)."""

    basis: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        if abs(abs(np.linalg.det(self.basis)) - 1.0) > 1e-10:
            raise ValueError("basis must have determinant +-1")


@dataclasses.dataclass(frozen=True)
class Cylinder:
    """Reference region {0 < x1 < xi, |x2| < 1}."""

    xi: float

    def __post_init__(self):
        if not self.xi > 0.0:
            raise ValueError("cylinder length must be positive")


# ---------------------------------------------------------------------------
# numba cores
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _sample_xy(rng):
    """Point of the modular fundamental domain from (3/pi) dx dy / y^2."""
    while True:
        x = rng.random() - 0.5
        y0 = math.sqrt(1.0 - x * x)
        if rng.random() * y0 <= _SQRT3_2:
            y = y0 / max(1.0 - rng.random(), 1e-300)
            return x, y


@njit(cache=True, inline="always")
def _sample_frame(rng, affine):
    """Random lattice frame: basis entries and translation components."""
    x, y = _sample_xy(rng)
    s = 1.0 / math.sqrt(y)
    # rows of the unrotated basis
    a00, a01 = s, 0.0
    a10, a11 = s * x, s * y
    phi = 2.0 * math.pi * rng.random()
    c = math.cos(phi)
    sn = math.sin(phi)
    b00 = a00 * c
    b01 = a00 * sn
    b10 = a10 * c - a11 * sn
    b11 = a10 * sn + a11 * c
    if affine:
        u1 = rng.random()
        u2 = rng.random()
        tx = u1 * b00 + u2 * b10
        ty = u1 * b01 + u2 * b11
    else:
        tx = 0.0
        ty = 0.0
    return b00, b01, b10, b11, tx, ty


@njit(cache=True, inline="always")
def _reduce2(b00, b01, b10, b11):
    """Lagrange-Gauss reduction; returns rows with the first no longer
    than the second."""
    for _ in range(64):
        n0 = b00 * b00 + b01 * b01
        n1 = b10 * b10 + b11 * b11
        if n0 > n1:
            b00, b01, b10, b11 = b10, b11, b00, b01
            n0, n1 = n1, n0
        mu = round((b00 * b10 + b01 * b11) / n0)
        if mu == 0.0:
            break
        b10 -= mu * b00
        b11 -= mu * b01
    if b00 * b00 + b01 * b01 > b10 * b10 + b11 * b11:
        b00, b01, b10, b11 = b10, b11, b00, b01
    return b00, b01, b10, b11


@njit(cache=True)
def _cylinder_hit_core(b00, b01, b10, b11, tx, ty, xi):
    """Does the affine lattice {m B + t} meet the open cylinder?

    Returns (hit, n_boundary): points within BOUNDARY_TOL of the boundary
    count as misses but are tallied."""
    b00, b01, b10, b11 = _reduce2(b00, b01, b10, b11)
    det = b00 * b11 - b01 * b10
    i01 = -b01 / det  # second column of the basis inverse, for m2 ranges
    i11 = b00 / det
    # m2 range from the corner preimages of the (closed) cylinder box
    m2_lo = math.inf
    m2_hi = -math.inf
    for cx in (0.0, xi):
        for cy in (-1.0, 1.0):
            px = cx - tx
            py = cy - ty
            m2 = px * i01 + py * i11
            m2_lo = min(m2_lo, m2)
            m2_hi = max(m2_hi, m2)
    n_boundary = 0
    for m2 in range(int(math.floor(m2_lo)) - 1, int(math.ceil(m2_hi)) + 2):
        base1 = m2 * b10 + tx
        base2 = m2 * b11 + ty
        # p1 = m1*b00 + base1 in (0, xi); p2 = m1*b01 + base2 in (-1, 1)
        lo = -math.inf
        hi = math.inf
        if b00 != 0.0:
            r1 = -base1 / b00
            r2 = (xi - base1) / b00
            lo = max(lo, min(r1, r2))
            hi = min(hi, max(r1, r2))
        elif not 0.0 < base1 < xi:
            continue
        if b01 != 0.0:
            r1 = (-1.0 - base2) / b01
            r2 = (1.0 - base2) / b01
            lo = max(lo, min(r1, r2))
            hi = min(hi, max(r1, r2))
        elif not -1.0 < base2 < 1.0:
            continue
        if lo > hi:
            continue
        for m1 in range(int(math.floor(lo)) - 1, int(math.ceil(hi)) + 2):
            p1 = m1 * b00 + base1
            p2 = m1 * b01 + base2
            if (BOUNDARY_TOL < p1 < xi - BOUNDARY_TOL
                    and -1.0 + BOUNDARY_TOL < p2 < 1.0 - BOUNDARY_TOL):
                return True, n_boundary
            if -BOUNDARY_TOL < p1 < xi + BOUNDARY_TOL and abs(p2) < 1.0 + BOUNDARY_TOL:
                if abs(p1) > BOUNDARY_TOL or abs(p2) > BOUNDARY_TOL:
                    # ambiguous boundary graze; the point at the cylinder
                    # base itself is the structural exclusion, not a graze
                    n_boundary += 1
    return False, n_boundary


@njit(cache=True)
def _estimate_mc_core(xi, n, affine, rng):
    hits = 0
    boundary = 0
    for _ in range(n):
        b00, b01, b10, b11, tx, ty = _sample_frame(rng, affine)
        h, nb = _cylinder_hit_core(b00, b01, b10, b11, tx, ty, xi)
        if h:
            hits += 1
        boundary += nb
    return hits, boundary


@njit(cache=True)
def _cylinder_long_hit(basis, binv, rlat, rho, qx, qy, vx, vy, length):
    """Does any lattice point fall in the open cylinder of radius rho
    around the segment q + s v, 0 < s < length?  Cell traversal along the
    ray, mirroring the billiard collision search."""
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

    wx = -vy
    wy = vx
    max_steps = int((abs(dx) + abs(dy)) * length) + 8
    for _ in range(max_steps):
        lo1 = int(math.ceil(ci - rlat))
        hi1 = int(math.floor(ci + 1.0 + rlat))
        lo2 = int(math.ceil(cj - rlat))
        hi2 = int(math.floor(cj + 1.0 + rlat))
        for m1 in range(lo1, hi1 + 1):
            for m2 in range(lo2, hi2 + 1):
                ox = m1 * basis[0, 0] + m2 * basis[1, 0] - qx
                oy = m1 * basis[0, 1] + m2 * basis[1, 1] - qy
                s = ox * vx + oy * vy
                u = ox * wx + oy * wy
                if (BOUNDARY_TOL < s < length - BOUNDARY_TOL
                        and abs(u) < rho - BOUNDARY_TOL):
                    return True
        t_exit = min(tmaxx, tmaxy)
        if t_exit > length:
            break
        if tmaxx < tmaxy:
            ci += stepi
            tmaxx += tdx
        else:
            cj += stepj
            tmaxy += tdy
    return False


# ---------------------------------------------------------------------------
# Python API
# ---------------------------------------------------------------------------


def sample_modular_surface(rng):
    """(x, y) on the modular fundamental domain from the hyperbolic area
    probability measure."""
    return _sample_xy(rng)


def sample_X1(rng):
    """Haar-random unimodular lattice (uniform frame orientation)."""
    b00, b01, b10, b11, _, _ = _sample_frame(rng, False)
    return LatticeSample(basis=np.array([[b00, b01], [b10, b11]]),
                         translation=np.zeros(2))


def sample_X(rng):
    """Haar-random affine lattice: a lattice plus a uniform translation in
    its fundamental cell."""
    b00, b01, b10, b11, tx, ty = _sample_frame(rng, True)
    return LatticeSample(basis=np.array([[b00, b01], [b10, b11]]),
                         translation=np.array([tx, ty]))


def cylinder_hit(lat: LatticeSample, cyl: Cylinder):
    """True iff some point of the (affine) lattice lies in the open
    cylinder; boundary grazes within 1e-12 count as misses."""
    hit, _ = _cylinder_hit_core(
        lat.basis[0, 0], lat.basis[0, 1], lat.basis[1, 0], lat.basis[1, 1],
        lat.translation[0], lat.translation[1], float(cyl.xi),
    )
    return bool(hit)


def estimate_F0_mc(xi, n_samples, rng):
    """Monte Carlo estimate of the center-start free path CDF at xi: the
    probability that a random lattice meets Z(xi).  Returns
    (estimate, stderr, n_boundary)."""
    n = int(n_samples)
    hits, boundary = _estimate_mc_core(float(xi), n, False, rng)
    p = hits / n
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / n), boundary


def estimate_F_mc(xi, n_samples, rng):
    """Monte Carlo estimate of the generic-start free path CDF at xi: the
    probability that a random affine lattice meets Z(xi)."""
    n = int(n_samples)
    hits, boundary = _estimate_mc_core(float(xi), n, True, rng)
    p = hits / n
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / n), boundary


def renormalize(cfg, q, v, rho, xi):
    """Renormalization identity: the lattice shifted by -q meets the long
    thin cylinder of length xi/rho and radius rho in direction v iff the
    rotated and diagonally rescaled lattice meets the reference cylinder
    Z(xi).  Returns (hit_long, hit_renormalized); the two are equal up to
    the volume-preserving linear map."""
    basis = np.asarray(getattr(cfg, "basis", cfg), dtype=float)
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    binv = np.linalg.inv(basis)
    rlat = rho * float(np.linalg.norm(binv, 2))
    length = xi / rho
    hit_long = bool(_cylinder_long_hit(
        basis, binv, rlat, rho, q[0], q[1], v[0], v[1], length
    ))

    rot = np.array([[v[0], -v[1]], [v[1], v[0]]])  # row convention: v @ rot = e1
    dil = np.array([[rho, 0.0], [0.0, 1.0 / rho]])
    m = rot @ dil
    lat = LatticeSample(basis=basis @ m, translation=-(q @ m))
    hit_renorm = cylinder_hit(lat, Cylinder(xi=xi))
    return hit_long, hit_renorm
