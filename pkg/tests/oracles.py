"""Independent reference implementations used as test oracles.

Deliberately dumb: exhaustive enumeration and generic numerical integration,
sharing no algorithmic structure with the library code they check.
"""

import math

import numpy as np


def phi0_reference(xi, w, z):
    """The transition kernel density, written out directly."""
    if xi <= 0.0:
        return 0.0
    num = 1.0 / xi - max(abs(w), abs(z)) - 1.0
    den = abs(w + z)
    if den == 0.0:
        return 6.0 / math.pi**2 if num > 0.0 else 0.0
    x = 1.0 + num / den
    x = min(max(x, 0.0), 1.0)
    return 6.0 / math.pi**2 * x


def free_path_brute_force(basis, rho, q, v, t_max, exclude=None):
    """Exhaustive collision search over every lattice point within reach.

    Returns (tau, (m1, m2)) or None.  exclude is an integer lattice point
    to ignore.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    binv = np.linalg.inv(basis)
    reach = t_max + rho
    q_lat = q @ binv
    margins = reach * np.linalg.norm(binv, axis=0)
    m1 = np.arange(math.floor(q_lat[0] - margins[0]) - 1,
                   math.ceil(q_lat[0] + margins[0]) + 2)
    m2 = np.arange(math.floor(q_lat[1] - margins[1]) - 1,
                   math.ceil(q_lat[1] + margins[1]) + 2)
    g1, g2 = np.meshgrid(m1, m2, indexing="ij")
    ms = np.stack([g1.ravel(), g2.ravel()], axis=1)
    if exclude is not None:
        keep = ~((ms[:, 0] == exclude[0]) & (ms[:, 1] == exclude[1]))
        ms = ms[keep]
    centers = ms @ basis
    rel = centers - q
    tm = rel @ v
    d2 = np.sum(rel * rel, axis=1)
    disc = rho * rho - (d2 - tm * tm)
    ok = disc > 0.0
    t_in = np.where(ok, tm - np.sqrt(np.where(ok, disc, 0.0)), np.inf)
    t_in = np.where(t_in > 1e-9, t_in, np.inf)
    i = int(np.argmin(t_in))
    if t_in[i] > t_max:
        return None
    return float(t_in[i]), (int(ms[i, 0]), int(ms[i, 1]))


def cylinder_hit_brute_force(basis, translation, xi, span=60):
    """Exhaustive open-cylinder membership test over a large integer box."""
    m = np.arange(-span, span + 1)
    g1, g2 = np.meshgrid(m, m, indexing="ij")
    pts = np.stack([g1.ravel(), g2.ravel()], axis=1) @ basis + translation
    return bool(np.any((pts[:, 0] > 0.0) & (pts[:, 0] < xi)
                       & (np.abs(pts[:, 1]) < 1.0)))


def unit_ball_volume(n):
    """Volume of the n-dimensional unit ball by the dimension recursion."""
    if n == 0:
        return 1.0
    if n == 1:
        return 2.0
    return unit_ball_volume(n - 2) * 2.0 * math.pi / n
