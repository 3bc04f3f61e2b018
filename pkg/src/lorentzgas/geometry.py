"""Exact planar geometry for hard-disk scattering.

Directions are unit vectors stored as float64 arrays of shape (2,), never
angles, to avoid branch cuts.  All maps below are pure functions and are
numba-compiled so they can be called both from Python and from the hot
simulation loops.

Sign conventions (self-consistent, fixed here once and for all):
  * the impact parameter b is positive when the outgoing direction is
    rotated counterclockwise from the incoming one;
  * the exit parameter s is defined by time reversal,
    s(v_out, v_prev) = b(-v_out, -v_prev).
"""

import math

import numpy as np
from numba import njit

UNIT_TOL = 1e-12


def direction(ux: float, uy: float) -> np.ndarray:
    """Build a unit direction vector, renormalizing the input components."""
    n = math.hypot(ux, uy)
    if n < 1e-300:
        raise ValueError("zero vector cannot be normalized to a direction")
    return np.array([ux / n, uy / n])


def random_direction(rng) -> np.ndarray:
    """Uniform random direction on the circle."""
    a = rng.random() * 2.0 * math.pi
    return np.array([math.cos(a), math.sin(a)])


@njit(cache=True)
def signed_angle(u, w):
    """Signed angle in (-pi, pi] taking direction u onto direction w."""
    cross = u[0] * w[1] - u[1] * w[0]
    dot = u[0] * w[0] + u[1] * w[1]
    a = math.atan2(cross, dot)
    if a == -math.pi:
        a = math.pi
    return a


@njit(cache=True)
def rotation_to_e1(v):
    """Rotation matrix R with det +1 such that R @ v = (1, 0)."""
    return np.array(((v[0], v[1]), (-v[1], v[0])))


@njit(cache=True)
def rotate(v, angle):
    c = math.cos(angle)
    s = math.sin(angle)
    return np.array((c * v[0] - s * v[1], s * v[0] + c * v[1]))


@njit(cache=True)
def reflect(v, n):
    """Specular reflection of v at a surface with outward unit normal n."""
    d = 2.0 * (v[0] * n[0] + v[1] * n[1])
    return np.array((v[0] - d * n[0], v[1] - d * n[1]))


@njit(cache=True)
def impact_parameter(v_in, v_out):
    """Signed impact parameter (units of the disk radius) of a collision
    deflecting v_in into v_out.

    |b| = cos(theta/2) where theta is the deflection angle; b > 0 for a
    counterclockwise deflection.  Inverse of scatter_from_impact.
    """
    theta = signed_angle(v_in, v_out)
    if theta == 0.0:
        raise ValueError("impact parameter undefined for equal directions")
    b = math.cos(0.5 * abs(theta))
    return b if theta > 0.0 else -b


@njit(cache=True)
def scatter_from_impact(v_in, b):
    """Outgoing direction after specular reflection off a unit disk hit
    with signed impact parameter b, |b| < 1."""
    if abs(b) >= 1.0:
        raise ValueError("no collision for |b| >= 1")
    theta = math.pi - 2.0 * math.asin(abs(b))
    if b < 0.0:
        theta = -theta
    return rotate(v_in, theta)


@njit(cache=True)
def exit_parameter(v_out, v_prev):
    """Signed perpendicular offset (units of the disk radius) of the
    outgoing ray relative to the scatterer just left.

    Defined by time reversal: s(v_out, v_prev) = b(-v_out, -v_prev).  For a
    hard disk this equals minus the impact parameter of the collision that
    turned v_prev into v_out.
    """
    phi = signed_angle(v_out, v_prev)
    if phi == 0.0:
        raise ValueError("exit parameter undefined for equal directions")
    s = math.cos(0.5 * abs(phi))
    return s if phi > 0.0 else -s


@njit(cache=True)
def diff_cross_section(v_in, v_out):
    """Hard-disk differential cross section in two dimensions,
    one quarter of the chord length between the two directions."""
    dx = v_in[0] - v_out[0]
    dy = v_in[1] - v_out[1]
    return 0.25 * math.hypot(dx, dy)
