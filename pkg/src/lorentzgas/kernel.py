"""The limiting 2D transition kernel of the periodic Lorentz gas and
everything built from it: the collision kernel, the stationary density,
free-path-length CDFs by quadrature, conditional sampling of (flight time,
impact parameter), the memoryless exponential kernel, and closed-form
asymptotic constants for general dimension.

The kernel density is

    phi0(xi, w, z) = (6/pi^2) * clamp01(1 + (1/xi - max(|w|,|z|) - 1) / |w+z|)

with w the impact parameter of the next collision and z minus the exit
parameter of the previous one.  It is piecewise a Moebius function of each
variable; the kink lines are known in closed form and all quadrature below
aligns integration panels with them.
"""

import dataclasses
import functools
import math
import os
import tempfile

import numpy as np
from numba import njit, vectorize
from scipy.interpolate import PchipInterpolator
from scipy.special import gamma as _gamma, zeta as _zeta

from . import _quad
from .geometry import diff_cross_section, exit_parameter, impact_parameter

SIX_OVER_PI2 = 6.0 / math.pi**2
NU2 = 2.0  # total scattering cross section in 2D (length of the unit interval-ball boundary... volume of the 1-ball)

XI_CUT = 1000.0  # quadrature cutoff; beyond it the analytic tail takes over

_TABLE_VERSION = 3


class SamplingCapError(RuntimeError):
    """Rejection sampler exceeded its iteration cap."""


def upsilon(x):
    """Clamp to [0, 1]: 0 for x <= 0, x on (0, 1), 1 for x >= 1."""
    return np.clip(x, 0.0, 1.0)


@njit(cache=True)
def phi0_scalar(xi, w, z):
    # the clamp argument is rewritten as (1/xi - thresh)/den with
    # thresh = max(|w|,|z|) + 1 - |w+z|, evaluated exactly as in
    # phi0_support_bound so the two never disagree about the support; on
    # the null line den = 0 this reduces to the one-sided-limit indicator
    if xi <= 0.0:
        return 0.0
    inv = 1.0 / xi
    den = abs(w + z)
    thresh = max(abs(w), abs(z)) + 1.0 - den
    if inv <= thresh:
        return 0.0
    if inv - thresh >= den:  # includes den == 0
        return SIX_OVER_PI2
    return SIX_OVER_PI2 * (inv - thresh) / den


@vectorize(["float64(float64, float64, float64)"], cache=True)
def phi0(xi, w, z):
    """Transition probability density for flight time xi, next impact
    parameter w, given previous exit parameter -z.  On the null line
    w + z = 0 the one-sided limit (an indicator) is returned."""
    return phi0_scalar(xi, w, z)


def phi0_support_bound(w, z):
    """Smallest xi_max such that phi0(xi, w, z) = 0 for all xi >= xi_max
    (+inf when the support is unbounded, only at |w| = |z| = 1, wz > 0)."""
    den = max(abs(w), abs(z)) + 1.0 - abs(w + z)
    if den <= 0.0:
        return math.inf
    return 1.0 / den


def _z_breakpoints(xi, w):
    """Panel edges for integrating phi0(xi, w, .) over [-1, 1]."""
    aw = abs(w)
    k = 1.0 / xi - 1.0
    pts = [-1.0, -aw, aw, 1.0]
    if -1.0 < k < 1.0:
        pts.append(k)
    if -1.0 < -k < 1.0:
        pts.append(-k)
    return np.unique(np.clip(pts, -1.0, 1.0))


def phi0_marginal_z(xi, w, tol=1e-12):
    """Integral of phi0(xi, w, z) over z in [-1, 1]."""
    aw = abs(w)
    val, _ = _quad.integrate(
        lambda zz: phi0(xi, aw, zz), _z_breakpoints(xi, aw), tol=tol
    )
    return val


def phi0_marginal_w(xi, z, tol=1e-12):
    """Integral of phi0(xi, w, z) over w in [-1, 1]."""
    # phi0 is symmetric under (w, z) swap and under (w, z) -> (-w, -z)
    return phi0_marginal_z(xi, abs(z), tol=tol)


def _graded(edges, splits=3, ratio=0.15):
    """Refine panel edges geometrically toward both endpoints of each panel;
    guards Gauss-Legendre accuracy when a Moebius pole sits at an edge."""
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        width = b - a
        if width <= 0.0:
            continue
        left = [a + width * ratio**k for k in range(splits, 0, -1)]
        right = [b - width * ratio**k for k in range(splits, 0, -1)]
        out.extend([a] + left + right[::-1])
    out.append(edges[-1])
    return np.unique(np.asarray(out))


def phi0_marginal_wz(xi, order=24):
    """Integral of phi0(xi, w, z) over the full square [-1, 1]^2."""
    if xi <= 0.0:
        return 4.0 * SIX_OVER_PI2 if xi == 0.0 else 0.0
    k = 1.0 / xi - 1.0
    w_edges = [0.0, 1.0]
    if 0.0 < abs(k) < 1.0:
        w_edges.append(abs(k))
    w_edges = _graded(np.unique(w_edges), splits=3)
    gx, gw = _quad._gl_nodes(order)
    total = 0.0
    for a, b in zip(w_edges[:-1], w_edges[1:]):
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        for node, weight in zip(gx, gw):
            wv = mid + half * node
            z_edges = _graded(_z_breakpoints(xi, wv), splits=3)
            centers = 0.5 * (z_edges[:-1] + z_edges[1:])
            halves = 0.5 * (z_edges[1:] - z_edges[:-1])
            zz = (centers[:, None] + halves[:, None] * gx[None, :]).ravel()
            vals = phi0(xi, wv, zz).reshape(len(centers), order)
            inner = float(np.sum(halves * (vals @ gw)))
            total += weight * half * inner
    return 2.0 * total  # (w,z) -> (-w,-z) symmetry: w >= 0 doubles


def impact_time_mass(s, tol=1e-9):
    """Total mass of phi0(xi, b, -s) over b in [-1,1] and xi > 0.

    Equals 1 for every exit parameter |s| <= 1; exercised by tests as the
    normalization invariant of the collision kernel.
    """
    z = -s
    az = abs(z)
    if az >= 1.0:
        xi_hi = XI_CUT
    else:
        xi_hi = 1.0 / (1.0 - az)
    seeds = [0.0, xi_hi]
    for cand in (1.0 / (1.0 + az), 0.5, 1.0):
        if 0.0 < cand < xi_hi:
            seeds.append(cand)
    val, err = _quad.integrate(
        lambda xs: np.array([phi0_marginal_w(x, z) for x in xs]),
        np.unique(seeds),
        tol=tol,
        order=16,
    )
    return val, err


# ---------------------------------------------------------------------------
# free path length distributions
# ---------------------------------------------------------------------------


def _cache_path():
    base = os.environ.get("XDG_CACHE_HOME", os.path.expanduser("~/.cache"))
    return os.path.join(base, "lorentzgas", f"fp_tables_v{_TABLE_VERSION}.npz")


def _build_f0_grid():
    """Cumulative quadrature of the center-start free path density
    int phi0(xi', 0, z) dz on [0, 1]."""
    lin = np.linspace(0.0, 1.0, 641)
    near1 = 1.0 - np.geomspace(1e-7, 0.2, 80)
    xs = np.unique(np.concatenate([lin, near1, [0.5, 1.0]]))
    dens = lambda t: np.array([phi0_marginal_z(x, 0.0) for x in t])
    vals = np.zeros_like(xs)
    acc = 0.0
    for i in range(1, len(xs)):
        inc, _ = _quad.integrate(dens, [xs[i - 1], xs[i]], tol=1e-13, order=16)
        acc += inc
        vals[i] = acc
    return xs, vals


def _build_g_grid():
    """Total kernel mass G(xi) = int int phi0 dw dz on a kink-aware grid."""
    lin = np.arange(0.0, 2.0 + 1e-12, 1.0 / 256.0)
    logs = np.geomspace(2.0, XI_CUT, 320)
    xs = np.unique(np.concatenate([lin, logs]))
    gs = np.array([phi0_marginal_wz(x) for x in xs])
    return xs, gs


@dataclasses.dataclass(frozen=True)
class FreePathTables:
    """Interpolated free-path CDFs with analytic power-law tail handling.

    F0 is the CDF of the macroscopic free path from a scatterer center
    (supported on [0, 1]); F is the CDF from a generic starting point, with
    tail 1 - F ~ f_tail / xi.  tail_error bounds the mass ignored beyond
    the quadrature cutoff.
    """

    f0_interp: PchipInterpolator
    cum_g: PchipInterpolator
    cum_cum_g: PchipInterpolator
    g_interp: PchipInterpolator
    mass_to_cut: float
    f_at_cut: float
    tail_coeff: float
    tail_error: float

    @classmethod
    def build(cls):
        f0x, f0v = _build_f0_grid()
        gx, gv = _build_g_grid()
        f0_interp = PchipInterpolator(f0x, f0v, extrapolate=False)
        g_interp = PchipInterpolator(gx, gv, extrapolate=False)
        cum_g = g_interp.antiderivative()
        cum_cum_g = cum_g.antiderivative()
        f_tail = asymptotic_constants(2).f_tail
        mass_to_cut = float(cum_g(XI_CUT)) + f_tail / XI_CUT**2
        f_at_cut = mass_to_cut * XI_CUT - float(cum_cum_g(XI_CUT))
        return cls(
            f0_interp=f0_interp,
            cum_g=cum_g,
            cum_cum_g=cum_cum_g,
            g_interp=g_interp,
            mass_to_cut=mass_to_cut,
            f_at_cut=f_at_cut,
            tail_coeff=f_tail,
            tail_error=f_tail / XI_CUT,
        )

    def f0(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.empty_like(xi)
        low = xi < 0.0
        inside = (xi >= 0.0) & (xi < 1.0)
        out[low] = 0.0
        out[inside] = self.f0_interp(xi[inside])
        out[xi >= 1.0] = self.f0_interp(1.0)
        return out if out.ndim else float(out)

    def remaining_density(self, xi):
        """Density of the free path from a generic point: the mass of
        flights longer than xi, int_xi^inf G."""
        xi = np.asarray(xi, dtype=float)
        out = np.where(
            xi <= XI_CUT,
            self.mass_to_cut - np.nan_to_num(self.cum_g(np.minimum(xi, XI_CUT))),
            self.tail_coeff / np.maximum(xi, XI_CUT) ** 2,
        )
        return out if out.ndim else float(out)

    def f(self, xi):
        xi = np.asarray(xi, dtype=float)
        inside = np.minimum(xi, XI_CUT)
        val = self.mass_to_cut * inside - np.nan_to_num(self.cum_cum_g(inside))
        beyond = xi > XI_CUT
        if np.any(beyond):
            val = np.where(
                beyond,
                self.f_at_cut + self.tail_coeff * (1.0 / XI_CUT - 1.0 / np.maximum(xi, XI_CUT)),
                val,
            )
        val = np.where(xi <= 0.0, 0.0, val)
        return val if val.ndim else float(val)


def _tables_from_arrays(data):
    f0_interp = PchipInterpolator(data["f0x"], data["f0v"], extrapolate=False)
    g_interp = PchipInterpolator(data["gx"], data["gv"], extrapolate=False)
    cum_g = g_interp.antiderivative()
    cum_cum_g = cum_g.antiderivative()
    f_tail = asymptotic_constants(2).f_tail
    mass_to_cut = float(cum_g(XI_CUT)) + f_tail / XI_CUT**2
    f_at_cut = mass_to_cut * XI_CUT - float(cum_cum_g(XI_CUT))
    return FreePathTables(
        f0_interp=f0_interp,
        cum_g=cum_g,
        cum_cum_g=cum_cum_g,
        g_interp=g_interp,
        mass_to_cut=mass_to_cut,
        f_at_cut=f_at_cut,
        tail_coeff=f_tail,
        tail_error=f_tail / XI_CUT,
    )


@functools.lru_cache(maxsize=1)
def free_path_tables():
    """Process-wide singleton of the quadrature tables (disk cached)."""
    path = _cache_path()
    if not os.environ.get("LORENTZGAS_NO_CACHE"):
        try:
            with np.load(path) as data:
                return _tables_from_arrays(data)
        except (OSError, KeyError, ValueError):
            pass
    f0x, f0v = _build_f0_grid()
    gx, gv = _build_g_grid()
    if not os.environ.get("LORENTZGAS_NO_CACHE"):
        try:
            os.makedirs(os.path.dirname(path), exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), suffix=".npz")
            with os.fdopen(fd, "wb") as fh:
                np.savez(fh, f0x=f0x, f0v=f0v, gx=gx, gv=gv)
            os.replace(tmp, path)
        except OSError:
            pass
    return _tables_from_arrays({"f0x": f0x, "f0v": f0v, "gx": gx, "gv": gv})


def F0_quadrature(xi):
    """CDF of the macroscopic free path from a scatterer center."""
    return free_path_tables().f0(xi)


def F_quadrature(xi):
    """CDF of the macroscopic free path from a generic starting point."""
    return free_path_tables().f(xi)


# ---------------------------------------------------------------------------
# collision kernel and stationary density
# ---------------------------------------------------------------------------


def p0(v0, v, xi, v_plus):
    """Collision kernel: density to exit the previous scatterer (reached
    with incoming direction v0, left with direction v) and hit the next one
    after flight time xi with outgoing direction v_plus."""
    w = impact_parameter(v, v_plus)
    s = exit_parameter(v, v0)
    return diff_cross_section(v, v_plus) * float(phi0(xi, w, -s))


def p0_exponential(v0, v, xi, v_plus):
    """Memoryless variant of the collision kernel (disordered scatterers)."""
    return diff_cross_section(v, v_plus) * math.exp(-NU2 * xi)


def stationary_p(v, xi, v_plus, tol=1e-8):
    """Stationary extended-phase-space density p(v, xi, v_plus), computed by
    nested adaptive quadrature over the incoming direction and the flight
    time, per its defining double integral.

    Raises QuadratureError when the error estimate exceeds tol.
    """
    w = impact_parameter(v, v_plus)
    aw = abs(w)
    xi_hi = 1.0 / (1.0 - aw) if aw < 1.0 else XI_CUT
    if xi >= xi_hi:
        return 0.0

    def inner(xi_prime):
        # integrate sigma(v0, v) * phi0(xi', w, -s(v, v0)) over v0 angles;
        # phi in (-pi, pi] is the signed angle from v to v0
        def f(phi):
            s = np.sign(phi) * np.cos(0.5 * np.abs(phi))
            sigma = 0.5 * np.abs(np.sin(0.5 * phi))
            return sigma * phi0(xi_prime, w, -s)

        pts = [-math.pi, 0.0, math.pi]
        for zb in _z_breakpoints(xi_prime, w):
            sb = -zb
            if abs(sb) < 1.0:
                a = 2.0 * math.acos(abs(sb))
                pts.extend([a if sb > 0 else -a])
        val, _ = _quad.integrate(f, np.unique(pts), tol=tol * 1e-3, order=16)
        return val

    seeds = [xi, xi_hi]
    for cand in (0.5, 1.0, 1.0 / (1.0 + aw)):
        if xi < cand < xi_hi:
            seeds.append(cand)
    outer, err = _quad.integrate(
        lambda xs: np.array([inner(x) for x in xs]),
        np.unique(seeds),
        tol=tol,
        order=16,
    )
    if err > tol:
        raise _quad.QuadratureError("stationary density quadrature", err)
    return diff_cross_section(v, v_plus) * outer


def stationary_p_exponential(v, xi, v_plus):
    """Stationary density in the memoryless case, equal to the kernel itself."""
    return diff_cross_section(v, v_plus) * math.exp(-NU2 * xi)


def exp_kernel(xi):
    """Flight-time factor of the memoryless kernel, exp(-2 xi); uniform in
    the impact parameter and independent of the exit parameter."""
    return np.exp(-NU2 * np.asarray(xi, dtype=float))


# ---------------------------------------------------------------------------
# conditional sampling of (flight time, impact parameter)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _sample_xi_b_core(z, rng, cap):
    """Draw (xi, b) from the normalized density phi0(xi, b, z).

    Returns (xi, b, iterations); iterations == 0 flags cap exhaustion.
    For |z| < 1 the support box is finite and a uniform envelope at the
    global bound 6/pi^2 is used.  At |z| = 1 the support is unbounded and
    the tail is proposed from a Pareto law on xi times a uniform draw on
    the (shrinking) corner slab of allowed b.
    """
    az = abs(z)
    if az < 1.0:
        xi_sup = 1.0 / (1.0 - az)
        for it in range(cap):
            xi = rng.random() * xi_sup
            b = 2.0 * rng.random() - 1.0
            if rng.random() * SIX_OVER_PI2 < phi0_scalar(xi, b, z):
                return xi, b, it + 1
        return -1.0, 0.0, 0
    # |z| = 1: work with z = +1 and mirror the result for z = -1
    big_m = 48.0 / math.pi**2
    for it in range(cap):
        if rng.random() < 0.5:
            xi = 2.0 * rng.random()
            b = 2.0 * rng.random() - 1.0
            q = 0.125
        else:
            xi = 2.0 / max(rng.random(), 1e-300)
            b = 1.0 - rng.random() / xi
            q = 1.0 / xi
        if rng.random() * big_m * q < phi0_scalar(xi, b, 1.0):
            if z < 0.0:
                b = -b
            return xi, b, it + 1
    return -1.0, 0.0, 0


def sample_xi_b(s, rng, cap=None):
    """Sample the next (flight time, impact parameter) given the exit
    parameter s of the previous collision; the joint density is
    phi0(xi, b, -s)."""
    if abs(s) > 1.0:
        raise ValueError("exit parameter must satisfy |s| <= 1")
    z = -float(s)
    if cap is None:
        xi_sup = 1.0 / (1.0 - abs(z)) if abs(z) < 1.0 else 1.0
        cap = max(100_000, int(2000.0 * xi_sup))
    xi, b, iters = _sample_xi_b_core(z, rng, cap)
    if iters == 0:
        raise SamplingCapError(
            f"rejection cap {cap} exceeded for exit parameter s={s!r} "
            f"(support bound {phi0_support_bound(1.0, z):.3g})"
        )
    return xi, b


@njit(cache=True)
def sample_xi_b_exponential(rng):
    """Memoryless variant: exponential flight time, uniform impact parameter."""
    xi = -0.5 * math.log(max(rng.random(), 1e-300))
    b = 2.0 * rng.random() - 1.0
    return xi, b


# ---------------------------------------------------------------------------
# asymptotic constants (general dimension)
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class AsymptoticConstants:
    """Closed-form constants governing the small- and large-xi behaviour of
    the free path distributions in dimension d."""

    d: int
    nu_d: float       # volume of the (d-1)-dimensional unit ball
    f0_slope: float   # F0(xi) ~ f0_slope * xi as xi -> 0
    f_tail: float     # 1 - F(xi) ~ f_tail / xi as xi -> inf
    f_slope: float    # F(xi) ~ f_slope * xi as xi -> 0


def asymptotic_constants(d):
    """Constants nu_d, nu_d/zeta(d), the tail coefficient of F, and the
    slope of F at zero, for integer dimension d >= 2."""
    if int(d) != d or d < 2:
        raise ValueError("dimension must be an integer >= 2")
    d = int(d)
    nu_d = math.pi ** ((d - 1) / 2.0) / _gamma((d + 1) / 2.0)
    zd = float(_zeta(d))
    f_tail = math.pi ** ((d - 1) / 2.0) / (2.0**d * d * _gamma((d + 3) / 2.0) * zd)
    return AsymptoticConstants(
        d=d, nu_d=nu_d, f0_slope=nu_d / zd, f_tail=f_tail, f_slope=nu_d
    )
