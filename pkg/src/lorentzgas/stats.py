"""Empirical distribution machinery and hypothesis tests.

Everything here is a deterministic function of its inputs.  Kolmogorov-
Smirnov p-values use the asymptotic distribution, adequate at the sample
sizes (>= 1e3) this package runs at.  Right-censored samples enter the KS
sup only up to the censoring time; the censored mass is checked against the
reference tail instead of being imputed.
"""

import dataclasses
import json
import math

import numpy as np
from scipy.special import kolmogorov
from scipy.stats import chi2 as _chi2

from . import _quad


@dataclasses.dataclass(frozen=True)
class EmpiricalCdf:
    """Sorted sample values plus the count of right-censored draws."""

    values: np.ndarray
    n_censored: int = 0
    t_max: float = math.inf

    @classmethod
    def from_samples(cls, raw, t_max=None):
        raw = np.asarray(raw, dtype=float)
        if t_max is None:
            return cls(values=np.sort(raw), n_censored=0, t_max=math.inf)
        kept = np.sort(raw[raw <= t_max])
        return cls(values=kept, n_censored=int(np.sum(raw > t_max)), t_max=float(t_max))

    @property
    def n(self):
        return len(self.values) + self.n_censored

    def cdf_at(self, x):
        """Right-continuous empirical CDF (censored mass stays in the tail)."""
        return np.searchsorted(self.values, np.asarray(x), side="right") / self.n


@dataclasses.dataclass(frozen=True)
class TestReport:
    test: str
    statistic: float
    n: int
    m: int | None
    p_value: float
    alpha: float
    passed: bool
    details: dict = dataclasses.field(default_factory=dict, compare=False)

    def to_json(self):
        return {
            "test": self.test,
            "statistic": self.statistic,
            "n": self.n,
            "m": self.m,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "pass": self.passed,
        }

    def __str__(self):
        return json.dumps(self.to_json())


def ks_one_sample(sample: EmpiricalCdf, cdf, alpha=0.01, name="ks_one_sample"):
    """One-sample KS test of a (possibly censored) sample against a CDF.

    The statistic is the sup over sample points of both one-sided gaps, up
    to the censoring time.  A censored fraction significantly larger than
    the reference tail mass fails the test outright.
    """
    n = sample.n
    if n == 0:
        raise ValueError("empty sample")
    vals = sample.values
    ref = np.asarray(cdf(vals), dtype=float)
    hi = np.arange(1, len(vals) + 1) / n
    lo = np.arange(0, len(vals)) / n
    d = float(max(np.max(hi - ref, initial=0.0), np.max(ref - lo, initial=0.0)))

    if sample.n_censored:
        tail = 1.0 - float(cdf(np.asarray(sample.t_max)))
        frac = sample.n_censored / n
        slack = 4.0 * math.sqrt(max(tail * (1.0 - tail), 1e-12) / n) + 2.0 / n
        if frac > tail + slack:
            return TestReport(
                test=name, statistic=d, n=n, m=None, p_value=0.0, alpha=alpha,
                passed=False,
                details={"censored_fraction": frac, "reference_tail": tail},
            )

    p = float(kolmogorov(math.sqrt(n) * d))
    return TestReport(
        test=name, statistic=d, n=n, m=None, p_value=p, alpha=alpha,
        passed=p >= alpha,
    )


def ks_two_sample(a: EmpiricalCdf, b: EmpiricalCdf, alpha=0.01, name="ks_two_sample"):
    """Two-sample KS test with the standard sqrt(nm/(n+m)) scaling."""
    if a.n == 0 or b.n == 0:
        raise ValueError("empty sample")
    grid = np.concatenate([a.values, b.values])
    grid.sort(kind="mergesort")
    d = float(np.max(np.abs(a.cdf_at(grid) - b.cdf_at(grid)), initial=0.0))
    n_eff = a.n * b.n / (a.n + b.n)
    p = float(kolmogorov(math.sqrt(n_eff) * d))
    return TestReport(
        test=name, statistic=d, n=a.n, m=b.n, p_value=p, alpha=alpha,
        passed=p >= alpha,
    )


def ks_distance_2d(xy_a, xy_b, grid=256):
    """Two-sample sup-distance between bivariate ECDFs, evaluated on a
    quantile grid of the pooled sample (a practical stand-in for the exact
    sup, which needs O(n^2) work)."""
    xy_a = np.asarray(xy_a, float)
    xy_b = np.asarray(xy_b, float)
    pooled = np.concatenate([xy_a, xy_b])
    qs = np.linspace(0.0, 1.0, grid)
    x_edges = np.unique(np.quantile(pooled[:, 0], qs))
    y_edges = np.unique(np.quantile(pooled[:, 1], qs))

    def cum(xy):
        hx = np.searchsorted(x_edges, xy[:, 0], side="right")
        hy = np.searchsorted(y_edges, xy[:, 1], side="right")
        h = np.zeros((len(x_edges) + 1, len(y_edges) + 1))
        np.add.at(h, (hx, hy), 1.0)
        return h.cumsum(axis=0).cumsum(axis=1) / len(xy)

    return float(np.max(np.abs(cum(xy_a) - cum(xy_b))))


def chi_square_2d(samples, density, x_edges, y_edges, alpha=0.01,
                  min_expected=5.0, name="chi_square_2d", mass_tol=1e-7):
    """Pearson chi-square test of 2D samples against a density function.

    Cell masses are integrated numerically (density must be vectorized and
    include any domain indicator); cells with expected count below
    min_expected are pooled.
    """
    samples = np.asarray(samples, dtype=float)
    x_edges = np.asarray(x_edges, dtype=float)
    y_edges = np.asarray(y_edges, dtype=float)
    if len(x_edges) < 2 or len(y_edges) < 2:
        raise ValueError("degenerate partition")
    n = len(samples)

    counts, _, _ = np.histogram2d(samples[:, 0], samples[:, 1], bins=(x_edges, y_edges))
    inside = counts.sum()

    masses = np.zeros_like(counts)
    for i in range(len(x_edges) - 1):
        for j in range(len(y_edges) - 1):
            y0, y1 = y_edges[j], y_edges[j + 1]

            def column(xs):
                return np.array([
                    _quad.integrate(lambda ys: density(np.full_like(ys, xv), ys),
                                    [y0, 0.5 * (y0 + y1), y1],
                                    tol=mass_tol, order=16)[0]
                    for xv in xs
                ])

            masses[i, j], _ = _quad.integrate(
                column, [x_edges[i], 0.5 * (x_edges[i] + x_edges[i + 1]), x_edges[i + 1]],
                tol=mass_tol, order=16,
            )
    total_mass = masses.sum()
    if total_mass <= 0:
        raise ValueError("density integrates to zero over the partition")

    expected = masses.ravel() / total_mass * inside
    observed = counts.ravel()
    keep = expected >= min_expected
    obs = observed[keep].tolist()
    exp = expected[keep].tolist()
    if np.any(~keep):
        obs.append(observed[~keep].sum())
        exp.append(expected[~keep].sum())
    obs = np.asarray(obs)
    exp = np.asarray(exp)
    pos = exp > 0
    stat = float(np.sum((obs[pos] - exp[pos]) ** 2 / exp[pos]))
    df = int(pos.sum()) - 1
    p = float(_chi2.sf(stat, df))
    return TestReport(
        test=name, statistic=stat, n=n, m=None, p_value=p, alpha=alpha,
        passed=p >= alpha, details={"df": df, "cells": int(pos.sum())},
    )


def kuiper_uniform(angles, period=2.0 * math.pi, alpha=0.01, name="kuiper_uniform"):
    """Kuiper test of uniformity on a circle of the given period."""
    u = np.sort(np.mod(np.asarray(angles, dtype=float), period)) / period
    n = len(u)
    if n == 0:
        raise ValueError("empty sample")
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - u)
    d_minus = np.max(u - (i - 1) / n)
    v = float(d_plus + d_minus)
    lam = v * (math.sqrt(n) + 0.155 + 0.24 / math.sqrt(n))
    terms = np.arange(1, 101)
    p = float(2.0 * np.sum((4.0 * terms**2 * lam**2 - 1.0) * np.exp(-2.0 * terms**2 * lam**2)))
    p = min(max(p, 0.0), 1.0)
    return TestReport(
        test=name, statistic=v, n=n, m=None, p_value=p, alpha=alpha,
        passed=p >= alpha,
    )


def memory_two_test(segments, bins=3, alpha=0.01, min_cell=400,
                    name="memory_two_test"):
    """Conditional-independence check of the memory-two property.

    segments: array (n_chains, >=4, 2) of consecutive path segment vectors.
    Within each coarse cell of the conditioning pair (S3.S2, S2.S1 direction
    cosines), the lengths of the 4th segment are split by the median length
    of the 1st and compared by two-sample KS; the verdict is Bonferroni-
    corrected over cells.
    """
    segments = np.asarray(segments, dtype=float)
    if segments.ndim != 3 or segments.shape[1] < 4:
        raise ValueError("need chains with at least 4 segments")
    lengths = np.linalg.norm(segments, axis=2)
    unit = segments / lengths[:, :, None]
    d32 = np.sum(unit[:, 2] * unit[:, 1], axis=1)
    d21 = np.sum(unit[:, 1] * unit[:, 0], axis=1)
    l1 = lengths[:, 0]
    l4 = lengths[:, 3]

    edges = np.linspace(-1.0, 1.0, bins + 1)
    ix = np.clip(np.digitize(d32, edges) - 1, 0, bins - 1)
    iy = np.clip(np.digitize(d21, edges) - 1, 0, bins - 1)

    cell_reports = []
    skipped = 0
    for cx in range(bins):
        for cy in range(bins):
            mask = (ix == cx) & (iy == cy)
            cnt = int(mask.sum())
            if cnt < min_cell:
                skipped += 1
                continue
            l1_cell = l1[mask]
            l4_cell = l4[mask]
            med = np.median(l1_cell)
            lowhalf = l1_cell <= med
            a = EmpiricalCdf.from_samples(l4_cell[lowhalf])
            b = EmpiricalCdf.from_samples(l4_cell[~lowhalf])
            if a.n == 0 or b.n == 0:
                skipped += 1
                continue
            rep = ks_two_sample(a, b, alpha=alpha)
            cell_reports.append(((cx, cy), rep))
    if not cell_reports:
        raise ValueError("all conditioning cells underpopulated")
    m = len(cell_reports)
    worst_cell, worst = min(cell_reports, key=lambda cr: cr[1].p_value)
    p_adj = min(1.0, worst.p_value * m)
    return TestReport(
        test=name, statistic=worst.statistic, n=len(segments), m=m,
        p_value=p_adj, alpha=alpha, passed=p_adj >= alpha,
        details={
            "worst_cell": worst_cell,
            "cells_tested": m,
            "cells_skipped": skipped,
        },
    )
