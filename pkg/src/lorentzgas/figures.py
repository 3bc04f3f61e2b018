"""Figure rendering for the experiment reports.

Each experiment gets one PNG next to its CSV output.  Figures are a visual
aid only; the CSV/JSON files are the data of record and the only outputs
with a byte-stability guarantee.
"""

import math
import os

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import kernel  # noqa: E402

_META = {"Software": "lorentzgas"}


def _style():
    plt.rcParams.update({
        "figure.figsize": (6.0, 4.0),
        "figure.dpi": 130,
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "lines.linewidth": 1.4,
    })


def _save(fig, out, name):
    path = os.path.join(out, name)
    fig.savefig(path, metadata=_META, bbox_inches="tight")
    plt.close(fig)
    return path


def render(name, extras, out):
    """Render the figure for an experiment; returns the file path or None."""
    _style()
    fn = _RENDERERS.get(name)
    if fn is None:
        return None
    return fn(extras, out)


def _fig_fpl_convergence(extras, out):
    rows = extras["rows"]
    rho = [r[0] for r in rows]
    ks = [r[2] for r in rows]
    fig, ax = plt.subplots()
    ax.loglog(rho, ks, "o-")
    ax.set_xlabel(r"scatterer radius $\rho$")
    ax.set_ylabel("KS distance to limiting CDF")
    ax.set_title("Free path length convergence")
    ax.invert_xaxis()
    return _save(fig, out, "fpl_convergence.png")


def _fig_kernel_tables(extras, out):
    xis = np.linspace(1e-3, max(extras["xis"].max(), 5.0), 400)
    fig, ax = plt.subplots()
    ax.plot(xis, kernel.F0_quadrature(xis), label=r"$F_0$ (center start)")
    ax.plot(xis, kernel.F_quadrature(xis), label=r"$F$ (generic start)")
    ax.plot(extras["xis"], extras["f0"], "k.", ms=4)
    ax.plot(extras["xis"], extras["f"], "k.", ms=4)
    ax.set_xlabel(r"$\xi$")
    ax.set_ylabel("CDF")
    ax.set_title("Free path length distributions (quadrature)")
    ax.legend()
    return _save(fig, out, "kernel_tables.png")


def _fig_lattice_mc(extras, out):
    rows = extras["rows"]
    xis = np.array([r[0] for r in rows])
    grid = np.linspace(1e-3, xis.max() * 1.05, 400)
    fig, ax = plt.subplots()
    ax.plot(grid, kernel.F0_quadrature(grid), label=r"$F_0$ quadrature")
    ax.plot(grid, kernel.F_quadrature(grid), label=r"$F$ quadrature")
    ax.errorbar(xis, [r[1] for r in rows], yerr=[3 * r[2] for r in rows],
                fmt="s", ms=4, capsize=3, label=r"$F_0$ lattice MC ($3\sigma$)")
    ax.errorbar(xis, [r[3] for r in rows], yerr=[3 * r[4] for r in rows],
                fmt="o", ms=4, capsize=3, label=r"$F$ affine MC ($3\sigma$)")
    ax.set_xlabel(r"$\xi$")
    ax.set_ylabel("CDF")
    ax.set_title("Cross-validation: quadrature vs lattice Monte Carlo")
    ax.legend()
    return _save(fig, out, "lattice_mc.png")


def _fig_poisson(extras, out):
    rows = extras["rows"]
    xi = [r[0] for r in rows]
    fig, ax = plt.subplots()
    ax.plot(xi, [r[1] for r in rows], label="empirical")
    ax.plot(xi, [r[2] for r in rows], "--", label="exponential law")
    ax.set_xlabel(r"$\xi$")
    ax.set_ylabel("CDF")
    ax.set_title(f"Disordered baseline (KS = {extras['ks']:.4f})")
    ax.legend()
    return _save(fig, out, "poisson_baseline.png")


def _fig_flight_vs_billiard(extras, out):
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for j, ax in enumerate(axes):
        for lens, label in ((extras["len_f"], "flight process"),
                            (extras["len_sq"], "billiard (square)"),
                            (extras["len_hex"], "billiard (hexagonal)")):
            xs = np.sort(lens[:, j])
            ax.plot(xs, np.arange(1, len(xs) + 1) / len(xs), label=label)
        ax.set_xlim(0, 3)
        ax.set_xlabel(rf"$\|S_{j + 1}\|$")
        ax.set_ylabel("ECDF")
    axes[0].legend()
    fig.suptitle("Path segment statistics: limit process vs microscopic dynamics")
    return _save(fig, out, "flight_vs_billiard.png")


def _fig_semigroup(extras, out):
    rows = extras["rows"]
    labels = [f"{k}\n{o}" for k, o, _, _ in rows]
    vals = [r[2] for r in rows]
    fig, ax = plt.subplots()
    colors = ["C3" if k == "periodic" else "C0" for k, o, _, _ in rows]
    ax.bar(range(len(rows)), vals, color=colors)
    ax.set_xticks(range(len(rows)), labels)
    ax.set_ylabel("two-sample KS distance")
    ax.set_title(f"Composition vs straight run (ratio = {extras['ratio']:.1f})")
    return _save(fig, out, "semigroup.png")


def _fig_memory(extras, out):
    rows = extras["rows"]
    fig, ax = plt.subplots()
    ax.bar(range(len(rows)), [max(r[2], 1e-12) for r in rows], color="C0")
    ax.set_yscale("log")
    ax.axhline(0.01, color="C3", ls="--", label=r"$\alpha = 0.01$")
    ax.set_xticks(range(len(rows)), [r[0].replace("memory_two_", "") for r in rows])
    ax.set_ylabel("Bonferroni-adjusted p-value")
    ax.set_title("Memory-two conditional independence")
    ax.legend()
    return _save(fig, out, "memory_test.png")


def _fig_renormalization(extras, out):
    rows = extras["rows"]
    fig, ax = plt.subplots()
    ax.semilogx([r[0] for r in rows], [r[1] for r in rows], "o-")
    ax.axhline(0.99, color="C3", ls="--")
    ax.set_xlabel(r"$\rho$")
    ax.set_ylabel("agreement with billiard")
    ax.set_ylim(0.9, 1.005)
    ax.set_title("Renormalized cylinder test vs free path")
    return _save(fig, out, "renormalization_check.png")


def _fig_trajectory(extras, out):
    chain = extras["chain"]
    lat = extras["lattice"]
    pts = chain.points
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    ax.plot(pts[:, 0], pts[:, 1], "-", color="C3", lw=1.0)
    ax.plot(pts[0, 0], pts[0, 1], "ko", ms=4)
    x0, x1 = pts[:, 0].min() - 2, pts[:, 0].max() + 2
    y0, y1 = pts[:, 1].min() - 2, pts[:, 1].max() + 2
    binv = np.linalg.inv(lat.basis)
    corners = np.array([[x0, y0], [x0, y1], [x1, y0], [x1, y1]]) @ binv
    m1r = range(int(corners[:, 0].min()) - 1, int(corners[:, 0].max()) + 2)
    m2r = range(int(corners[:, 1].min()) - 1, int(corners[:, 1].max()) + 2)
    for m1 in m1r:
        for m2 in m2r:
            c = m1 * lat.basis[0] + m2 * lat.basis[1]
            if x0 <= c[0] <= x1 and y0 <= c[1] <= y1:
                ax.add_patch(plt.Circle(c, lat.rho, color="C0", alpha=0.6, lw=0))
    ax.set_aspect("equal")
    ax.set_xlim(x0, x1)
    ax.set_ylim(y0, y1)
    ax.set_title(f"Billiard trajectory ({chain.n} collisions)")
    return _save(fig, out, "trajectory.png")


_RENDERERS = {
    "fpl-convergence": _fig_fpl_convergence,
    "kernel-tables": _fig_kernel_tables,
    "lattice-mc": _fig_lattice_mc,
    "poisson-baseline": _fig_poisson,
    "flight-vs-billiard": _fig_flight_vs_billiard,
    "semigroup": _fig_semigroup,
    "memory-test": _fig_memory,
    "renormalization-check": _fig_renormalization,
    "trajectory-dump": _fig_trajectory,
}
