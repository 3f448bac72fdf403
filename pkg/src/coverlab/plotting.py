"""Matplotlib figures for experiment reports, rendered off-screen to files."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def gumbel_ecdf(report: dict, path) -> str:
    """Empirical CDF of the rescaled cover times against ``exp(-e^{-s})``."""
    tab = report["tables"]["ecdf"]
    s = np.asarray(tab["s"])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.step(s, tab["F"], where="post", label="empirical")
    grid = np.linspace(min(s.min(), -2), max(s.max(), 5), 300)
    ax.plot(grid, np.exp(-np.exp(-grid)), "k--", label="Gumbel")
    ax.set_xlabel("cover time / E_pi(T_o) - log n")
    ax.set_ylabel("CDF")
    ax.set_title(f"{report['graph']}: KS = {report['data']['ks']:.3f}")
    ax.legend()
    return _save(fig, path)


def factorial_moments(report: dict, path) -> str:
    """Scaled factorial moments ``E[Z^(k)] e^{ks}`` with 3-sigma bars."""
    rows = report["tables"]["moments"]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for k in sorted({r["k"] for r in rows}):
        sel = [r for r in rows if r["k"] == k]
        ax.errorbar([r["s"] for r in sel], [r["scaled"] for r in sel], yerr=[3 * r["scaled_stderr"] for r in sel], marker="o", capsize=3, label=f"k={k}")
    ax.axhline(1.0, color="k", ls="--", lw=0.8)
    ax.set_xlabel("s")
    ax.set_ylabel("E[Z^(k)] e^{ks}")
    ax.set_title(report["graph"])
    ax.legend()
    return _save(fig, path)


def mindist_qq(report: dict, path) -> str:
    """Quantiles of the last-k min distance against the uniform baseline."""
    tab = report["tables"]["mindist"]
    q = np.linspace(0, 1, len(tab["baseline_quantiles"]))
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.plot(tab["baseline_quantiles"], np.quantile(tab["sample"], q), "o")
    lim = max(max(tab["baseline_quantiles"]), max(tab["sample"]))
    ax.plot([0, lim], [0, lim], "k--", lw=0.8)
    ax.set_xlabel("uniform subset")
    ax.set_ylabel("U(tau_k)")
    ax.set_title(f"k={report['data']['k']}, p={report['data']['ks_pvalue']:.3g}")
    return _save(fig, path)


def hitting_tail(t, exact, lower, upper, path, title="") -> str:
    """Killed-chain tail with the sandwich bounds on a log time axis."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogx(t, exact, label="P_pi(T_A > t)")
    ax.semilogx(t, lower, "--", label="lower")
    ax.semilogx(t, upper, ":", label="upper")
    ax.set_xlabel("t")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def c2_curve(a_values, theta: float, path) -> str:
    from .gumbel_lab import c2

    a = np.asarray(a_values, dtype=float)
    vals = [c2(x, theta) for x in a]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogx(a, vals, "o-")
    ax.axhline(1.0, color="k", ls="--", lw=0.8)
    ax.set_xlabel("a")
    ax.set_ylabel("c_2(a)")
    ax.set_title(f"theta = {theta:.4g}" if math.isfinite(theta) else "")
    return _save(fig, path)
