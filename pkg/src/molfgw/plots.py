"""Matplotlib figure rendering for bench reports.

Each bench subcommand writes a PNG next to its JSON/CSV output. Figures
are plain diagnostics, not publication styling.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_convergence(report, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    k = np.array(report.k_values, dtype=float)
    m = np.array(report.mean_sq_fgw, dtype=float)
    ax.loglog(k, m, "o-", label="mean squared distance to reference")
    if report.slope is not None and np.all(m > 0):
        fit = np.polyfit(np.log(k), np.log(m), 1)
        ax.loglog(
            k,
            np.exp(np.polyval(fit, np.log(k))),
            "--",
            label=f"fit slope {report.slope:.2f}",
        )
    ax.set_xlabel("number of conformers K")
    ax.set_ylabel("mean FGW$^2$ proxy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_runtime(report, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(report.k_values, report.mean_seconds, "o-")
    ax.set_xlabel("number of graphs K")
    ax.set_ylabel("mean wall time [s]")
    ax.set_title(f"barycenter solve, {report.repeats} repeats")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_bound(results, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    fgw = [r["fgw_cost"] for r in results]
    bound = [r["w_bound"] for r in results]
    ax.scatter(bound, fgw, s=18)
    lim = max(max(bound), max(fgw), 1e-12)
    ax.plot([0, lim], [0, lim], "k--", lw=1, label="y = x")
    ax.set_xlabel("Wasserstein upper bound")
    ax.set_ylabel("entropic FGW cost")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
