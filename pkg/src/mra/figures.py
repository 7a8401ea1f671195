"""Figure rendering for the report-producing CLI paths.

Figures are written next to the delimited output with deterministic PNG
bytes (no Software metadata), so they participate in the replay check.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import LowerBoundPair, RateCurve

_SAVEFIG = {"dpi": 110, "metadata": {"Software": None}}


def rate_figure(curve: RateCurve, path) -> None:
    """Log-log risk curve with the fitted power law."""
    xs = np.array([p.n if curve.axis == "n" else p.sigma for p in curve.points], dtype=float)
    ys = np.array([p.risk_mean for p in curve.points])
    es = np.array([p.risk_stderr for p in curve.points])

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.errorbar(xs, ys, yerr=es, fmt="o", capsize=3, color="maroon", label="risk")
    anchor = ys[0] / xs[0] ** curve.fitted_slope
    grid = np.geomspace(xs.min(), xs.max(), 64)
    ax.plot(
        grid,
        anchor * grid**curve.fitted_slope,
        "--",
        color="gray",
        label=f"slope {curve.fitted_slope:.3f} ± {curve.slope_stderr:.3f}",
    )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n" if curve.axis == "n" else "sigma")
    ax.set_ylabel("mean orbit distance")
    if curve.n_rule:
        ax.set_title(curve.n_rule, fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def pair_figure(pair: LowerBoundPair, path) -> None:
    """Coordinate-wise plot of the two hard-to-distinguish signals."""
    k = np.arange(1, pair.theta.L + 1)
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(k, pair.theta.values, "o", color="maroon", label="theta")
    ax.plot(k, pair.phi.values, "*", color="black", label="phi")
    ax.set_xlabel("coordinate")
    ax.set_ylabel("value")
    ax.set_title(
        f"s={pair.s}, sigma={pair.sigma:g}, n={pair.n}, delta={pair.delta:.4g} ({pair.group})",
        fontsize=9,
    )
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)
