"""Static SVG figures drawn from the same numbers the CSVs hold."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .summary import box_stats  # noqa: E402

plt.rcParams["svg.hashsalt"] = "basis_approx"
plt.rcParams["svg.fonttype"] = "none"

# at most this many boxes per convergence figure
MAX_BOXES = 25


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _bxp_stats(values, label):
    s = box_stats(values)
    return {
        "label": str(label),
        "med": s["median"],
        "mean": s["mean"],
        "q1": s["q1"],
        "q3": s["q3"],
        "whislo": s["whisker_lo"],
        "whishi": s["whisker_hi"],
        "fliers": s["fliers"],
    }


def plot_convergence(values_by_step, path, title, bound=None, bound_label="bound"):
    """Box per step of the normalized error across trials, log scale, with an
    optional bound curve."""
    steps = len(values_by_step)
    stride = max(1, math.ceil(steps / MAX_BOXES))
    picked = list(range(0, steps, stride))
    stats = [_bxp_stats(values_by_step[k], k) for k in picked if len(values_by_step[k])]

    fig, ax = plt.subplots(figsize=(10, 5))
    ax.bxp(
        stats,
        positions=[int(s["label"]) for s in stats],
        widths=0.6 * stride,
        showfliers=True,
        flierprops={"marker": "x", "markeredgecolor": "red"},
        boxprops={"color": "tab:blue"},
        medianprops={"color": "black"},
        manage_ticks=False,
    )
    if bound is not None:
        ax.plot(range(len(bound)), bound, color="tab:orange", label=bound_label)
        ax.legend()
    ax.set_yscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("normalized squared error")
    ax.set_title(title)
    return _save(fig, path)


def plot_snapshots(xs, snapshots: dict, path, title="residual f* - f_N"):
    fig, ax = plt.subplots(figsize=(10, 5))
    for step in sorted(snapshots):
        ax.plot(xs, snapshots[step], linewidth=0.8, label=f"N = {step}")
    ax.set_xlabel("x")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def plot_bounds(df, path):
    """log N bounds against n, one pair of curves per (eps, theta)."""
    fig, ax = plt.subplots(figsize=(8, 5))
    for (eps, theta), group in df.groupby(["eps", "theta"], sort=True):
        group = group.sort_values("n")
        ax.plot(group["n"], group["conservative_log"], label=f"conservative eps={eps} theta={theta}")
        ax.plot(group["n"], group["refined_log"], linestyle="--", label=f"refined eps={eps} theta={theta}")
    ax.set_xlabel("n")
    ax.set_ylabel("log N")
    if len(df):
        ax.legend(fontsize="small")
    return _save(fig, path)


def plot_chain_lengths(lengths_by_n: dict, bounds_df, path):
    """Chain lengths per dimension: boxes, medians, means and both bound curves."""
    ns = sorted(lengths_by_n)
    stats = [_bxp_stats(lengths_by_n[n], n) for n in ns]
    positions = np.arange(1, len(ns) + 1)

    fig, ax = plt.subplots(figsize=(8, 5))
    if stats:
        ax.bxp(
            stats,
            positions=positions,
            showmeans=True,
            meanprops={"marker": "o", "markerfacecolor": "green", "markeredgecolor": "green"},
            flierprops={"marker": "x", "markeredgecolor": "red"},
            medianprops={"color": "black"},
        )
        bounds = bounds_df.set_index("n").loc[ns]
        ax.plot(positions, bounds["conservative"], color="tab:orange", label="conservative bound")
        ax.plot(positions, bounds["refined"], color="tab:purple", linestyle="--", label="refined bound")
        ax.set_xticks(positions, [str(n) for n in ns])
        ax.legend()
    ax.set_yscale("log")
    ax.set_xlabel("dimension n")
    ax.set_ylabel("chain length")
    return _save(fig, path)


def plot_angle_histogram(edges, counts, path, n):
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.stairs(counts, edges, fill=True)
    ax.axvline(math.pi / 2, color="black", linewidth=0.8)
    ax.set_xlim(0.0, math.pi)
    ax.set_xlabel("angle to reference vector")
    ax.set_title(f"n = {n}")
    return _save(fig, path)
