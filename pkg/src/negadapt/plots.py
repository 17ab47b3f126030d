"""Figure rendering for reports.

Every function takes an already-computed result object and writes one PNG.
Rendering is table output in picture form: nothing here recomputes
statistics, so the figures always agree with the JSON/CSV next to them.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")  # headless; must precede pyplot import

import matplotlib.pyplot as plt
import numpy as np

from .adapter import GridSearchResult
from .diagnose import DiagnosisReport
from .evaluate import RunMatrix, summarize_matrix
from .stats import CdDiagramData

DPI = 150


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_diagnosis(report: DiagnosisReport, path: str | Path) -> Path:
    """One panel per similarity group: paraphrase vs negated-pair histograms."""
    n = len(report.groups)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.0), sharey=True)
    if n == 1:
        axes = [axes]
    edges = np.linspace(0.0, 1.0, report.n_bins + 1)
    centers = (edges[:-1] + edges[1:]) / 2
    width = 1.0 / report.n_bins
    for ax, g in zip(axes, report.groups):
        if g.n_pairs == 0:
            ax.text(0.5, 0.5, "no pairs", ha="center", va="center",
                    transform=ax.transAxes, color="gray")
        else:
            ax.bar(centers, g.hist_sim12, width=width, alpha=0.6,
                   label="sim(s1, s2)", color="tab:blue")
            ax.bar(centers, g.hist_sim1neg1, width=width, alpha=0.6,
                   label="sim(s1, neg s1)", color="tab:red")
            ax.set_title(f"group {g.index}\nneg wins {g.frac_neg_wins:.2f}", fontsize=9)
        ax.set_xlim(0.0, 1.0)
        ax.set_xlabel("cosine similarity", fontsize=8)
        ax.tick_params(labelsize=7)
    axes[0].set_ylabel("pairs")
    handles, labels = axes[0].get_legend_handles_labels()
    if not handles:  # every group empty: legend from any panel
        for ax in axes:
            handles, labels = ax.get_legend_handles_labels()
            if handles:
                break
    if handles:
        fig.legend(handles, labels, loc="upper right", fontsize=8)
    fig.suptitle(report.model_tag, fontsize=10)
    return _save(fig, path)


def plot_grid_search(result: GridSearchResult, path: str | Path) -> Path:
    """Training accuracy over the sharpness grid, best point marked."""
    a_values = [a for a, _ in result.train_accuracy_by_a]
    accs = [acc for _, acc in result.train_accuracy_by_a]
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(a_values, accs, marker="o", markersize=3, color="tab:blue")
    ax.axvline(result.best_a, color="tab:red", linestyle="--", linewidth=1,
               label=f"best a = {result.best_a:g}")
    ax.set_xlabel("a (softmax sharpness)")
    ax.set_ylabel("train accuracy")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_experiment(matrices: Mapping[int, RunMatrix], path: str | Path) -> Path:
    """Mean accuracy with sample-std error bars per method across train sizes."""
    if not matrices:
        raise ValueError("no run matrices to plot")
    sizes = sorted(matrices)
    tags = matrices[sizes[0]].method_tags
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for tag in tags:
        means, stds = [], []
        for ts in sizes:
            mean, std = summarize_matrix(matrices[ts])[tag]
            means.append(mean)
            stds.append(std)
        ax.errorbar(sizes, means, yerr=stds, marker="o", markersize=4,
                    capsize=3, label=tag)
    ax.set_xlabel("training set size")
    ax.set_ylabel("test accuracy")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xticks(sizes)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_cd(data: CdDiagramData, path: str | Path) -> Path:
    """Critical-difference diagram: rank axis, method labels, clique bars."""
    m = len(data.method_tags)
    lo = min(data.avg_ranks) - 0.3
    hi = max(data.avg_ranks) + 0.3
    fig, ax = plt.subplots(figsize=(6.0, 1.2 + 0.4 * m))
    ax.set_xlim(lo, hi)
    ax.spines[["left", "right", "bottom"]].set_visible(False)
    ax.xaxis.set_ticks_position("top")
    ax.get_yaxis().set_visible(False)

    # labels stacked below the axis, best rank first
    for i, (tag, rank) in enumerate(zip(data.method_tags, data.avg_ranks)):
        y = -(i + 1)
        ax.plot([rank, rank], [0, y], color="black", linewidth=0.8)
        ax.plot([rank, lo], [y, y], color="black", linewidth=0.8)
        ax.text(lo, y + 0.05, f" {tag} ({rank:.2f})", ha="left", va="bottom",
                fontsize=8)

    bars = [c for c in data.cliques if len(c) > 1]
    for level, clique in enumerate(bars):
        ranks = [data.avg_ranks[i] for i in clique]
        y = -(m + 1) - 0.4 * level
        ax.plot([min(ranks), max(ranks)], [y, y], color="black",
                linewidth=3, solid_capstyle="round")
    ax.set_ylim(-(m + 2) - 0.4 * max(len(bars), 1), 0.5)
    ax.set_title(f"alpha = {data.alpha:g}", fontsize=8)
    return _save(fig, path)
