"""Figures written next to the CSV reports."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 150,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.bbox": "tight",
}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_sweep(cells, path: str | Path) -> Path:
    """Success rate against c with Wilson 95% bars, one line per remaining setting."""
    series = defaultdict(list)
    for cell in cells:
        if not cell.valid:
            continue
        cfg = cell.config
        series[(cfg.n, cfg.alpha, cfg.delta, cfg.eps)].append(cell)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for (n, alpha, delta, eps), members in sorted(series.items()):
            members.sort(key=lambda c: c.config.c)
            cs = np.array([m.config.c for m in members])
            rates = np.array([m.rate for m in members])
            lo = np.array([m.interval[0] for m in members])
            hi = np.array([m.interval[1] for m in members])
            ax.errorbar(cs, rates, yerr=[rates - lo, hi - rates], marker="o", capsize=3,
                        label=f"n={n}, α={alpha}, Δ={delta}, ε={eps}")
        ax.set_xlabel("c (random edges ≈ c·n)")
        ax.set_ylabel("success rate")
        ax.set_ylim(-0.05, 1.05)
        ax.legend(frameon=False, fontsize=7)
        return _save(fig, path)


def plot_concentration(report, path: str | Path) -> Path:
    counts = report.counts.ravel()
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        bins = np.arange(counts.max() + 2) - 0.5
        ax.hist(counts, bins=bins, density=True, color="0.6", edgecolor="0.3")
        ax.axvline(report.expected, color="C3", label=f"E[X] = {report.expected:.3g}")
        ax.axvline(report.expected / 2, color="C3", ls="--", label="E[X]/2")
        ax.set_xlabel("good stars per (triple, trial)")
        ax.set_ylabel("frequency")
        ax.set_title(f"n={report.params.n}, N={report.stars_used}, {report.trials} trials", fontsize=9)
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_absorbing_histogram(counts: Sequence[int] | np.ndarray, threshold: int | None, path: str | Path) -> Path:
    counts = np.asarray(counts).ravel()
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        bins = np.arange(counts.max() + 2) - 0.5 if counts.size else 10
        ax.hist(counts, bins=bins, color="0.6", edgecolor="0.3")
        if threshold is not None:
            ax.axvline(threshold, color="C3", ls="--", label=f"2i = {threshold}")
            ax.legend(frameon=False)
        ax.set_xlabel("absorbing stars per (u, ±, w)")
        ax.set_ylabel("triples")
        return _save(fig, path)
