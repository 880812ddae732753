"""Rendered versions of the diagnostic tables, written as PNG files.

Every figure here is a direct visualization of a delimited artifact the rest
of the package already produces (jitter table, histogram counts, balance
table), so the plots never compute anything new.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # file output only; never touch a display

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from matplotlib.ticker import FuncFormatter

from .balance import BalanceReport
from .errors import DataError

_JITTER_GROUPS = (
    "unmatched-treated",
    "matched-treated",
    "matched-control",
    "unmatched-control",
)

_JITTER_SEED = 7  # fixed so re-rendering the same table gives the same pixels


def render_jitter(jitter: pd.DataFrame, path) -> Path:
    """Strip plot of scores by group, matched groups in the middle."""
    path = Path(path)
    rng = np.random.default_rng(_JITTER_SEED)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for base, group in enumerate(_JITTER_GROUPS):
        sub = jitter.loc[jitter["group"] == group, "score"].to_numpy()
        ys = base + rng.uniform(-0.28, 0.28, size=sub.size)
        ax.plot(sub, ys, linestyle="", marker="o", markersize=2.2, alpha=0.35)
    ax.set_yticks(range(len(_JITTER_GROUPS)))
    ax.set_yticklabels(_JITTER_GROUPS)
    ax.set_xlabel("propensity score (probability)")
    ax.set_title("Score distributions by match status")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_histogram(hist: pd.DataFrame, stage: str, path) -> Path:
    """Back-to-back histogram: treated bars up, control bars mirrored down."""
    path = Path(path)
    sub = hist[hist["stage"] == stage]
    if sub.empty:
        raise DataError(f"no rows for stage {stage!r} in histogram table")
    lo = sub["bin_lo"].to_numpy()
    hi = sub["bin_hi"].to_numpy()
    centers = (lo + hi) / 2.0
    width = (hi - lo) * 0.92
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.bar(centers, sub["treated_count"], width=width, label="treated")
    ax.bar(centers, -sub["control_count"].to_numpy(), width=width, label="control")
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("propensity score (probability)")
    ax.set_ylabel("count (control mirrored)")
    ax.set_title(f"Score histogram, {stage} matching")
    ax.legend()
    # Mirrored axis: show magnitudes, not signed counts.
    ax.yaxis.set_major_formatter(FuncFormatter(lambda v, _: f"{abs(v):g}"))
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_love_plot(report: BalanceReport, path) -> Path:
    """Dot plot of SMDs with guides at 0 and +/-0.1."""
    path = Path(path)
    k = len(report.indicators)
    ys = np.arange(k)[::-1]
    fig, ax = plt.subplots(figsize=(7, 0.45 * k + 1.6))
    ax.axvline(0.0, color="grey", linewidth=0.8)
    for guide in (-0.1, 0.1):
        ax.axvline(guide, color="grey", linewidth=0.8, linestyle="--")
    ax.plot(report.smd_before, ys, "o", mfc="none", label="before")
    ax.plot(report.smd_after, ys, "o", label="after")
    ax.set_yticks(ys)
    ax.set_yticklabels(report.indicators)
    ax.set_xlabel("standardized mean difference")
    ax.set_title("Covariate balance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_all(
    outdir, jitter: pd.DataFrame, hist: pd.DataFrame, balance: BalanceReport
) -> list[Path]:
    """Write the four standard figures into ``outdir``; returns their paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [
        render_jitter(jitter, outdir / "fig_scores_jitter.png"),
        render_histogram(hist, "before", outdir / "fig_hist_before.png"),
        render_histogram(hist, "after", outdir / "fig_hist_after.png"),
        render_love_plot(balance, outdir / "fig_love_plot.png"),
    ]
