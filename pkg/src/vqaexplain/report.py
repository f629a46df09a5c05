"""Delimited outputs and figures for explanation runs and system comparisons."""

from __future__ import annotations

import csv
import os
from typing import Sequence

from matplotlib.figure import Figure

from .evaluation import METRIC_LABELS, ComparisonResult, format_pct
from .region_explainer import Explanation

BREAKDOWN_FIELDS = ("attention_factor", "lm_factor", "length_factor", "area_factor", "total")
OUTCOME_COLORS = {"Win": "#4c72b0", "Loss": "#c44e52", "Tie": "#bbbbbb"}


def write_comparison_csv(results: Sequence[ComparisonResult], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", "win_pct", "loss_pct", "tie_pct", "wins", "losses", "ties"])
        for r in results:
            writer.writerow([r.metric, f"{r.win_pct:.2f}", f"{r.loss_pct:.2f}",
                             f"{r.tie_pct:.2f}", r.wins, r.losses, r.ties])


def write_breakdown_csv(explanations: Sequence[Explanation], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "source_kind", "source_id", *BREAKDOWN_FIELDS, "surface"])
        for e in explanations:
            values = [""] * len(BREAKDOWN_FIELDS) if e.score is None else [
                repr(getattr(e.score, f)) for f in BREAKDOWN_FIELDS]
            writer.writerow([e.rank, e.source.get("kind", ""), e.source.get("id", ""),
                             *values, e.surface])


def plot_comparison(results: Sequence[ComparisonResult], path: str | os.PathLike,
                    title: str = "") -> None:
    """Horizontal stacked bars of win / loss / tie share per metric."""
    fig = Figure(figsize=(6, 0.6 * len(results) + 1.2))
    ax = fig.add_subplot()
    labels = [METRIC_LABELS.get(r.metric, r.metric) for r in results][::-1]
    left = [0.0] * len(results)
    for name, attr in (("Win", "win_pct"), ("Loss", "loss_pct"), ("Tie", "tie_pct")):
        widths = [getattr(r, attr) for r in results][::-1]
        bars = ax.barh(labels, widths, left=left, color=OUTCOME_COLORS[name], label=name)
        for bar, w in zip(bars, widths):
            if w >= 8:
                ax.text(bar.get_x() + w / 2, bar.get_y() + bar.get_height() / 2,
                        format_pct(w), ha="center", va="center", fontsize=8)
        left = [a + b for a, b in zip(left, widths)]
    ax.set_xlim(0, 100)
    ax.set_xlabel("share of questions (%)")
    ax.legend(ncol=3, loc="upper center", bbox_to_anchor=(0.5, -0.35), frameon=False)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)


def plot_breakdown(explanations: Sequence[Explanation], path: str | os.PathLike,
                   title: str = "") -> None:
    """One panel per score factor, one bar per ranked explanation."""
    scored = [e for e in explanations if e.score is not None]
    fig = Figure(figsize=(10, 2.2 * len(BREAKDOWN_FIELDS)))
    axes = fig.subplots(len(BREAKDOWN_FIELDS), 1, sharex=True)
    ranks = [str(e.rank) for e in scored]
    for ax, name in zip(axes, BREAKDOWN_FIELDS):
        ax.bar(ranks, [getattr(e.score, name) for e in scored], color="#4c72b0")
        ax.set_ylabel(name.replace("_", " "), fontsize=8)
    axes[-1].set_xlabel("rank")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
