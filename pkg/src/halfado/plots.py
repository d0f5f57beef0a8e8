"""Report figures, rendered headless next to the JSON/CSV output."""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import RunReport, WordScore


def render_pr_scatter(scores: Sequence[WordScore], report: RunReport, path) -> None:
    """Single-word baselines as dots, the streamed detector as a star."""
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter([s.recall for s in scores], [s.precision for s in scores],
               s=14, alpha=0.6, label="single-word detectors")
    if report.precision is not None and report.recall is not None:
        ax.scatter([report.recall], [report.precision], marker="*", s=180,
                   color="tab:red", label=report.mode)
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_active_trajectory(m: int, evicted_at: Mapping[int, int], events_processed: int, path) -> None:
    """Active-set size as a step function of stream position."""
    drops = sorted(evicted_at.values())
    xs, ys = [0], [m]
    size = m
    for pos in drops:
        size -= 1
        xs.append(pos)
        ys.append(size)
    xs.append(events_processed)
    ys.append(size)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.step(xs, ys, where="post")
    ax.set_xlabel("events processed")
    ax.set_ylabel("active experts")
    ax.set_yscale("log" if m > 100 else "linear")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_alert_density(positions: Sequence[int], events_processed: int, path) -> None:
    """Where in the stream the inspections landed."""
    fig, ax = plt.subplots(figsize=(5, 4))
    if positions:
        ax.hist(positions, bins=min(50, max(5, len(positions))), range=(0, max(events_processed, 1)))
    ax.set_xlabel("stream position")
    ax.set_ylabel("alerts")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
