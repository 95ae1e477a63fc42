"""Figure rendering for evaluation reports.

Uses the Agg backend so report generation works headless.  Each figure
is written as a PNG next to the delimited metric files.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import EvalReport

_MARKERS = ("o", "s", "^", "d", "v", "*")


def write_long_csv(report: EvalReport, path: str | Path) -> Path:
    """Tidy long form of the metric grid: metric,method,k,value rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("metric,method,k,value\n")
        for metric in report.metrics:
            for method in report.methods:
                row = report.values[(metric, method)]
                for k, value in zip(report.cutoffs, row):
                    fh.write(f"{metric},{method},{k},{repr(float(value))}\n")
    return path


def render_metric_curves(
    report: EvalReport, out_dir: str | Path, stem: str = "metrics"
) -> Path:
    """One panel per metric, cutoff on a log axis, one curve per method."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics = list(report.metrics)
    ncols = 2 if len(metrics) > 1 else 1
    nrows = (len(metrics) + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(5.5 * ncols, 3.6 * nrows), squeeze=False
    )
    for i, metric in enumerate(metrics):
        ax = axes[i // ncols][i % ncols]
        for m, method in enumerate(report.methods):
            ax.plot(
                report.cutoffs,
                report.values[(metric, method)],
                marker=_MARKERS[m % len(_MARKERS)],
                markersize=4,
                label=method,
            )
        ax.set_xscale("log")
        ax.set_xlabel("K")
        ax.set_ylabel(metric)
        ax.set_ylim(-0.02, 1.02)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    for i in range(len(metrics), nrows * ncols):
        axes[i // ncols][i % ncols].set_visible(False)
    fig.tight_layout()
    out_path = out_dir / f"{stem}.png"
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_method_bars(
    report: EvalReport, k: int, out_dir: str | Path, stem: str = "methods"
) -> Path:
    """Bar chart comparing methods across metrics at one cutoff."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if k not in report.cutoffs:
        raise ValueError(f"cutoff {k} not in report (have {report.cutoffs})")
    col = report.cutoffs.index(k)
    metrics = list(report.metrics)
    width = 0.8 / max(1, len(report.methods))
    fig, ax = plt.subplots(figsize=(1.8 * len(metrics) + 2, 3.8))
    for m, method in enumerate(report.methods):
        xs = [i + m * width for i in range(len(metrics))]
        ys = [report.values[(metric, method)][col] for metric in metrics]
        ax.bar(xs, ys, width=width, label=method)
    ax.set_xticks([i + width * (len(report.methods) - 1) / 2 for i in range(len(metrics))])
    ax.set_xticklabels(metrics)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel(f"score at K={k}")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    out_path = out_dir / f"{stem}_k{k}.png"
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
