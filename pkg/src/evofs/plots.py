"""File-based figure rendering for run reports and sweep summaries."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .report import RunReport, SweepSummary

AXIS_LABEL = {"mu": "mutation rate", "alpha": "accuracy weight"}


def plot_run(report: RunReport, path: str) -> str:
    """Best/mean fitness and best score across the run's trajectory."""
    steps = [g.step for g in report.trajectory]
    fig, ax = plt.subplots(figsize=(7, 4.5), constrained_layout=True)
    ax.plot(steps, [g.best_fitness for g in report.trajectory],
            "-o", ms=3, color="tab:green", label="best fitness")
    ax.plot(steps, [g.mean_fitness for g in report.trajectory],
            "-", color="tab:gray", label="mean fitness")
    ax.plot(steps, [g.best_score for g in report.trajectory],
            "--", color="tab:blue", label="best accuracy")
    ax.set_xlabel("round" if report.algorithm == "fastslow" else "generation")
    ax.set_ylabel("value")
    ax.set_title(f"{report.algorithm} run, seed {report.seed}")
    ax.legend(loc="lower right")
    ax.grid(alpha=0.3)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_sweep(summary: SweepSummary, path: str) -> str:
    """Accuracy and selected-feature curves with the no-selection baseline."""
    xs = np.array(summary.values())
    mean_s = np.array([p.mean_score for p in summary.points])
    std_s = np.array([p.std_score for p in summary.points])
    mean_n = np.array([p.mean_n_selected for p in summary.points])
    std_n = np.array([p.std_n_selected for p in summary.points])

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 7), sharex=True,
                                   constrained_layout=True)
    ax1.plot(xs, mean_s, "-o", ms=3, color="tab:green",
             label=f"mean best accuracy ({summary.runs_per_value} runs)")
    ax1.fill_between(xs, mean_s - std_s, mean_s + std_s, color="tab:green", alpha=0.2)
    ax1.axhline(summary.baseline_score, ls="--", color="tab:red",
                label="no-selection baseline")
    ax1.set_ylabel("cross-validated accuracy")
    ax1.legend(loc="best")
    ax1.grid(alpha=0.3)

    ax2.plot(xs, mean_n, "-o", ms=3, color="tab:blue", label="mean selected features")
    ax2.fill_between(xs, mean_n - std_n, mean_n + std_n, color="tab:blue", alpha=0.2)
    ax2.set_xlabel(AXIS_LABEL.get(summary.axis, summary.axis))
    ax2.set_ylabel("selected features")
    ax2.legend(loc="best")
    ax2.grid(alpha=0.3)

    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
