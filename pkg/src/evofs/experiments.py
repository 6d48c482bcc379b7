"""Reproduction harness: mutation-rate sweep, accuracy-weight sweep,
no-selection baseline and multi-seed aggregation.

Ensemble members are seeded ``base_seed + run_index`` so an ensemble can be
extended without recomputing earlier runs, and aggregates are computed over
sorted values so they are bit-identical under any execution order.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from .dataset import Dataset, FoldAssignment
from .errors import ConfigError
from .estimator import CVScorer, EstimatorSpec, ScoreCache, cross_val_accuracy
from .fastslow import FastSlowConfig, run_fast_slow
from .ga import GAConfig, run_ga
from .masks import full_mask
from .report import SweepPoint, SweepSummary


@dataclass(frozen=True)
class Preset:
    """Desk-scale vs paper-scale experiment sizes."""

    n_samples: int
    runs: int


PRESETS: dict[str, Preset] = {
    "quick": Preset(n_samples=1000, runs=15),
    "full": Preset(n_samples=10000, runs=50),
}


def default_mu_grid() -> list[float]:
    """Fifty mutation rates: 0.01, 0.03, ..., 0.99."""
    return [round(0.01 + 0.02 * i, 2) for i in range(50)]


def baseline_no_selection(dataset: Dataset, spec: EstimatorSpec,
                          folds: FoldAssignment, cache: ScoreCache | None = None) -> float:
    """Cross-validated accuracy with every feature selected."""
    return cross_val_accuracy(dataset, full_mask(dataset.n_features), spec, folds, cache)


def _aggregate(values: list[float]) -> tuple[float, float]:
    ordered = np.sort(np.asarray(values, dtype=np.float64))
    return float(ordered.mean()), float(ordered.std())


def mutation_sweep(mu_values: list[float], runs_per_value: int, config: GAConfig,
                   dataset: Dataset, spec: EstimatorSpec, folds: FoldAssignment,
                   base_seed: int | None = None,
                   cache: ScoreCache | None = None) -> SweepSummary:
    """Ensembles of single-GA runs across mutation rates."""
    if not mu_values:
        raise ConfigError("mu_values must not be empty")
    if runs_per_value < 1:
        raise ConfigError(f"runs_per_value must be >= 1, got {runs_per_value}")
    t0 = time.perf_counter()
    base_seed = config.seed if base_seed is None else base_seed
    scorer = CVScorer(dataset, spec, folds, cache)
    points = []
    for mu in mu_values:
        scores, counts = [], []
        for i in range(runs_per_value):
            cfg = replace(config, mutation_rate=mu, seed=base_seed + i)
            rep = run_ga(cfg, dataset, scorer)
            scores.append(rep.best_score)
            counts.append(float(rep.best_n_selected))
        ms, ss = _aggregate(scores)
        mc, sc = _aggregate(counts)
        points.append(SweepPoint(value=mu, mean_score=ms, std_score=ss,
                                 mean_n_selected=mc, std_n_selected=sc))
    baseline = baseline_no_selection(dataset, spec, folds, scorer.cache)
    return SweepSummary(axis="mu", points=points, runs_per_value=runs_per_value,
                        baseline_score=baseline, base_seed=base_seed,
                        config=asdict(config),
                        duration_seconds=time.perf_counter() - t0)


def alpha_sweep(alpha_values: list[float], runs_per_value: int, config: FastSlowConfig,
                dataset: Dataset, spec: EstimatorSpec, folds: FoldAssignment,
                base_seed: int | None = None, cache: ScoreCache | None = None,
                parallel: bool = False) -> SweepSummary:
    """Ensembles of fast/slow runs across the accuracy weight."""
    if not alpha_values:
        raise ConfigError("alpha_values must not be empty")
    if runs_per_value < 1:
        raise ConfigError(f"runs_per_value must be >= 1, got {runs_per_value}")
    t0 = time.perf_counter()
    base_seed = config.base.seed if base_seed is None else base_seed
    scorer = CVScorer(dataset, spec, folds, cache)
    points = []
    for alpha in alpha_values:
        scores, counts = [], []
        for i in range(runs_per_value):
            cfg = replace(config, base=replace(config.base, alpha=alpha,
                                               seed=base_seed + i))
            rep = run_fast_slow(cfg, dataset, scorer, parallel=parallel)
            scores.append(rep.best_score)
            counts.append(float(rep.best_n_selected))
        ms, ss = _aggregate(scores)
        mc, sc = _aggregate(counts)
        points.append(SweepPoint(value=alpha, mean_score=ms, std_score=ss,
                                 mean_n_selected=mc, std_n_selected=sc))
    baseline = baseline_no_selection(dataset, spec, folds, scorer.cache)
    return SweepSummary(axis="alpha", points=points, runs_per_value=runs_per_value,
                        baseline_score=baseline, base_seed=base_seed,
                        config=asdict(config),
                        duration_seconds=time.perf_counter() - t0)
