"""Feature selection by two concurrently evolving genetic algorithms.

A high-mutation island explores the subset lattice with long jumps while a
low-mutation island exploits known good regions; every few generations the
two populations merge by truncation selection. Fitness trades cross-validated
accuracy against the number of selected features.
"""
from .dataset import (Dataset, FoldAssignment, generate_toy, kfold_split,
                      load_csv, restrict, save_csv)
from .errors import ConfigError, ContractError, IngestionError
from .estimator import (CVScorer, EstimatorSpec, ScoreCache,
                        cross_val_accuracy, fit, predict)
from .experiments import (PRESETS, alpha_sweep, baseline_no_selection,
                          default_mu_grid, mutation_sweep)
from .fastslow import FastSlowConfig, evolve_island, merge_select, run_fast_slow
from .ga import (GAConfig, Individual, Population, crossover, evaluate,
                 fitness_of, init_population, mutate, next_generation,
                 run_ga, select_parent)
from .masks import full_mask, mask_key, parse_mask_key, popcount, random_mask
from .report import RunReport, SweepSummary, emit_report

__version__ = "0.1.0"

__all__ = [
    "Dataset", "FoldAssignment", "generate_toy", "kfold_split", "load_csv",
    "restrict", "save_csv",
    "ConfigError", "ContractError", "IngestionError",
    "CVScorer", "EstimatorSpec", "ScoreCache", "cross_val_accuracy", "fit",
    "predict",
    "PRESETS", "alpha_sweep", "baseline_no_selection", "default_mu_grid",
    "mutation_sweep",
    "FastSlowConfig", "evolve_island", "merge_select", "run_fast_slow",
    "GAConfig", "Individual", "Population", "crossover", "evaluate",
    "fitness_of", "init_population", "mutate", "next_generation", "run_ga",
    "select_parent",
    "full_mask", "mask_key", "parse_mask_key", "popcount", "random_mask",
    "RunReport", "SweepSummary", "emit_report",
    "__version__",
]
