"""The fast/slow two-island architecture.

Two copies of the same population evolve independently for a fixed number of
inner generations, one with a high mutation rate (exploration via long jumps)
and one with a low rate (exploitation via short moves). After each round the
two populations of size N are pooled and the N fittest survive. The islands
share no mutable state: each gets a private copy of the score cache and a
random stream derived from (seed, round, island), so results are identical
whether the islands run serially, in parallel, or in swapped order.
"""
from __future__ import annotations

import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, ContractError
from .estimator import CVScorer, ScoreCache
from .ga import (GAConfig, Population, evaluate, init_population,
                 next_generation, population_stats)
from .masks import mask_key
from .report import IslandStats, RunReport

ISLAND_FAST = "fast"
ISLAND_SLOW = "slow"


@dataclass
class FastSlowConfig:
    base: GAConfig
    mu_fast: float = 1.0
    mu_slow: float = 0.1
    inner_generations: int = 5
    outer_rounds: int = 4

    def __post_init__(self):
        for name, mu in (("mu_fast", self.mu_fast), ("mu_slow", self.mu_slow)):
            if not 0.0 <= mu <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {mu}")
        if self.inner_generations < 0:
            raise ConfigError(f"inner_generations must be >= 0, got {self.inner_generations}")
        if self.outer_rounds < 1:
            raise ConfigError(f"outer_rounds must be >= 1, got {self.outer_rounds}")
        if self.mu_slow > self.mu_fast:
            warnings.warn(
                f"mu_slow={self.mu_slow} exceeds mu_fast={self.mu_fast}; "
                "this merely swaps the islands' roles", stacklevel=2)


def evolve_island(population: Population, mu: float, g_in: int, base: GAConfig,
                  scorer: CVScorer, rng: np.random.Generator) -> Population:
    """Apply g_in generational steps at the island's own mutation rate."""
    cfg = replace(base, mutation_rate=mu)
    pop = population
    for _ in range(g_in):
        pop = next_generation(pop, cfg, scorer, rng)
    return pop


def merge_select(pop_fast: Population, pop_slow: Population) -> Population:
    """Keep the N fittest of the pooled 2N individuals.

    Ties break toward fewer selected features, then toward the earlier
    position in the pooled (fast island first) order, so the result is
    deterministic. Duplicates are allowed.
    """
    if pop_fast.size != pop_slow.size:
        raise ContractError(
            f"island sizes differ: {pop_fast.size} vs {pop_slow.size}")
    widths = {ind.mask.shape[0]
              for ind in pop_fast.individuals + pop_slow.individuals}
    if len(widths) != 1:
        raise ContractError(f"mask lengths differ across islands: {sorted(widths)}")
    merged = pop_fast.individuals + pop_slow.individuals
    if any(ind.fitness is None for ind in merged):
        raise ContractError("merge requires both populations evaluated")
    order = sorted(range(len(merged)),
                   key=lambda i: (-merged[i].fitness, merged[i].n_selected, i))
    n = pop_fast.size
    kept = [merged[i].clone() for i in order[:n]]
    return Population(kept, max(pop_fast.generation, pop_slow.generation))


def _island_rng(seed: int, round_index: int, island_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, round_index, island_index]))


def _island_job(args) -> tuple[Population, dict, int, int, int]:
    """Evolve one island against a private cache; picklable for process pools."""
    (dataset, spec, folds, cache_values, population, mu, g_in, base,
     seed, round_index, island_index) = args
    cache = ScoreCache(cache_values)
    scorer = CVScorer(dataset, spec, folds, cache)
    rng = _island_rng(seed, round_index, island_index)
    out = evolve_island(population, mu, g_in, base, scorer, rng)
    return out, cache.drain_added(), cache.hits, cache.misses, scorer.degenerate_folds


def run_fast_slow(config: FastSlowConfig, dataset: Dataset, scorer: CVScorer,
                  parallel: bool = True) -> RunReport:
    """Alternate island evolution and truncation merges for R rounds.

    ``parallel=False`` runs the islands back to back in the same process;
    outputs are bit-identical either way.
    """
    if scorer.dataset is not dataset:
        raise ContractError("scorer was built for a different dataset")
    t0 = time.perf_counter()
    base = config.base
    rng_init = np.random.default_rng(np.random.SeedSequence([base.seed, 0]))
    pop = init_population(base, dataset.n_features, rng_init)
    evaluate(pop, scorer, base.alpha)
    trajectory = [population_stats(pop, 0)]
    island_log: list[IslandStats] = []

    pool = ProcessPoolExecutor(max_workers=2) if parallel else None
    try:
        for rnd in range(1, config.outer_rounds + 1):
            jobs = []
            snapshot = scorer.cache.values_copy()
            for island_index, (name, mu) in enumerate(
                    [(ISLAND_FAST, config.mu_fast), (ISLAND_SLOW, config.mu_slow)], start=1):
                jobs.append((dataset, scorer.spec, scorer.folds, snapshot,
                             pop.clone(), mu, config.inner_generations, base,
                             base.seed, rnd, island_index))
            if pool is not None:
                results = list(pool.map(_island_job, jobs))
            else:
                results = [_island_job(j) for j in jobs]
            evolved = []
            for (name, mu), (island_pop, added, hits, misses, degenerate) in zip(
                    [(ISLAND_FAST, config.mu_fast), (ISLAND_SLOW, config.mu_slow)], results):
                scorer.cache.merge(added)
                scorer.cache.hits += hits
                scorer.cache.misses += misses
                scorer.degenerate_folds += degenerate
                best = island_pop.best()
                island_log.append(IslandStats(
                    round=rnd, island=name, mu=mu,
                    best_fitness=float(best.fitness),
                    best_score=float(best.score),
                    mean_fitness=float(np.mean([i.fitness for i in island_pop.individuals])),
                ))
                evolved.append(island_pop)
            pop = merge_select(evolved[0], evolved[1])
            trajectory.append(population_stats(pop, rnd))
    finally:
        if pool is not None:
            pool.shutdown()

    best = pop.best()
    selected = [dataset.feature_names[j] for j in np.flatnonzero(best.mask)]
    cfg_echo = asdict(config)
    return RunReport(
        algorithm="fastslow",
        config=cfg_echo,
        seed=base.seed,
        n_features=dataset.n_features,
        trajectory=trajectory,
        islands=island_log,
        best_mask=mask_key(best.mask),
        selected_features=selected,
        best_score=float(best.score),
        best_fitness=float(best.fitness),
        best_n_selected=best.n_selected,
        cache=scorer.stats(),
        duration_seconds=time.perf_counter() - t0,
    )
