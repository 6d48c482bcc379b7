"""The standard genetic algorithm: binary encoding, accuracy-vs-sparsity
fitness, fitness-proportional selection, single-cutoff crossover, per-bit
mutation and single-elite replacement.

Fitness of a mask x is ``alpha * score(x) + (1 - alpha) * (1 - n_x / n_all)``
where ``score`` is the cross-validated accuracy and ``n_x`` the number of
selected features, so it lives in [0, 1] and rewards both accuracy and
feature elimination. A chromosome mutated to all zeros is assigned fitness 0
rather than collecting the sparsity reward for selecting nothing.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, ContractError
from .estimator import CVScorer
from .masks import freeze, mask_key, popcount, random_mask
from .report import GenerationStats, RunReport


@dataclass
class GAConfig:
    population_size: int = 20
    mutation_rate: float = 0.1
    alpha: float = 1.0
    generations: int = 20
    init_density: float = 0.5
    seed: int = 0
    distinct_parents: bool = False

    def __post_init__(self):
        if self.population_size < 2:
            raise ConfigError(f"population_size must be >= 2, got {self.population_size}")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError(f"mutation_rate must be in [0, 1], got {self.mutation_rate}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.generations < 0:
            raise ConfigError(f"generations must be >= 0, got {self.generations}")
        if not 0.0 < self.init_density < 1.0:
            raise ConfigError(f"init_density must be in (0, 1), got {self.init_density}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


@dataclass
class Individual:
    mask: np.ndarray
    score: float | None = None
    fitness: float | None = None

    @property
    def n_selected(self) -> int:
        return popcount(self.mask)

    def clone(self) -> "Individual":
        return Individual(self.mask, self.score, self.fitness)


@dataclass
class Population:
    individuals: list[Individual]
    generation: int = 0

    @property
    def size(self) -> int:
        return len(self.individuals)

    def best(self) -> Individual:
        fits = [ind.fitness for ind in self.individuals]
        if any(f is None for f in fits):
            raise ContractError("population is not fully evaluated")
        return self.individuals[int(np.argmax(fits))]

    def clone(self) -> "Population":
        return Population([ind.clone() for ind in self.individuals], self.generation)


def fitness_of(score: float, n_selected: int, n_all: int, alpha: float) -> float:
    """Convex mix of accuracy and the fraction of features eliminated."""
    if n_all < 1 or n_selected > n_all:
        raise ConfigError(f"need 0 <= n_selected <= n_all, got {n_selected}/{n_all}")
    return alpha * score + (1.0 - alpha) * (1.0 - n_selected / n_all)


def init_population(config: GAConfig, n_features: int, rng: np.random.Generator) -> Population:
    if n_features < 1:
        raise ConfigError("need at least one feature")
    masks = [random_mask(n_features, config.init_density, rng)
             for _ in range(config.population_size)]
    return Population([Individual(m) for m in masks], generation=0)


def evaluate(population: Population, scorer: CVScorer, alpha: float) -> Population:
    """Fill in score and fitness for every individual, in place.

    Individuals that already carry a score (the carried-over elite) are not
    re-scored; the cache would make that free anyway. Empty masks get score 0
    and fitness 0.
    """
    n_all = scorer.dataset.n_features
    for ind in population.individuals:
        if ind.score is None:
            ind.score = 0.0 if ind.n_selected == 0 else scorer.score(ind.mask)
        if ind.n_selected == 0:
            ind.fitness = 0.0
        else:
            ind.fitness = fitness_of(ind.score, ind.n_selected, n_all, alpha)
    return population


def select_parent(population: Population, rng: np.random.Generator) -> Individual:
    """Roulette-wheel draw proportional to fitness; uniform if all zero."""
    fits = np.array([ind.fitness for ind in population.individuals], dtype=np.float64)
    total = fits.sum()
    if total <= 0.0:
        return population.individuals[int(rng.integers(population.size))]
    r = rng.random() * total
    idx = int(np.searchsorted(np.cumsum(fits), r, side="right"))
    return population.individuals[min(idx, population.size - 1)]


def crossover(parent1: np.ndarray, parent2: np.ndarray,
              rng: np.random.Generator) -> np.ndarray:
    if parent1.shape != parent2.shape:
        raise ContractError(f"parent lengths differ: {parent1.shape} vs {parent2.shape}")
    length = parent1.shape[0]
    if length == 1:
        return freeze(parent1.copy())
    cut = int(rng.integers(1, length))
    return freeze(np.concatenate([parent1[:cut], parent2[cut:]]))


def mutate(mask: np.ndarray, mu: float, rng: np.random.Generator) -> np.ndarray:
    flips = (rng.random(mask.shape[0]) < mu).astype(np.uint8)
    return freeze(np.bitwise_xor(mask, flips))


def next_generation(population: Population, config: GAConfig,
                    scorer: CVScorer, rng: np.random.Generator) -> Population:
    """One generational step: N-1 offspring plus the carried-over best."""
    elite = population.best()
    children = []
    for _ in range(config.population_size - 1):
        p1 = select_parent(population, rng)
        p2 = select_parent(population, rng)
        if config.distinct_parents:
            for _ in range(100):
                if p2 is not p1 or population.size == 1:
                    break
                p2 = select_parent(population, rng)
        child = mutate(crossover(p1.mask, p2.mask, rng), config.mutation_rate, rng)
        children.append(Individual(child))
    out = Population(children + [elite.clone()], population.generation + 1)
    return evaluate(out, scorer, config.alpha)


def population_stats(population: Population, step: int) -> GenerationStats:
    best = population.best()
    scores = [ind.score for ind in population.individuals]
    fits = [ind.fitness for ind in population.individuals]
    counts = [ind.n_selected for ind in population.individuals]
    return GenerationStats(
        step=step,
        best_fitness=float(best.fitness),
        best_score=float(best.score),
        best_n_selected=best.n_selected,
        mean_fitness=float(np.mean(fits)),
        mean_score=float(np.mean(scores)),
        mean_n_selected=float(np.mean(counts)),
    )


def run_ga(config: GAConfig, dataset: Dataset, scorer: CVScorer) -> RunReport:
    """Evolve for a fixed number of generations and report the trajectory."""
    if scorer.dataset is not dataset:
        raise ContractError("scorer was built for a different dataset")
    t0 = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    pop = init_population(config, dataset.n_features, rng)
    evaluate(pop, scorer, config.alpha)
    trajectory = [population_stats(pop, 0)]
    for gen in range(1, config.generations + 1):
        pop = next_generation(pop, config, scorer, rng)
        trajectory.append(population_stats(pop, gen))
    best = pop.best()
    selected = [dataset.feature_names[j] for j in np.flatnonzero(best.mask)]
    return RunReport(
        algorithm="ga",
        config=asdict(config),
        seed=config.seed,
        n_features=dataset.n_features,
        trajectory=trajectory,
        best_mask=mask_key(best.mask),
        selected_features=selected,
        best_score=float(best.score),
        best_fitness=float(best.fitness),
        best_n_selected=best.n_selected,
        cache=scorer.stats(),
        duration_seconds=time.perf_counter() - t0,
    )


def with_mutation_rate(config: GAConfig, mu: float) -> GAConfig:
    return replace(config, mutation_rate=mu)
