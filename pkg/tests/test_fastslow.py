from dataclasses import replace

import numpy as np
import pytest

from evofs import (ContractError, CVScorer, EstimatorSpec, FastSlowConfig,
                   GAConfig, Individual, Population, evaluate, evolve_island,
                   init_population, merge_select, next_generation,
                   run_fast_slow, run_ga)
from evofs.masks import freeze, mask_key, parse_mask_key


def make_population(fitnesses, width=4, generation=0):
    inds = []
    for i, f in enumerate(fitnesses):
        mask = np.zeros(width, dtype=np.uint8)
        mask[i % width] = 1
        inds.append(Individual(freeze(mask), score=f, fitness=f))
    return Population(inds, generation)


class TestMergeSelect:
    def test_dominant_island_wins(self):
        fast = make_population([0.9, 0.9, 0.9])
        slow = make_population([0.1, 0.1, 0.1])
        merged = merge_select(fast, slow)
        assert [i.fitness for i in merged.individuals] == [0.9, 0.9, 0.9]

    def test_identical_populations_duplicate_top_half(self):
        # truncation keeps the N fittest of the pooled 2N, duplicates allowed,
        # so merging a population with itself doubles its upper half
        a = make_population([0.7, 0.3])
        b = make_population([0.7, 0.3])
        merged = merge_select(a, b)
        assert [i.fitness for i in merged.individuals] == [0.7, 0.7]

    def test_idempotent_when_fitness_uniform(self):
        a = make_population([0.5, 0.5])
        b = make_population([0.5, 0.5])
        merged = merge_select(a, b)
        assert [mask_key(i.mask) for i in merged.individuals] == \
               [mask_key(i.mask) for i in a.individuals]

    def test_interleaved_top_n(self):
        fast = make_population([0.9, 0.5])
        slow = make_population([0.8, 0.6])
        merged = merge_select(fast, slow)
        assert [i.fitness for i in merged.individuals] == [0.9, 0.8]

    def test_output_members_come_from_inputs(self, rng):
        fast = make_population(list(rng.random(6)))
        slow = make_population(list(rng.random(6)))
        merged = merge_select(fast, slow)
        source = {mask_key(i.mask) for i in fast.individuals + slow.individuals}
        assert merged.size == 6
        assert all(mask_key(i.mask) in source for i in merged.individuals)

    def test_matches_sort_oracle_with_ties(self, rng):
        # oracle: stable sort of (fitness desc, popcount asc, pooled index asc)
        for trial in range(20):
            fits_f = list(np.round(rng.random(5), 1))
            fits_s = list(np.round(rng.random(5), 1))
            fast, slow = make_population(fits_f, 8), make_population(fits_s, 8)
            pooled = fast.individuals + slow.individuals
            oracle = sorted(range(10),
                            key=lambda i: (-pooled[i].fitness,
                                           pooled[i].n_selected, i))[:5]
            merged = merge_select(fast, slow)
            assert [merged.individuals[j].fitness for j in range(5)] == \
                   [pooled[i].fitness for i in oracle]
            assert [mask_key(merged.individuals[j].mask) for j in range(5)] == \
                   [mask_key(pooled[i].mask) for i in oracle]

    def test_sparser_mask_wins_fitness_tie(self):
        dense = Individual(parse_mask_key("1111"), score=0.5, fitness=0.5)
        sparse = Individual(parse_mask_key("1000"), score=0.5, fitness=0.5)
        fast = Population([dense], 0)
        slow = Population([sparse], 0)
        merged = merge_select(fast, slow)
        assert mask_key(merged.individuals[0].mask) == "1000"

    def test_rejects_mismatched_sizes(self):
        with pytest.raises(ContractError):
            merge_select(make_population([0.1]), make_population([0.1, 0.2]))

    def test_rejects_mismatched_mask_lengths(self):
        with pytest.raises(ContractError):
            merge_select(make_population([0.1], width=3),
                         make_population([0.2], width=5))


class TestEvolveIsland:
    def test_one_inner_generation_equals_next_generation(self, small_toy, small_folds):
        base = GAConfig(population_size=5, mutation_rate=0.3, seed=4)
        scorer_a = CVScorer(small_toy, EstimatorSpec(), small_folds)
        scorer_b = CVScorer(small_toy, EstimatorSpec(), small_folds)
        pop = init_population(base, 20, np.random.default_rng(1))
        evaluate(pop, scorer_a, base.alpha)
        evaluate(pop, scorer_b, base.alpha)
        a = evolve_island(pop.clone(), 0.3, 1, base, scorer_a,
                          np.random.default_rng(7))
        b = next_generation(pop.clone(), replace(base, mutation_rate=0.3),
                            scorer_b, np.random.default_rng(7))
        assert [mask_key(i.mask) for i in a.individuals] == \
               [mask_key(i.mask) for i in b.individuals]

    def test_zero_mutation_uniform_population_unchanged(self, small_scorer, rng):
        mask = parse_mask_key("10100000000000000000")
        pop = Population([Individual(mask) for _ in range(4)], 0)
        evaluate(pop, small_scorer, 1.0)
        out = evolve_island(pop, 0.0, 3, GAConfig(population_size=4, mutation_rate=0.0),
                            small_scorer, rng)
        assert all(mask_key(i.mask) == mask_key(mask) for i in out.individuals)

    def test_reproducible_island_streams(self, small_toy, small_folds):
        base = GAConfig(population_size=5, mutation_rate=0.5, seed=2)
        pop = init_population(base, 20, np.random.default_rng(3))
        outs = []
        for _ in range(2):
            scorer = CVScorer(small_toy, EstimatorSpec(), small_folds)
            evaluate(pop.clone(), scorer, base.alpha)
            p = pop.clone()
            evaluate(p, scorer, base.alpha)
            outs.append(evolve_island(p, 0.5, 2, base, scorer,
                                      np.random.default_rng(42)))
        assert [mask_key(i.mask) for i in outs[0].individuals] == \
               [mask_key(i.mask) for i in outs[1].individuals]


def tiny_fs_config(seed=0, **kw):
    base = GAConfig(population_size=6, mutation_rate=0.1, alpha=kw.pop("alpha", 1.0),
                    seed=seed)
    return FastSlowConfig(base=base, mu_fast=kw.pop("mu_fast", 1.0),
                          mu_slow=kw.pop("mu_slow", 0.1),
                          inner_generations=kw.pop("inner", 2),
                          outer_rounds=kw.pop("rounds", 3))


class TestRunFastSlow:
    def test_trivial_round_zero_report(self, small_toy, small_folds):
        cfg = tiny_fs_config(inner=0, rounds=1)
        scorer = CVScorer(small_toy, EstimatorSpec(), small_folds)
        rep = run_fast_slow(cfg, small_toy, scorer, parallel=False)
        assert len(rep.trajectory) == 2
        assert rep.trajectory[0].best_fitness == rep.trajectory[1].best_fitness
        assert rep.best_fitness == rep.trajectory[0].best_fitness

    def test_post_merge_dominates_islands_and_previous_round(self, small_toy, small_folds):
        cfg = tiny_fs_config(seed=3)
        scorer = CVScorer(small_toy, EstimatorSpec(), small_folds)
        rep = run_fast_slow(cfg, small_toy, scorer, parallel=False)
        merged_best = {g.step: g.best_fitness for g in rep.trajectory}
        for isl in rep.islands:
            assert merged_best[isl.round] >= isl.best_fitness - 1e-15
        best = [g.best_fitness for g in rep.trajectory]
        assert all(a <= b + 1e-15 for a, b in zip(best, best[1:]))

    def test_serial_parallel_bit_identical(self, small_toy, small_folds):
        cfg = tiny_fs_config(seed=5)
        r_serial = run_fast_slow(cfg, small_toy,
                                 CVScorer(small_toy, EstimatorSpec(), small_folds),
                                 parallel=False)
        r_parallel = run_fast_slow(cfg, small_toy,
                                   CVScorer(small_toy, EstimatorSpec(), small_folds),
                                   parallel=True)
        assert r_serial.to_dict() == r_parallel.to_dict()

    def test_island_execution_order_is_irrelevant(self, small_toy, small_folds):
        # run the two islands by hand in both orders; private caches and
        # per-(round, island) rng streams must make the merge identical
        cfg = tiny_fs_config(seed=8)
        base = cfg.base
        scorer = CVScorer(small_toy, EstimatorSpec(), small_folds)
        pop = init_population(base, 20,
                              np.random.default_rng(np.random.SeedSequence([8, 0])))
        evaluate(pop, scorer, base.alpha)

        def island(which, order_tag):
            mu = cfg.mu_fast if which == "fast" else cfg.mu_slow
            idx = 1 if which == "fast" else 2
            cache = scorer.cache.values_copy()
            from evofs.estimator import ScoreCache
            sc = CVScorer(small_toy, EstimatorSpec(), small_folds, ScoreCache(cache))
            rng = np.random.default_rng(np.random.SeedSequence([8, 1, idx]))
            return evolve_island(pop.clone(), mu, cfg.inner_generations, base, sc, rng)

        fast_first = merge_select(island("fast", 0), island("slow", 0))
        slow_first_slow = island("slow", 1)
        slow_first_fast = island("fast", 1)
        swapped = merge_select(slow_first_fast, slow_first_slow)
        assert [mask_key(i.mask) for i in fast_first.individuals] == \
               [mask_key(i.mask) for i in swapped.individuals]

    def test_reproducible(self, small_toy, small_folds):
        cfg = tiny_fs_config(seed=12)
        r1 = run_fast_slow(cfg, small_toy,
                           CVScorer(small_toy, EstimatorSpec(), small_folds),
                           parallel=False)
        r2 = run_fast_slow(cfg, small_toy,
                           CVScorer(small_toy, EstimatorSpec(), small_folds),
                           parallel=False)
        assert r1.to_dict() == r2.to_dict()

    def test_equal_rates_statistically_match_double_ga(self, small_toy, small_folds):
        # paired runs, 30 seeds: identical mutation rates on both islands vs a
        # single ga with a 2N population and the same generation budget.
        # oracle: hand-rolled rank-sum z statistic (normal approximation).
        fs_scores, ga_scores = [], []
        for seed in range(30):
            base = GAConfig(population_size=6, mutation_rate=0.2, alpha=1.0, seed=seed)
            cfg = FastSlowConfig(base=base, mu_fast=0.2, mu_slow=0.2,
                                 inner_generations=2, outer_rounds=2)
            scorer = CVScorer(small_toy, EstimatorSpec(), small_folds)
            fs_scores.append(run_fast_slow(cfg, small_toy, scorer,
                                           parallel=False).best_score)
            ga = GAConfig(population_size=12, mutation_rate=0.2, alpha=1.0,
                          generations=4, seed=seed)
            scorer2 = CVScorer(small_toy, EstimatorSpec(), small_folds)
            ga_scores.append(run_ga(ga, small_toy, scorer2).best_score)
        pooled = np.concatenate([fs_scores, ga_scores])
        ranks = np.argsort(np.argsort(pooled)) + 1.0
        # midranks for ties
        for v in np.unique(pooled):
            where = pooled == v
            ranks[where] = ranks[where].mean()
        n1 = n2 = 30
        r1 = ranks[:n1].sum()
        mu_u = n1 * (n1 + n2 + 1) / 2
        sigma_u = np.sqrt(n1 * n2 * (n1 + n2 + 1) / 12)
        z = (r1 - mu_u) / sigma_u
        assert abs(z) < 3.0

    def test_evaluation_count_parity(self, small_toy, small_folds):
        # offspring evaluations: islands 2*G*(N-1) + N init vs single 2N ga
        # G*(2N-1) + 2N init; the islands never evaluate more
        n, g_in, rounds = 6, 2, 3
        g = g_in * rounds
        cfg = tiny_fs_config(seed=1, inner=g_in, rounds=rounds)
        scorer = CVScorer(small_toy, EstimatorSpec(), small_folds)
        run_fast_slow(cfg, small_toy, scorer, parallel=False)
        island_calls = scorer.cache.calls
        assert island_calls == n + 2 * g * (n - 1)

        big = GAConfig(population_size=2 * n, mutation_rate=0.1, alpha=1.0,
                       generations=g, seed=1)
        scorer2 = CVScorer(small_toy, EstimatorSpec(), small_folds)
        run_ga(big, small_toy, scorer2)
        single_calls = scorer2.cache.calls
        assert single_calls == 2 * n + g * (2 * n - 1)
        assert island_calls <= single_calls
        assert scorer.cache.misses <= single_calls

    def test_mu_order_warning(self):
        with pytest.warns(UserWarning, match="swaps"):
            FastSlowConfig(base=GAConfig(), mu_fast=0.1, mu_slow=0.9)

    def test_config_validation(self):
        with pytest.raises(Exception):
            FastSlowConfig(base=GAConfig(), mu_fast=1.2)
        with pytest.raises(Exception):
            FastSlowConfig(base=GAConfig(), outer_rounds=0)
