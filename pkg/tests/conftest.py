import numpy as np
import pytest

from evofs import CVScorer, EstimatorSpec, generate_toy, kfold_split


@pytest.fixture(scope="session")
def small_toy():
    """1000-sample benchmark slice shared by cheap tests."""
    return generate_toy(1000, 20, 5, 0.5, seed=11)


@pytest.fixture(scope="session")
def small_folds(small_toy):
    return kfold_split(small_toy.n_samples, 5, seed=0)


@pytest.fixture()
def small_scorer(small_toy, small_folds):
    return CVScorer(small_toy, EstimatorSpec(), small_folds)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
