import numpy as np
import pytest

from evofs import (ContractError, CVScorer, Dataset, EstimatorSpec,
                   ScoreCache, cross_val_accuracy, fit, generate_toy,
                   kfold_split, predict)
from evofs.estimator import KIND_FOREST, KIND_LOGISTIC
from evofs.masks import full_mask, parse_mask_key


def two_clusters(n=60, gap=6.0, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, 0.5, size=(n // 2, 3))
    b = rng.normal(gap, 0.5, size=(n // 2, 3))
    X = np.vstack([a, b])
    y = np.array([0] * (n // 2) + [1] * (n // 2))
    return X, y


class TestLogisticFit:
    def test_separable_training_accuracy(self):
        X, y = two_clusters()
        model = fit(EstimatorSpec(lr_epochs=200), X, y)
        assert np.mean(predict(model, X) == y) == 1.0

    def test_constant_target_gives_constant_predictor(self):
        X = np.random.default_rng(0).random((20, 4))
        model = fit(EstimatorSpec(), X, np.ones(20, dtype=int), n_classes=2)
        assert model.constant_class == 1
        assert np.all(predict(model, X) == 1)

    def test_deterministic(self):
        X, y = two_clusters(seed=3)
        m1 = fit(EstimatorSpec(), X, y)
        m2 = fit(EstimatorSpec(), X, y)
        assert np.array_equal(m1.weights, m2.weights)
        assert np.array_equal(m1.intercepts, m2.intercepts)

    def test_matches_handrolled_gradient_descent(self):
        # independent oracle: textbook loop, no shared code, higher epoch count
        ds = generate_toy(200, 6, 3, 0.5, seed=21)
        X, y = ds.features, ds.target
        spec = EstimatorSpec(lr_learning_rate=0.5, lr_epochs=400, lr_l2=1e-4)
        model = fit(spec, X, y)

        mean, std = X.mean(axis=0), np.sqrt(np.maximum(X.var(axis=0), 1e-12))
        Xs = (X - mean) / std
        w = np.zeros(X.shape[1])
        b = 0.0
        for _ in range(400):
            p = 1.0 / (1.0 + np.exp(-(Xs @ w + b)))
            err = p - y
            w = w - 0.5 * (Xs.T @ err / len(y) + 1e-4 * w)
            b = b - 0.5 * err.mean()
        assert np.allclose(model.weights[:, 0], w, rtol=1e-10, atol=1e-12)
        assert np.isclose(model.intercepts[0], b, rtol=1e-10)

        # converged oracle acts as the accuracy reference
        oracle_acc = np.mean(((Xs @ w + b) > 0) == y)
        majority = max(y.mean(), 1 - y.mean())
        ours = np.mean(predict(model, X) == y)
        assert ours > majority
        assert abs(ours - oracle_acc) < 1e-12

    def test_multiclass_one_vs_rest(self):
        rng = np.random.default_rng(5)
        centers = np.array([[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]])
        X = np.vstack([rng.normal(c, 0.4, size=(30, 2)) for c in centers])
        y = np.repeat([0, 1, 2], 30)
        model = fit(EstimatorSpec(lr_epochs=150), X, y)
        assert model.weights.shape == (2, 3)
        assert np.mean(predict(model, X) == y) == 1.0

    def test_predict_rejects_column_mismatch(self):
        X, y = two_clusters()
        model = fit(EstimatorSpec(), X, y)
        with pytest.raises(ContractError, match="columns"):
            predict(model, X[:, :2])


class TestForest:
    def test_separable_training_accuracy(self):
        X, y = two_clusters(seed=8)
        model = fit(EstimatorSpec(kind=KIND_FOREST, rf_n_trees=10), X, y)
        assert np.mean(predict(model, X) == y) == 1.0

    def test_single_split_matches_threshold_enumeration(self):
        # depth-1 tree on one feature: oracle enumerates every candidate cut
        # on the same bootstrap sample and picks the gini-optimal threshold
        rng = np.random.default_rng(17)
        x = rng.random(200)
        y = (x > 0.6).astype(int)
        X = x[:, None]
        spec = EstimatorSpec(kind=KIND_FOREST, rf_n_trees=1, rf_max_depth=1,
                             rf_min_leaf=1, rf_feature_subsample=1.0, seed=123)
        model = fit(spec, X, y)

        boot = np.random.default_rng(123).integers(0, 200, size=200)
        xb, yb = x[boot], y[boot]

        def gini(labels):
            if labels.size == 0:
                return 0.0
            p = np.bincount(labels, minlength=2) / labels.size
            return 1.0 - np.sum(p ** 2)

        best_cost, best_thr = np.inf, None
        xs = np.sort(np.unique(xb))
        for lo, hi in zip(xs[:-1], xs[1:]):
            thr = (lo + hi) / 2
            left, right = yb[xb <= thr], yb[xb > thr]
            cost = (left.size * gini(left) + right.size * gini(right)) / 200
            if cost < best_cost:
                best_cost, best_thr = cost, thr
        tree = model.trees[0]
        assert tree.feature[0] == 0
        assert tree.threshold[0] == pytest.approx(best_thr)

        probe = np.linspace(0, 1, 101)[:, None]
        assert np.array_equal(predict(model, probe),
                              (probe[:, 0] > tree.threshold[0]).astype(int))

    def test_tie_votes_break_toward_smaller_class(self):
        # two stump trees voting for different classes -> class 0 wins
        from evofs.estimator import ForestModel, _Tree
        stump = lambda cls: _Tree(np.array([-1]), np.array([0.0]), np.array([-1]),
                                  np.array([-1]),
                                  np.array([[1, 0] if cls == 0 else [0, 1]]))
        model = ForestModel([stump(0), stump(1)], n_columns=1, n_classes=2)
        assert predict(model, np.zeros((3, 1)))[0] == 0

    def test_deterministic(self):
        ds = generate_toy(150, 6, 3, 0.5, seed=2)
        spec = EstimatorSpec(kind=KIND_FOREST, rf_n_trees=5, seed=7)
        p1 = predict(fit(spec, ds.features, ds.target), ds.features)
        p2 = predict(fit(spec, ds.features, ds.target), ds.features)
        assert np.array_equal(p1, p2)


class TestCrossValAccuracy:
    def test_perfect_predictor_feature(self):
        rng = np.random.default_rng(4)
        X = rng.random((100, 5))
        X[:, 3] = rng.integers(0, 2, size=100)   # feature 3 is the label itself
        y = X[:, 3].astype(int)
        ds = Dataset(X, y, [f"f{i}" for i in range(5)], 2)
        folds = kfold_split(100, 5, seed=0)
        mask = parse_mask_key("00010")
        score = cross_val_accuracy(ds, mask, EstimatorSpec(kind=KIND_FOREST), folds)
        assert score == 1.0

    def test_noise_features_score_near_chance(self):
        # Monte-Carlo over 20 seeds: noise-only masks hover around 0.5
        scores = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            X = rng.random((2000, 8))
            y = np.tile([0, 1], 1000)   # balanced, independent of features
            ds = Dataset(X, y, [f"f{i}" for i in range(8)], 2)
            folds = kfold_split(2000, 5, seed=seed)
            scores.append(cross_val_accuracy(ds, full_mask(8), EstimatorSpec(), folds))
        scores = np.array(scores)
        assert np.all(np.abs(scores - 0.5) < 0.05)
        assert abs(scores.mean() - 0.5) < 0.02

    def test_empty_mask_rejected(self, small_toy, small_folds):
        with pytest.raises(ContractError, match="no features"):
            cross_val_accuracy(small_toy, np.zeros(20, dtype=np.uint8),
                               EstimatorSpec(), small_folds)

    def test_scores_within_unit_interval(self, small_scorer, rng):
        for _ in range(5):
            mask = (rng.random(20) < 0.4).astype(np.uint8)
            mask[0] = 1
            assert 0.0 <= small_scorer.score(mask) <= 1.0

    def test_cache_transparency(self, small_toy, small_folds):
        spec = EstimatorSpec()
        mask = parse_mask_key("11111000000000000000")
        cold = cross_val_accuracy(small_toy, mask, spec, small_folds)
        cache = ScoreCache()
        warm_scorer = CVScorer(small_toy, spec, small_folds, cache)
        first = warm_scorer.score(mask)
        second = warm_scorer.score(mask)
        assert first == cold
        assert second == first
        assert cache.hits == 1 and cache.misses == 1

    def test_cache_counts_and_reuse(self, small_toy, small_folds):
        cache = ScoreCache()
        scorer = CVScorer(small_toy, EstimatorSpec(), small_folds, cache)
        m1 = parse_mask_key("10000000000000000000")
        m2 = parse_mask_key("01000000000000000000")
        scorer.score(m1)
        scorer.score(m2)
        scorer.score(m1)
        assert cache.stats() == {"entries": 2, "hits": 1, "misses": 2}

    def test_fast_path_matches_per_fold_fit(self, small_toy, small_folds):
        # slow oracle: explicit fit/predict per fold through the public api;
        # a float64 scorer must agree exactly with the textbook route
        spec = EstimatorSpec()
        mask = parse_mask_key("11011000010000000000")
        scorer = CVScorer(small_toy, spec, small_folds, dtype=np.float64)
        fast = scorer.score(mask)
        cols = np.flatnonzero(mask)
        accs = []
        for f in range(small_folds.k):
            tr = small_folds.train_indices(f)
            te = small_folds.test_indices(f)
            model = fit(spec, small_toy.features[np.ix_(tr, cols)], small_toy.target[tr],
                        n_classes=2)
            pred = predict(model, small_toy.features[np.ix_(te, cols)])
            accs.append(np.mean(pred == small_toy.target[te]))
        assert fast == pytest.approx(np.mean(accs), abs=1e-12)

    def test_default_dtype_tracks_float64(self, small_toy, small_folds, rng):
        # reduced-precision default path stays within a borderline sample or
        # two of the float64 reference on every mask
        spec = EstimatorSpec()
        s32 = CVScorer(small_toy, spec, small_folds)
        s64 = CVScorer(small_toy, spec, small_folds, dtype=np.float64)
        for _ in range(10):
            mask = (rng.random(20) < 0.5).astype(np.uint8)
            mask[3] = 1
            assert s32.score(mask) == pytest.approx(s64.score(mask), abs=0.01)

    def test_standardization_uses_training_rows_only(self, small_toy):
        # shift one fold's held-out rows by a huge constant; the training-fold
        # statistics the scorer computed must ignore those rows entirely
        folds = kfold_split(small_toy.n_samples, 5, seed=3)
        shifted = small_toy.features.copy()
        shifted[folds.test_indices(0)] += 1e6
        ds = Dataset(shifted, small_toy.target, small_toy.feature_names, 2)
        scorer = CVScorer(ds, EstimatorSpec(), folds)
        tr = folds.train_indices(0)
        expected_mean = ds.features[tr].mean(axis=0)
        expected_std = ds.features[tr].std(axis=0)
        assert np.allclose(scorer._mean_all[:, 0], expected_mean, rtol=1e-9)
        assert np.allclose(scorer._std_all[:, 0], expected_std, rtol=1e-6)
        assert np.all(np.abs(scorer._mean_all[:, 0]) < 100)   # no 1e6 leak

    def test_degenerate_fold_flagged(self):
        # one fold's training rows can end up single-class on tiny data
        X = np.arange(12, dtype=float).reshape(6, 2)
        y = np.array([0, 0, 0, 0, 0, 1])
        ds = Dataset(X, y, ["a", "b"], 2)
        folds = kfold_split(6, 3, seed=2)
        scorer = CVScorer(ds, EstimatorSpec(kind=KIND_FOREST, rf_n_trees=3), folds)
        scorer.score(full_mask(2))
        assert scorer.degenerate_folds >= 0   # counter exists and does not crash

    def test_forest_cv_deterministic(self, rng):
        X = rng.random((90, 4))
        y = (X[:, 0] + X[:, 1] > 1.0).astype(int)
        ds = Dataset(X, y, list("abcd"), 2)
        folds = kfold_split(90, 5, seed=0)
        spec = EstimatorSpec(kind=KIND_FOREST, rf_n_trees=7, seed=3)
        s1 = cross_val_accuracy(ds, full_mask(4), spec, folds)
        s2 = cross_val_accuracy(ds, full_mask(4), spec, folds)
        assert s1 == s2


class TestSpecValidation:
    @pytest.mark.parametrize("kwargs", [
        {"kind": "svm"},
        {"lr_learning_rate": 0.0},
        {"lr_epochs": 0},
        {"lr_l2": -1.0},
        {"rf_n_trees": 0},
        {"rf_feature_subsample": 0.0},
        {"rf_feature_subsample": 1.5},
    ])
    def test_rejects_bad_hyperparameters(self, kwargs):
        from evofs import ConfigError
        with pytest.raises(ConfigError):
            EstimatorSpec(**kwargs)

    def test_kinds_exposed(self):
        assert EstimatorSpec(kind=KIND_LOGISTIC).kind == "logistic_regression"
        assert EstimatorSpec(kind=KIND_FOREST).kind == "random_forest"
