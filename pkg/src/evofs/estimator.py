"""Self-contained classifiers and the cross-validated accuracy scorer.

Logistic regression is trained with full-batch gradient descent on the
cross-entropy loss (one-vs-rest above two classes) with an L2 penalty on the
weights (not the intercept); features are standardized per column using
training-fold statistics only. The random forest uses bootstrap bagging,
uniform per-split feature subsampling and Gini impurity splits.

The hot path is :class:`CVScorer`, which evaluates one feature mask across
all folds at once: the per-fold standardization is folded into raw-space
algebra so every gradient step is two matrix products on the shared feature
matrix, with test rows masked out of the error term.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, FoldAssignment
from .errors import ConfigError, ContractError
from .masks import mask_key, popcount

KIND_LOGISTIC = "logistic_regression"
KIND_FOREST = "random_forest"


@dataclass(frozen=True)
class EstimatorSpec:
    """Hyperparameters for either classifier kind."""

    kind: str = KIND_LOGISTIC
    lr_learning_rate: float = 1.0
    lr_epochs: int = 30
    lr_l2: float = 1e-4
    rf_n_trees: int = 50
    rf_max_depth: int = 8
    rf_min_leaf: int = 2
    rf_feature_subsample: float | None = None   # None = sqrt(d)/d rule
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (KIND_LOGISTIC, KIND_FOREST):
            raise ConfigError(f"unknown estimator kind {self.kind!r}")
        if self.lr_learning_rate <= 0:
            raise ConfigError(f"lr_learning_rate must be > 0, got {self.lr_learning_rate}")
        if self.lr_epochs < 1:
            raise ConfigError(f"lr_epochs must be >= 1, got {self.lr_epochs}")
        if self.lr_l2 < 0:
            raise ConfigError(f"lr_l2 must be >= 0, got {self.lr_l2}")
        if self.rf_n_trees < 1 or self.rf_max_depth < 1 or self.rf_min_leaf < 1:
            raise ConfigError("forest sizes must be positive")
        if self.rf_feature_subsample is not None and not 0 < self.rf_feature_subsample <= 1:
            raise ConfigError(
                f"rf_feature_subsample must be in (0, 1], got {self.rf_feature_subsample}")


class ScoreCache:
    """Thread-safe memo of cross-validation scores keyed by mask bit string.

    Values are deterministic functions of (dataset, mask, spec, folds), so
    concurrent last-writer-wins inserts are idempotent. ``drain_added`` lets
    an island working on a private copy hand its new entries back for merging
    between outer rounds.
    """

    def __init__(self, values: dict[str, float] | None = None):
        self._values: dict[str, float] = dict(values) if values else {}
        self._added: dict[str, float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> float | None:
        with self._lock:
            value = self._values.get(key)
            if value is None:
                self.misses += 1
            else:
                self.hits += 1
            return value

    def put(self, key: str, score: float) -> None:
        with self._lock:
            self._values[key] = score
            self._added[key] = score

    def values_copy(self) -> dict[str, float]:
        """Snapshot of the stored scores (for seeding a private island cache)."""
        with self._lock:
            return dict(self._values)

    def drain_added(self) -> dict[str, float]:
        with self._lock:
            added, self._added = self._added, {}
            return added

    def merge(self, entries: dict[str, float]) -> None:
        with self._lock:
            self._values.update(entries)
            self._added.update(entries)

    def absorb_counters(self, other: "ScoreCache") -> None:
        with self._lock:
            self.hits += other.hits
            self.misses += other.misses

    def __len__(self) -> int:
        return len(self._values)

    @property
    def calls(self) -> int:
        return self.hits + self.misses

    def stats(self) -> dict[str, int]:
        return {"entries": len(self._values), "hits": self.hits, "misses": self.misses}


@dataclass
class LogisticModel:
    weights: np.ndarray       # (d, 1) binary or (d, C) one-vs-rest, standardized space
    intercepts: np.ndarray
    mean: np.ndarray          # (d,) standardization stats from training rows
    std: np.ndarray
    n_classes: int
    constant_class: int | None = None   # set when the training fold had one class


@dataclass
class _Tree:
    feature: np.ndarray       # (n_nodes,) split feature, -1 for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray        # (n_nodes, n_classes) class votes at each node


@dataclass
class ForestModel:
    trees: list[_Tree]
    n_columns: int
    n_classes: int
    constant_class: int | None = None


def fit(spec: EstimatorSpec, features: np.ndarray, target: np.ndarray,
        n_classes: int | None = None) -> LogisticModel | ForestModel:
    """Train one model on one matrix. Deterministic given (spec, data)."""
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(target, dtype=np.int64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ConfigError("need a 2-d feature matrix with at least one column")
    if n_classes is None:
        n_classes = int(y.max()) + 1 if y.size else 2
    present = np.unique(y)
    if present.size < 2:
        cls = int(present[0])
        if spec.kind == KIND_LOGISTIC:
            d = X.shape[1]
            return LogisticModel(np.zeros((d, 1)), np.zeros(1), np.zeros(d), np.ones(d),
                                 n_classes, constant_class=cls)
        return ForestModel([], X.shape[1], n_classes, constant_class=cls)
    if spec.kind == KIND_LOGISTIC:
        return _fit_logistic(spec, X, y, n_classes)
    return _fit_forest(spec, X, y, n_classes, np.random.default_rng(spec.seed))


def predict(model: LogisticModel | ForestModel, features: np.ndarray) -> np.ndarray:
    """One label per row. Forest ties break toward the smaller class index."""
    X = np.asarray(features, dtype=np.float64)
    d = model.mean.shape[0] if isinstance(model, LogisticModel) else model.n_columns
    if X.ndim != 2 or X.shape[1] != d:
        raise ContractError(f"expected {d} columns, got {X.shape}")
    if model.constant_class is not None:
        return np.full(X.shape[0], model.constant_class, dtype=np.int64)
    if isinstance(model, LogisticModel):
        z = ((X - model.mean) / model.std) @ model.weights + model.intercepts
        if model.weights.shape[1] == 1:
            return (z[:, 0] > 0).astype(np.int64)
        return np.argmax(z, axis=1).astype(np.int64)
    votes = np.zeros((X.shape[0], model.n_classes), dtype=np.int64)
    for tree in model.trees:
        votes[np.arange(X.shape[0]), _tree_predict(tree, X)] += 1
    return np.argmax(votes, axis=1).astype(np.int64)


def _standardize_stats(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    var = X.var(axis=0)
    std = np.sqrt(np.maximum(var, 1e-12))
    return mean, std


def _fit_logistic(spec: EstimatorSpec, X: np.ndarray, y: np.ndarray,
                  n_classes: int) -> LogisticModel:
    mean, std = _standardize_stats(X)
    Xs = (X - mean) / std
    n, d = Xs.shape
    n_out = 1 if n_classes == 2 else n_classes
    if n_out == 1:
        Y = (y == 1).astype(np.float64)[:, None]
    else:
        Y = (y[:, None] == np.arange(n_classes)).astype(np.float64)
    W = np.zeros((d, n_out))
    b = np.zeros(n_out)
    lr, l2 = spec.lr_learning_rate, spec.lr_l2
    for _ in range(spec.lr_epochs):
        z = Xs @ W + b
        p = 1.0 / (1.0 + np.exp(-z))
        err = p - Y
        W -= lr * (Xs.T @ err / n + l2 * W)
        b -= lr * err.mean(axis=0)
    return LogisticModel(W, b, mean, std, n_classes)


def _fit_forest(spec: EstimatorSpec, X: np.ndarray, y: np.ndarray,
                n_classes: int, rng: np.random.Generator) -> ForestModel:
    n, d = X.shape
    if spec.rf_feature_subsample is None:
        n_sub = max(1, round(np.sqrt(d)))
    else:
        n_sub = max(1, round(spec.rf_feature_subsample * d))
    trees = []
    for _ in range(spec.rf_n_trees):
        boot = rng.integers(0, n, size=n)
        trees.append(_grow_tree(X[boot], y[boot], n_classes, n_sub,
                                spec.rf_max_depth, spec.rf_min_leaf, rng))
    return ForestModel(trees, d, n_classes)


def _grow_tree(X: np.ndarray, y: np.ndarray, n_classes: int, n_sub: int,
               max_depth: int, min_leaf: int, rng: np.random.Generator) -> _Tree:
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx: np.ndarray) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(y[idx], minlength=n_classes))
        return node

    stack = [(new_node(np.arange(X.shape[0])), np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if depth >= max_depth or idx.size < 2 * min_leaf or np.unique(y[idx]).size < 2:
            continue
        split = _best_split(X, y, idx, n_classes, n_sub, min_leaf, rng)
        if split is None:
            continue
        j, thr = split
        go_left = X[idx, j] <= thr
        feature[node] = j
        threshold[node] = thr
        li, ri = idx[go_left], idx[~go_left]
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((left[node], li, depth + 1))
        stack.append((right[node], ri, depth + 1))

    return _Tree(np.asarray(feature, dtype=np.int64),
                 np.asarray(threshold, dtype=np.float64),
                 np.asarray(left, dtype=np.int64),
                 np.asarray(right, dtype=np.int64),
                 np.asarray(counts, dtype=np.int64))


def _best_split(X: np.ndarray, y: np.ndarray, idx: np.ndarray, n_classes: int,
                n_sub: int, min_leaf: int, rng: np.random.Generator,
                ) -> tuple[int, float] | None:
    m = idx.size
    best = (np.inf, -1, 0.0)
    candidates = rng.permutation(X.shape[1])[:n_sub]
    for j in candidates:
        order = np.argsort(X[idx, j], kind="stable")
        xs = X[idx[order], j]
        onehot = np.zeros((m, n_classes))
        onehot[np.arange(m), y[idx[order]]] = 1.0
        left_counts = np.cumsum(onehot, axis=0)[:-1]
        nl = np.arange(1, m, dtype=np.float64)
        nr = m - nl
        valid = (xs[:-1] < xs[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not valid.any():
            continue
        right_counts = left_counts[-1] + onehot[-1] - left_counts
        gini_l = 1.0 - ((left_counts / nl[:, None]) ** 2).sum(axis=1)
        gini_r = 1.0 - ((right_counts / nr[:, None]) ** 2).sum(axis=1)
        cost = (nl * gini_l + nr * gini_r) / m
        cost[~valid] = np.inf
        i = int(np.argmin(cost))
        if cost[i] < best[0]:
            best = (cost[i], int(j), float((xs[i] + xs[i + 1]) / 2))
    if best[1] < 0:
        return None
    return best[1], best[2]


def _tree_predict(tree: _Tree, X: np.ndarray) -> np.ndarray:
    pos = np.zeros(X.shape[0], dtype=np.int64)
    if tree.feature.size == 0:
        return pos
    while True:
        internal = tree.feature[pos] >= 0
        if not internal.any():
            break
        rows = np.flatnonzero(internal)
        p = pos[rows]
        go_left = X[rows, tree.feature[p]] <= tree.threshold[p]
        pos[rows] = np.where(go_left, tree.left[p], tree.right[p])
    return np.argmax(tree.counts[pos], axis=1)


class CVScorer:
    """Evaluates masks by k-fold cross-validated accuracy, with memoization.

    Holds everything the fitness function needs (dataset, estimator spec,
    fold assignment, cache) plus precomputed per-fold standardization stats,
    so a mask evaluation costs only the gradient-descent epochs themselves.

    ``dtype`` is the working precision of the logistic hot path. Accuracy is
    a discrete count, so float32 gives the same scores as float64 to within
    an occasional borderline test sample while being markedly faster on the
    many-thousand-evaluation sweeps.
    """

    def __init__(self, dataset: Dataset, spec: EstimatorSpec,
                 folds: FoldAssignment, cache: ScoreCache | None = None,
                 dtype: np.dtype = np.float32):
        if folds.n_samples != dataset.n_samples:
            raise ContractError(
                f"fold assignment covers {folds.n_samples} samples, "
                f"dataset has {dataset.n_samples}")
        self.dataset = dataset
        self.spec = spec
        self.folds = folds
        self.cache = cache if cache is not None else ScoreCache()
        self.degenerate_folds = 0
        self.dtype = np.dtype(dtype)

        n, k = dataset.n_samples, folds.k
        train = np.ones((n, k))
        train[np.arange(n), folds.fold_of_sample] = 0.0
        self._n_train = train.sum(axis=0)        # (k,)
        X = dataset.features
        sum_x = X.T @ train                      # stats in float64 regardless
        self._mean_all = sum_x / self._n_train   # (d, k) training-fold stats
        var = (X * X).T @ train / self._n_train - self._mean_all ** 2
        self._std_all = np.sqrt(np.maximum(var, 1e-12))
        self._test_rows = [folds.test_indices(f) for f in range(k)]
        y = dataset.target
        n_out = 1 if dataset.n_classes == 2 else dataset.n_classes
        self._n_out = n_out
        if n_out == 1:
            Y = (y == 1).astype(np.float64)[:, None]          # (n, 1)
            self._train = train.astype(self.dtype)            # (n, k)
            self._n_train_c = self._n_train.astype(self.dtype)
        else:
            Y = np.tile((y[:, None] == np.arange(dataset.n_classes)
                         ).astype(np.float64), (1, k))         # (n, k*C)
            self._train = np.repeat(train, n_out, axis=1).astype(self.dtype)
            self._n_train_c = np.repeat(self._n_train, n_out).astype(self.dtype)
        self._Y = Y.astype(self.dtype)

    def score(self, mask: np.ndarray) -> float:
        """Mean held-out accuracy over folds for the mask-selected columns."""
        if mask.shape != (self.dataset.n_features,):
            raise ContractError(
                f"mask length {mask.shape} does not match "
                f"{self.dataset.n_features} features")
        if popcount(mask) == 0:
            raise ContractError("mask selects no features; callers must handle "
                                "the all-zero chromosome before scoring")
        key = mask_key(mask)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        if self.spec.kind == KIND_LOGISTIC:
            value = self._score_logistic(mask)
        else:
            value = self._score_forest(mask)
        self.cache.put(key, value)
        return value

    def _score_logistic(self, mask: np.ndarray) -> float:
        cols = np.flatnonzero(mask)
        dtype = self.dtype
        X = np.ascontiguousarray(self.dataset.features[:, cols], dtype=dtype)
        k = self.folds.k
        n_out = self._n_out
        # one weight column per (fold, class), GD in standardized coordinates;
        # standardization is absorbed so both gemms run on the shared raw X
        mean = self._mean_all[cols]
        std = self._std_all[cols]
        if n_out > 1:
            mean = np.repeat(mean, n_out, axis=1)
            std = np.repeat(std, n_out, axis=1)
        mean = mean.astype(dtype)
        std = std.astype(dtype)
        train, Y, n_train = self._train, self._Y, self._n_train_c
        W = np.zeros((cols.size, train.shape[1]), dtype=dtype)
        b = np.zeros(train.shape[1], dtype=dtype)
        lr = dtype.type(self.spec.lr_learning_rate)
        l2 = dtype.type(self.spec.lr_l2)
        z = np.empty((X.shape[0], train.shape[1]), dtype=dtype)
        with np.errstate(over="ignore"):   # exp overflow saturates to sigmoid 0
            for _ in range(self.spec.lr_epochs):
                Ws = W / std
                np.matmul(X, Ws, out=z)
                z += b - (mean * Ws).sum(axis=0)
                np.negative(z, out=z)
                np.exp(z, out=z)
                z += dtype.type(1.0)
                np.reciprocal(z, out=z)        # z = sigmoid(X_std @ W + b)
                z -= Y
                z *= train                     # error, test rows zeroed
                colsum = z.sum(axis=0)
                grad = X.T @ z
                grad -= mean * colsum
                grad /= std
                grad /= n_train
                grad += l2 * W
                grad *= lr
                W -= grad
                b -= lr * (colsum / n_train)
        Ws = W / std
        z = X @ Ws + (b - (mean * Ws).sum(axis=0))
        y = self.dataset.target
        accs = np.empty(k)
        for f in range(k):
            rows = self._test_rows[f]
            if n_out == 1:
                pred = (z[rows, f] > 0).astype(np.int64)
            else:
                pred = np.argmax(z[rows, f * n_out:(f + 1) * n_out], axis=1)
            accs[f] = np.mean(pred == y[rows])
        return float(accs.mean())

    def _score_forest(self, mask: np.ndarray) -> float:
        cols = np.flatnonzero(mask)
        X = self.dataset.features[:, cols]
        y = self.dataset.target
        accs = np.empty(self.folds.k)
        for f in range(self.folds.k):
            tr = self.folds.train_indices(f)
            te = self._test_rows[f]
            fold_seed = np.random.SeedSequence([self.spec.seed, f])
            model = _fit_fold_forest(self.spec, X[tr], y[tr], self.dataset.n_classes,
                                     np.random.default_rng(fold_seed))
            if model.constant_class is not None:
                self.degenerate_folds += 1
            accs[f] = np.mean(predict(model, X[te]) == y[te])
        return float(accs.mean())

    def stats(self) -> dict[str, int]:
        out = self.cache.stats()
        out["degenerate_folds"] = self.degenerate_folds
        return out


def _fit_fold_forest(spec: EstimatorSpec, X: np.ndarray, y: np.ndarray,
                     n_classes: int, rng: np.random.Generator) -> ForestModel:
    present = np.unique(y)
    if present.size < 2:
        return ForestModel([], X.shape[1], n_classes, constant_class=int(present[0]))
    return _fit_forest(spec, X, y, n_classes, rng)


def cross_val_accuracy(dataset: Dataset, mask: np.ndarray, spec: EstimatorSpec,
                       folds: FoldAssignment, cache: ScoreCache | None = None) -> float:
    """k-fold accuracy of the estimator on the mask-selected columns.

    Convenience wrapper over :class:`CVScorer`; pipelines that evaluate many
    masks should hold one scorer instead, which amortizes the per-fold
    precomputations and shares the cache.
    """
    return CVScorer(dataset, spec, folds, cache).score(mask)
