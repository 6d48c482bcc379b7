"""Dataset container, CSV ingestion, the synthetic benchmark generator and
k-fold index splitting.

The synthetic benchmark draws every feature independently from a uniform
range and labels a row 1 exactly when the mean of its first ``n_significant``
features exceeds a threshold; the remaining columns are pure noise.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, IngestionError
from .masks import popcount

DEFAULT_TARGET_NAME = "y"


@dataclass
class Dataset:
    """Immutable dense numeric dataset with an integer class target.

    Target labels are dense integers in ``{0, ..., n_classes - 1}``; at least
    two distinct labels must be present.
    """

    features: np.ndarray          # (n_samples, n_features) float64
    target: np.ndarray            # (n_samples,) int64
    feature_names: list[str]
    n_classes: int

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.target = np.ascontiguousarray(self.target, dtype=np.int64)
        if self.features.ndim != 2:
            raise ConfigError(f"features must be 2-d, got shape {self.features.shape}")
        n, d = self.features.shape
        if n < 1 or d < 1:
            raise ConfigError(f"need at least one sample and one feature, got {n}x{d}")
        if self.target.shape != (n,):
            raise ConfigError(f"target length {self.target.shape} does not match {n} samples")
        if len(self.feature_names) != d:
            raise ConfigError(f"{len(self.feature_names)} names for {d} feature columns")
        if len(set(self.feature_names)) != d:
            raise ConfigError("feature names are not unique")
        if not np.all(np.isfinite(self.features)):
            i, j = np.argwhere(~np.isfinite(self.features))[0]
            raise ConfigError(f"non-finite feature value at row {i}, column {self.feature_names[j]!r}")
        if self.n_classes < 2:
            raise ConfigError("need at least two classes")
        if self.target.min() < 0 or self.target.max() >= self.n_classes:
            raise ConfigError(
                f"target labels must lie in [0, {self.n_classes - 1}], "
                f"got range [{self.target.min()}, {self.target.max()}]")
        if np.unique(self.target).size < 2:
            raise ConfigError("target has a single class")
        self.features.flags.writeable = False
        self.target.flags.writeable = False

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass
class FoldAssignment:
    """Maps each sample to one of k cross-validation folds."""

    fold_of_sample: np.ndarray    # (n_samples,) int64 in {0..k-1}
    k: int

    def __post_init__(self):
        self.fold_of_sample = np.ascontiguousarray(self.fold_of_sample, dtype=np.int64)
        if self.k < 2:
            raise ConfigError(f"k must be at least 2, got {self.k}")
        counts = np.bincount(self.fold_of_sample, minlength=self.k)
        if counts.size > self.k or counts.min() == 0:
            raise ConfigError("every fold index in 0..k-1 must appear at least once")
        if counts.max() - counts.min() > 1:
            raise ConfigError("fold sizes may differ by at most one sample")
        self.fold_of_sample.flags.writeable = False

    @property
    def n_samples(self) -> int:
        return self.fold_of_sample.shape[0]

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of_sample == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of_sample != fold)


def generate_toy(n_samples: int, n_features: int, n_significant: int,
                 threshold: float = 0.5, seed: int = 0,
                 low: float = 0.0, high: float = 1.0) -> Dataset:
    """Synthetic binary benchmark: uniform features, threshold-on-mean label.

    Row i gets label 1 exactly when the mean of its first ``n_significant``
    features is strictly greater than ``threshold``. Identical seeds produce
    bit-identical datasets.
    """
    if n_samples < 1:
        raise ConfigError(f"n_samples must be positive, got {n_samples}")
    if not 1 <= n_significant <= n_features:
        raise ConfigError(
            f"n_significant must be in [1, n_features], got {n_significant} of {n_features}")
    if not low < high:
        raise ConfigError(f"need low < high, got [{low}, {high})")
    rng = np.random.default_rng(seed)
    features = rng.uniform(low, high, size=(n_samples, n_features))
    target = (features[:, :n_significant].mean(axis=1) > threshold).astype(np.int64)
    names = [f"f{i}" for i in range(n_features)]
    return Dataset(features=features, target=target, feature_names=names, n_classes=2)


def kfold_split(n_samples: int, k: int, seed: int,
                stratify_labels: np.ndarray | None = None) -> FoldAssignment:
    """Uniformly shuffled fold assignment with near-equal fold sizes.

    With ``stratify_labels`` the shuffle happens within each class and samples
    are dealt round-robin, keeping per-class proportions while still obeying
    the global size-balance invariant.
    """
    if not 2 <= k <= n_samples:
        raise ConfigError(f"k must be in [2, n_samples], got k={k} for {n_samples} samples")
    rng = np.random.default_rng(seed)
    fold = np.empty(n_samples, dtype=np.int64)
    if stratify_labels is None:
        perm = rng.permutation(n_samples)
        sizes = np.full(k, n_samples // k, dtype=np.int64)
        sizes[: n_samples % k] += 1
        start = 0
        for f in range(k):
            fold[perm[start:start + sizes[f]]] = f
            start += sizes[f]
    else:
        labels = np.asarray(stratify_labels)
        if labels.shape != (n_samples,):
            raise ConfigError("stratify_labels length must equal n_samples")
        cursor = rng.integers(0, k)   # continue dealing across classes
        for c in np.unique(labels):
            idx = np.flatnonzero(labels == c)
            idx = idx[rng.permutation(idx.size)]
            for i in idx:
                fold[i] = cursor % k
                cursor += 1
    return FoldAssignment(fold_of_sample=fold, k=k)


def restrict(dataset: Dataset, mask: np.ndarray) -> Dataset:
    """Dataset containing only the columns whose mask bit is 1, order kept."""
    mask = np.asarray(mask)
    if mask.shape != (dataset.n_features,):
        raise ConfigError(
            f"mask length {mask.shape} does not match {dataset.n_features} features")
    if popcount(mask) == 0:
        raise ConfigError("mask selects no features")
    cols = np.flatnonzero(mask)
    return Dataset(
        features=dataset.features[:, cols],
        target=dataset.target,
        feature_names=[dataset.feature_names[j] for j in cols],
        n_classes=dataset.n_classes,
    )


def load_csv(path: str, target_column: str, header: bool = True,
             ) -> tuple[Dataset, list[str]]:
    """Parse a comma-separated file into a Dataset.

    Returns the dataset and the list of original target labels in
    first-appearance order (``class_labels[i]`` is the label encoded as i).
    Integer targets that already form ``{0..m-1}`` are kept as-is.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise IngestionError(f"{path}: file is empty")

    if header:
        names = [c.strip() for c in rows[0]]
        data_rows = rows[1:]
        first_data_line = 2
    else:
        names = [f"f{i}" for i in range(len(rows[0]))]
        data_rows = rows
        first_data_line = 1
    if not data_rows:
        raise IngestionError(f"{path}: no data rows")
    if target_column not in names:
        raise IngestionError(
            f"{path}: target column {target_column!r} not found (columns: {', '.join(names)})")
    t_idx = names.index(target_column)
    feat_names = [n for i, n in enumerate(names) if i != t_idx]

    n, d = len(data_rows), len(feat_names)
    features = np.empty((n, d), dtype=np.float64)
    raw_target: list[str] = []
    for i, row in enumerate(data_rows):
        line = first_data_line + i
        if len(row) != len(names):
            raise IngestionError(
                f"{path}: line {line} has {len(row)} cells, expected {len(names)}")
        j_out = 0
        for j, cell in enumerate(row):
            cell = cell.strip()
            if j == t_idx:
                if cell == "":
                    raise IngestionError(f"{path}: blank target cell at line {line}")
                raw_target.append(cell)
                continue
            try:
                v = float(cell)
            except ValueError:
                raise IngestionError(
                    f"{path}: non-numeric value {cell!r} at line {line}, "
                    f"column {names[j]!r}") from None
            if not np.isfinite(v):
                raise IngestionError(
                    f"{path}: non-finite value {cell!r} at line {line}, column {names[j]!r}")
            features[i, j_out] = v
            j_out += 1

    target, class_labels = _encode_target(raw_target, path)
    if len(class_labels) < 2:
        raise IngestionError(f"{path}: target has a single class ({class_labels[0]!r})")
    dataset = Dataset(features=features, target=target,
                      feature_names=feat_names, n_classes=len(class_labels))
    return dataset, class_labels


def _encode_target(raw: list[str], path: str) -> tuple[np.ndarray, list[str]]:
    try:
        ints = [int(v) for v in raw]
    except ValueError:
        ints = None
    if ints is not None:
        distinct = sorted(set(ints))
        if distinct == list(range(len(distinct))):
            return np.asarray(ints, dtype=np.int64), [str(v) for v in distinct]
    # label-encode in first-appearance order
    mapping: dict[str, int] = {}
    encoded = np.empty(len(raw), dtype=np.int64)
    for i, v in enumerate(raw):
        if v not in mapping:
            mapping[v] = len(mapping)
        encoded[i] = mapping[v]
    return encoded, list(mapping)


def save_csv(dataset: Dataset, path: str, target_name: str = DEFAULT_TARGET_NAME) -> None:
    """Write the dataset as a header-row CSV; floats use shortest round-trip form."""
    if target_name in dataset.feature_names:
        raise ConfigError(f"target name {target_name!r} collides with a feature name")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.feature_names) + [target_name])
        for i in range(dataset.n_samples):
            writer.writerow([repr(float(v)) for v in dataset.features[i]]
                            + [int(dataset.target[i])])
