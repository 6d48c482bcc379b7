"""Binary feature masks: the chromosome representation.

A mask is a fixed-length numpy uint8 vector; bit i set means feature i is fed
to the classifier. Masks are treated as immutable once created.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError


def freeze(mask: np.ndarray) -> np.ndarray:
    """Return ``mask`` as a read-only uint8 array."""
    m = np.asarray(mask, dtype=np.uint8)
    if m.ndim != 1:
        raise ConfigError(f"mask must be 1-dimensional, got shape {m.shape}")
    if not np.all((m == 0) | (m == 1)):
        raise ConfigError("mask entries must be 0 or 1")
    m = np.ascontiguousarray(m)
    m.flags.writeable = False
    return m


def mask_key(mask: np.ndarray) -> str:
    """Canonical bit-string key, e.g. ``'10110000'`` (used for score caching)."""
    return "".join("1" if b else "0" for b in mask)


def parse_mask_key(key: str) -> np.ndarray:
    """Inverse of :func:`mask_key`."""
    if not key or any(c not in "01" for c in key):
        raise ConfigError(f"not a bit string: {key!r}")
    return freeze(np.frombuffer(key.encode("ascii"), dtype=np.uint8) - ord("0"))


def popcount(mask: np.ndarray) -> int:
    """Number of selected features."""
    return int(np.sum(mask, dtype=np.int64))


def random_mask(n_features: int, density: float, rng: np.random.Generator) -> np.ndarray:
    """Draw a mask with each bit independently 1 with probability ``density``.

    All-zero draws are retried a bounded number of times, then one random bit
    is forced on, so the result is never empty.
    """
    for _ in range(100):
        m = (rng.random(n_features) < density).astype(np.uint8)
        if m.any():
            return freeze(m)
    m = np.zeros(n_features, dtype=np.uint8)
    m[rng.integers(0, n_features)] = 1
    return freeze(m)


def full_mask(n_features: int) -> np.ndarray:
    return freeze(np.ones(n_features, dtype=np.uint8))
