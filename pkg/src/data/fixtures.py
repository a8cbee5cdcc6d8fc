"""
Synthetic datasets shaped like the three benchmark scenarios.
"""
from typing import Tuple

import numpy as np

from src.core.exceptions import InvalidArgumentError
from src.partitions.partition import Partition, canonicalize


def faithful_like(seed: int = 0, n: int = 272) -> Tuple[np.ndarray, Partition]:
    """
    Two-regime geyser data: (eruption minutes, waiting minutes) rows.

    Short eruptions (about 35% of rows) are followed by short waits, long ones
    by long waits.

    Returns:
        (n x 2 matrix, regime labels)
    """
    rng = np.random.default_rng(seed)
    regime = (rng.random(n) >= 0.35).astype(np.int64)
    eruption = np.where(regime == 0, rng.normal(2.04, 0.27, n), rng.normal(4.29, 0.41, n))
    waiting = np.where(regime == 0, rng.normal(54.5, 5.9, n), rng.normal(80.0, 5.9, n))
    data = np.column_stack([np.round(eruption, 3), np.round(waiting)])
    return data, canonicalize(regime)


def add_noise_dimensions(data: np.ndarray, seed: int = 0) -> np.ndarray:
    """Append 18 noise columns: 10 alternating N(3, 4)/N(70, 36) and 8 alternating N(1, 1)/N(10, 4)."""
    x = np.asarray(data, dtype=float)
    rng = np.random.default_rng(seed)
    n = x.shape[0]
    mean_a, var_a = np.tile([3.0, 70.0], 5), np.tile([4.0, 36.0], 5)
    mean_b, var_b = np.tile([1.0, 10.0], 4), np.tile([1.0, 4.0], 4)
    noise_a = mean_a + rng.standard_normal((n, 10)) * np.sqrt(var_a)
    noise_b = mean_b + rng.standard_normal((n, 8)) * np.sqrt(var_b)
    return np.hstack([x, noise_a, noise_b])


def planted_counts(n: int = 200, d: int = 500, groups: int = 5, seed: int = 0,
                   base_rate: float = 1.0, boost: float = 6.0,
                   depth_range: Tuple[float, float] = (0.5, 2.0)) -> Tuple[np.ndarray, Partition]:
    """
    Poisson count matrix with planted row groups.

    Each group elevates the rate of its own randomly scattered set of
    coordinates by ``boost``, so every contiguous column block separates the
    groups; every row gets a multiplicative sequencing depth drawn from
    ``depth_range``. Rows with no counts receive one count at a random
    coordinate so every row has positive depth.

    Returns:
        (n x d count matrix, planted labels)
    """
    if groups < 1 or groups > n or groups > d:
        raise InvalidArgumentError("groups must be between 1 and min(n, d)")
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % groups
    rng.shuffle(labels)
    blocks = np.array_split(rng.permutation(d), groups)
    rates = np.full((groups, d), base_rate)
    for g, block in enumerate(blocks):
        rates[g, block] *= boost
    depth = rng.uniform(*depth_range, size=n)
    counts = rng.poisson(depth[:, None] * rates[labels])
    empty = np.flatnonzero(counts.sum(axis=1) == 0)
    counts[empty, rng.integers(0, d, size=empty.size)] = 1
    return counts.astype(np.int64), canonicalize(labels)


def separated_gaussians(n: int = 40, seed: int = 0, offset: float = 10.0) -> Tuple[np.ndarray, Partition]:
    """One-dimensional two-cluster data at -offset and +offset with unit variance."""
    rng = np.random.default_rng(seed)
    labels = np.repeat([0, 1], [n // 2, n - n // 2])
    x = np.where(labels == 0, -offset, offset) + rng.standard_normal(n)
    return x[:, None], canonicalize(labels)
