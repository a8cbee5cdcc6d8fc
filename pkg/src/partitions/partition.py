"""
Canonical partitions and the information-theoretic quantities behind the
variation-of-information ground metric. All logarithms are natural.
"""
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.special import entr
from sklearn.metrics.cluster import contingency_matrix

from src.core.exceptions import InvalidArgumentError


def canonicalize(raw_labels: Sequence[int]) -> "Partition":
    """Relabel clusters in first-occurrence order, e.g. (2,2,5,2) -> (0,0,1,0)."""
    arr = np.asarray(raw_labels)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidArgumentError("cannot canonicalize an empty label sequence")
    _, first, inverse = np.unique(arr, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return Partition(tuple(int(v) for v in rank[inverse.ravel()]))


@dataclass(frozen=True)
class Partition:
    """Cluster labels of n items in canonical (first-occurrence) form."""
    labels: Tuple[int, ...]

    def __post_init__(self):
        labels = tuple(int(v) for v in self.labels)
        if not labels:
            raise InvalidArgumentError("a partition needs at least one item")
        next_label = 0
        for v in labels:
            if v > next_label or v < 0:
                raise InvalidArgumentError(f"labels {labels} are not in canonical form")
            if v == next_label:
                next_label += 1
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_labels(cls, raw_labels: Sequence[int]) -> "Partition":
        return canonicalize(raw_labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def n_clusters(self) -> int:
        return max(self.labels) + 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.int64)

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.as_array())

    def to_line(self) -> str:
        return ",".join(str(v) for v in self.labels)

    def __str__(self) -> str:
        return f"({self.to_line()})"


@dataclass(frozen=True)
class ContingencyCounts:
    """Joint cluster counts of two partitions over the same n items."""
    counts: np.ndarray
    n: int

    @property
    def joint(self) -> np.ndarray:
        return self.counts / self.n

    @property
    def row_marginal(self) -> np.ndarray:
        return self.counts.sum(axis=1) / self.n

    @property
    def col_marginal(self) -> np.ndarray:
        return self.counts.sum(axis=0) / self.n


def _check_same_n(p1: Partition, p2: Partition) -> None:
    if p1.n != p2.n:
        raise InvalidArgumentError(f"partitions cover different item counts ({p1.n} vs {p2.n})")


def _entropy_from_counts(counts: np.ndarray, n: int) -> float:
    # sorted summation makes the value independent of cell order
    c = np.sort(np.asarray(counts, dtype=float).ravel())
    c = c[c > 0]
    return float(math.fsum(entr(c / n)))


def contingency(p1: Partition, p2: Partition) -> ContingencyCounts:
    _check_same_n(p1, p2)
    counts = contingency_matrix(p1.as_array(), p2.as_array(), sparse=False)
    return ContingencyCounts(counts=np.asarray(counts, dtype=np.int64), n=p1.n)


def entropy(p: Partition) -> float:
    """H(z) = -sum_j p_j log p_j; exactly 0 for one cluster and log n for singletons."""
    if p.n_clusters == 1:
        return 0.0
    if p.n_clusters == p.n:
        return math.log(p.n)
    return _entropy_from_counts(p.cluster_sizes(), p.n)


def joint_entropy(p1: Partition, p2: Partition) -> float:
    table = contingency(p1, p2)
    return _entropy_from_counts(table.counts, table.n)


def mutual_information(p1: Partition, p2: Partition) -> float:
    """I(z1, z2) over the joint cluster proportions, clipped to [0, min(H1, H2)]."""
    _check_same_n(p1, p2)
    h1, h2 = entropy(p1), entropy(p2)
    mi = h1 + h2 - joint_entropy(p1, p2)
    return float(min(max(mi, 0.0), min(h1, h2)))


def voi(p1: Partition, p2: Partition) -> float:
    """Variation of information H(z1) + H(z2) - 2 I(z1, z2)."""
    _check_same_n(p1, p2)
    if p1.labels == p2.labels:
        return 0.0
    h12 = joint_entropy(p1, p2)
    value = 2.0 * h12 - (entropy(p1) + entropy(p2))
    return float(max(value, 0.0))


def binder(p1: Partition, p2: Partition) -> float:
    """Fraction of item pairs on which the two partitions disagree about co-clustering."""
    _check_same_n(p1, p2)
    n = p1.n
    if n < 2:
        return 0.0
    a, b = p1.as_array(), p2.as_array()
    iu = np.triu_indices(n, k=1)
    same_a = (a[:, None] == a[None, :])[iu]
    same_b = (b[:, None] == b[None, :])[iu]
    return float(np.count_nonzero(same_a != same_b) / iu[0].size)


def normalized_entropy(p: Partition) -> float:
    """H(z) / log(number of clusters), defined as 0 for a single cluster."""
    k = p.n_clusters
    if k < 2:
        return 0.0
    return float(entropy(p) / math.log(k))


def read_partitions(lines: Sequence[str]) -> Tuple[Partition, ...]:
    """Parse the partition text format: one comma-separated label line per partition."""
    out = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            raw = [int(v) for v in line.split(",")]
        except ValueError:
            raise InvalidArgumentError(f"line {lineno}: labels must be integers")
        out.append(canonicalize(raw))
    return tuple(out)
