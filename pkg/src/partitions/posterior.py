"""
Weighted empirical distributions over partitions and their posterior summaries.
"""
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.exceptions import InvalidArgumentError
from src.partitions.partition import Partition, entropy, voi
from src.utils.validators import SIMPLEX_TOL, validate_nonnegative_weights, validate_simplex


class EmpiricalPartitionPosterior:
    """Distinct canonical partitions with simplex weights.

    MCMC multiplicity enters only through the weights; atoms are kept in
    first-seen order so every derived file is reproducible.
    """

    __slots__ = ("atoms", "weights", "n")

    def __init__(self, atoms: Sequence[Partition], weights: Sequence[float]):
        atoms = tuple(atoms)
        if not atoms:
            raise InvalidArgumentError("a posterior needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise InvalidArgumentError("posterior atoms must be distinct")
        n = atoms[0].n
        if any(a.n != n for a in atoms):
            raise InvalidArgumentError("posterior atoms cover different item counts")
        w = validate_simplex(weights, name="posterior weights", tol=SIMPLEX_TOL)
        if w.size != len(atoms):
            raise InvalidArgumentError(f"{w.size} weights for {len(atoms)} atoms")
        w.setflags(write=False)
        self.atoms: Tuple[Partition, ...] = atoms
        self.weights: np.ndarray = w
        self.n: int = n

    @classmethod
    def from_samples(cls, samples: Iterable[Partition],
                     weights: Optional[Sequence[float]] = None) -> "EmpiricalPartitionPosterior":
        """Merge duplicate samples, summing their weights; zero-weight atoms are dropped."""
        samples = list(samples)
        if not samples:
            raise InvalidArgumentError("cannot build a posterior from no samples")
        if weights is None:
            w = np.ones(len(samples))
        else:
            w = validate_nonnegative_weights(weights, length=len(samples), name="sample weights")
        n = samples[0].n
        merged: Dict[Partition, float] = {}
        for sample, weight in zip(samples, w):
            if sample.n != n:
                raise InvalidArgumentError("samples cover different item counts")
            merged[sample] = merged.get(sample, 0.0) + float(weight)
        atoms = [a for a, v in merged.items() if v > 0]
        values = np.array([merged[a] for a in atoms])
        return cls(atoms, values / values.sum())

    @classmethod
    def point_mass(cls, partition: Partition) -> "EmpiricalPartitionPosterior":
        return cls([partition], [1.0])

    def __len__(self) -> int:
        return len(self.atoms)

    def __repr__(self) -> str:
        return f"EmpiricalPartitionPosterior(n={self.n}, atoms={len(self.atoms)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmpiricalPartitionPosterior):
            return NotImplemented
        return self.atoms == other.atoms and np.array_equal(self.weights, other.weights)

    def weight_of(self, partition: Partition) -> float:
        try:
            return float(self.weights[self.atoms.index(partition)])
        except ValueError:
            return 0.0

    def as_dict(self) -> Dict[Partition, float]:
        return {a: float(w) for a, w in zip(self.atoms, self.weights)}

    def subsample_support(self, m: int, seed: int) -> "EmpiricalPartitionPosterior":
        """Draw m atoms with replacement proportional to weight, then re-deduplicate."""
        if m < 1:
            raise InvalidArgumentError("subsample size m must be at least 1")
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(self.atoms), size=int(m), replace=True, p=self.weights)
        return EmpiricalPartitionPosterior.from_samples([self.atoms[i] for i in idx])

    def expected_entropy(self) -> float:
        return float(np.dot(self.weights, [entropy(a) for a in self.atoms]))

    def coclustering(self) -> np.ndarray:
        """p_ij = P(z_i = z_j), the weight-averaged co-clustering indicator."""
        p = np.zeros((self.n, self.n))
        for atom, w in zip(self.atoms, self.weights):
            labels = atom.as_array()
            p += w * (labels[:, None] == labels[None, :])
        np.fill_diagonal(p, 1.0)
        return np.clip(p, 0.0, 1.0)

    def pairwise_uncertainty(self) -> float:
        """U = 2 / (n(n-1)) sum_{i<j} p_ij (1 - p_ij), in [0, 1/4]."""
        if self.n < 2:
            raise InvalidArgumentError("pairwise uncertainty needs at least two items")
        p = self.coclustering()[np.triu_indices(self.n, k=1)]
        return float(np.mean(p * (1.0 - p)))

    def expected_voi_to(self, reference: Partition) -> float:
        if reference.n != self.n:
            raise InvalidArgumentError(f"reference covers {reference.n} items, posterior {self.n}")
        return float(np.dot(self.weights, [voi(a, reference) for a in self.atoms]))


def mixture(posts: Sequence[EmpiricalPartitionPosterior],
            lam: Sequence[float]) -> EmpiricalPartitionPosterior:
    """Weighted mixture sum_k lam_k p_k over the union of supports."""
    posts = list(posts)
    if not posts:
        raise InvalidArgumentError("mixture needs at least one posterior")
    lam = validate_simplex(lam, name="mixture weights")
    if lam.size != len(posts):
        raise InvalidArgumentError(f"{lam.size} mixture weights for {len(posts)} posteriors")
    n = posts[0].n
    samples: List[Partition] = []
    weights: List[float] = []
    for post, lk in zip(posts, lam):
        if post.n != n:
            raise InvalidArgumentError("mixture components cover different item counts")
        samples.extend(post.atoms)
        weights.extend(lk * post.weights)
    return EmpiricalPartitionPosterior.from_samples(samples, weights)


def equal_mixture(posts: Sequence[EmpiricalPartitionPosterior]) -> EmpiricalPartitionPosterior:
    k = len(posts)
    return mixture(posts, np.full(k, 1.0 / k))
