"""
Barycenter weight schemes: uniform, expected-entropy and the structured
three-factor scheme (cluster complexity x entropy control x uncertainty).
"""
import math
from dataclasses import asdict, dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.special import softmax

from src.core.config import ProjectionKind, WeightKind, WeightSchemeConfig
from src.core.exceptions import DegenerateWeightsError, InvalidArgumentError
from src.partitions.partition import entropy, normalized_entropy
from src.partitions.posterior import EmpiricalPartitionPosterior

WeightScheme = WeightSchemeConfig


@dataclass(frozen=True)
class StructuredTerms:
    """The three factors of the structured weight for one shard."""
    complexity: float
    entropy_control: float
    uncertainty_penalty: float

    @property
    def omega(self) -> float:
        return self.complexity * self.entropy_control * self.uncertainty_penalty

    def to_dict(self) -> Dict[str, float]:
        out = asdict(self)
        out["omega"] = self.omega
        return out


def omega_entropy(posts: Sequence[EmpiricalPartitionPosterior]) -> np.ndarray:
    """omega_k = E[H(z) | X^(k)]."""
    if not posts:
        raise InvalidArgumentError("need at least one shard posterior")
    return np.array([post.expected_entropy() for post in posts], dtype=float)


def structured_terms(post: EmpiricalPartitionPosterior, a: float) -> StructuredTerms:
    """
    Terms (I), (II), (III) of the structured weight for one posterior.

    The cluster-complexity term uses the partition perplexity exp(H(z)),
    which ranges over [1, n]; entropy control uses the nonnegative
    normalized entropy H(z) / log(#clusters).
    """
    n = post.n
    if n < 2:
        raise InvalidArgumentError("structured weights need at least two items")
    complexity = 0.0
    control = 0.0
    for atom, w in zip(post.atoms, post.weights):
        perplexity = math.exp(entropy(atom))
        term = 4.0 * (perplexity - 1.0) * (n - perplexity) / (n - 1) ** 2
        complexity += w * min(max(term, 0.0), 1.0)
        control += w * math.exp(-a * normalized_entropy(atom))
    penalty = min(max(1.0 - 4.0 * post.pairwise_uncertainty(), 0.0), 1.0)
    return StructuredTerms(complexity=float(complexity), entropy_control=float(control),
                           uncertainty_penalty=float(penalty))


def omega_structured(posts: Sequence[EmpiricalPartitionPosterior], a: float = 1.0) -> np.ndarray:
    if not posts:
        raise InvalidArgumentError("need at least one shard posterior")
    return np.array([structured_terms(post, a).omega for post in posts], dtype=float)


def project_simplex(omega: Sequence[float], scheme: WeightScheme) -> np.ndarray:
    """Power-t normalization omega^t / sum omega^t, or softmax(omega / temperature)."""
    w = np.asarray(omega, dtype=float)
    if w.ndim != 1 or w.size == 0 or not np.all(np.isfinite(w)):
        raise InvalidArgumentError("omega must be a nonempty finite vector")
    if scheme.projection == ProjectionKind.SOFTMAX:
        return softmax(w / scheme.temperature)
    if np.any(w < 0):
        raise InvalidArgumentError("power projection needs nonnegative omega")
    top = w.max()
    if top <= 0:
        raise DegenerateWeightsError("all weights are zero; power projection is undefined")
    powered = (w / top) ** scheme.t
    return powered / powered.sum()


def compute_omega(posts: Sequence[EmpiricalPartitionPosterior], scheme: WeightScheme) -> np.ndarray:
    if scheme.kind == WeightKind.ENTROPY:
        return omega_entropy(posts)
    if scheme.kind == WeightKind.STRUCTURED:
        return omega_structured(posts, scheme.a)
    return np.ones(len(posts))


def compute_lambda(posts: Sequence[EmpiricalPartitionPosterior],
                   scheme: WeightScheme) -> Tuple[np.ndarray, np.ndarray]:
    """
    Barycenter weights for the given scheme.

    Returns:
        (lambda, omega); lambda falls back to uniform when every omega is zero
    """
    k = len(posts)
    if k == 0:
        raise InvalidArgumentError("need at least one shard posterior")
    omega = compute_omega(posts, scheme)
    if scheme.kind == WeightKind.UNIFORM:
        return np.full(k, 1.0 / k), omega
    try:
        lam = project_simplex(omega, scheme)
    except DegenerateWeightsError:
        logger.warning(f"All {scheme.kind.value} weights are zero; falling back to uniform weights")
        lam = np.full(k, 1.0 / k)
    return lam, omega


def weight_record(posts: Sequence[EmpiricalPartitionPosterior], scheme: WeightScheme) -> Dict:
    """JSON-ready record of lambda, omega and (structured) per-shard terms."""
    lam, omega = compute_lambda(posts, scheme)
    record = {
        "scheme": scheme.model_dump(mode="json"),
        "lambda": [float(v) for v in lam],
        "omega": [float(v) for v in omega],
    }
    if scheme.kind == WeightKind.STRUCTURED:
        record["terms"] = [structured_terms(p, scheme.a).to_dict() for p in posts]
    return record
