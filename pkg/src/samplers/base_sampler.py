"""
Base class for truncated stick-breaking Dirichlet-process mixture samplers.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, List, Optional

import numpy as np
from loguru import logger
from scipy.special import logsumexp

from src.core.config import ChainConfig
from src.partitions.partition import Partition, canonicalize


@dataclass
class ChainTrace:
    """Kept draws of one chain: canonical partitions and stick proportions."""
    partitions: List[Partition] = field(default_factory=list)
    sticks: List[np.ndarray] = field(default_factory=list)
    seed: Optional[int] = None

    def stick_matrix(self) -> np.ndarray:
        return np.vstack(self.sticks) if self.sticks else np.empty((0, 0))


class DpmGibbsSampler(ABC):
    """Blocked Gibbs sampler for a DP mixture under stick-breaking truncation.

    One sweep updates (i) the cluster parameters from their conjugate
    posteriors, (ii) the stick proportions, (iii) the assignments. The
    kernel-specific pieces are the data check, the parameter draw and the
    per-cluster log-likelihood.
    """

    def __init__(self, model_config, chain: ChainConfig):
        self.config = model_config
        self.chain = chain
        self.truncation = model_config.truncation
        self.concentration = model_config.concentration

    @abstractmethod
    def validate_data(self, data) -> np.ndarray:
        """Check and convert the input matrix."""
        pass

    @abstractmethod
    def prepare(self, data: np.ndarray) -> None:
        """Resolve data-dependent hyperparameters and cache sufficient statistics."""
        pass

    @abstractmethod
    def sample_parameters(self, data: np.ndarray, z: np.ndarray,
                          rng: np.random.Generator, use_data: bool = True) -> Any:
        """Draw every cluster's parameters given the assignments."""
        pass

    @abstractmethod
    def log_likelihood(self, data: np.ndarray, params: Any) -> np.ndarray:
        """n x L matrix of log p(x_i | parameters of cluster h), up to a row constant."""
        pass

    def cluster_onehot(self, z: np.ndarray) -> np.ndarray:
        return (z[:, None] == np.arange(self.truncation)[None, :]).astype(float)

    def sample_sticks(self, z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """V_h ~ Beta(1 + n_h, alpha + sum_{l>h} n_l) for h < L-1, V_{L-1} = 1."""
        counts = np.bincount(z, minlength=self.truncation).astype(float)
        tail = np.cumsum(counts[::-1])[::-1]
        after = np.append(tail[1:], 0.0)
        v = rng.beta(1.0 + counts[:-1], self.concentration + after[:-1])
        return np.append(v, 1.0)

    @staticmethod
    def log_stick_weights(v: np.ndarray) -> np.ndarray:
        """log w_h = log V_h + sum_{l<h} log(1 - V_l)."""
        with np.errstate(divide="ignore"):
            log_v = np.log(v)
            log_rest = np.log1p(-v[:-1])
        return log_v + np.concatenate(([0.0], np.cumsum(log_rest)))

    def sample_assignments(self, log_w: np.ndarray, loglik: Optional[np.ndarray], n: int,
                           rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF draw of z_i from the categorical full conditional."""
        logits = np.broadcast_to(log_w, (n, self.truncation)) if loglik is None else loglik + log_w[None, :]
        log_norm = logsumexp(logits, axis=1, keepdims=True)
        cdf = np.cumsum(np.exp(logits - log_norm), axis=1)
        u = rng.random(n)[:, None]
        z = np.sum(u > cdf, axis=1)
        return np.minimum(z, self.truncation - 1)

    def run(self, data, seed: Optional[int] = None) -> ChainTrace:
        """
        Run the chain and keep draws at iterations burn_in, burn_in + thin, ...

        Args:
            data: n x d data matrix
            seed: RNG seed, defaults to the chain config seed

        Returns:
            ChainTrace with the kept partitions and stick proportions
        """
        x = self.validate_data(data)
        n = x.shape[0]
        seed = self.chain.seed if seed is None else seed
        rng = np.random.default_rng(seed)
        use_data = not self.chain.prior_only
        self.prepare(x)

        trace = ChainTrace(seed=seed)
        z = rng.integers(0, min(self.truncation, n), size=n)
        keep = set(range(self.chain.burn_in, self.chain.total_iters, self.chain.thin))
        for it in range(self.chain.total_iters):
            params = self.sample_parameters(x, z, rng, use_data=use_data)
            v = self.sample_sticks(z, rng)
            loglik = self.log_likelihood(x, params) if use_data else None
            z = self.sample_assignments(self.log_stick_weights(v), loglik, n, rng)
            if it in keep:
                trace.partitions.append(canonicalize(z))
                trace.sticks.append(v)
            if (it + 1) % 500 == 0:
                logger.debug(f"{type(self).__name__} iteration {it + 1}/{self.chain.total_iters}: "
                             f"{len(np.unique(z))} occupied clusters")
        return trace

    def sample(self, data, seed: Optional[int] = None) -> List[Partition]:
        return self.run(data, seed).partitions
