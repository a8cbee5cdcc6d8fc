"""
DP mixture of Poisson kernels X_id ~ Poisson(N_i theta_hd) with Gamma(a, b) rates,
where N_i is the row total (sequencing depth).
"""
from typing import List, Optional

import numpy as np

from src.core.config import ChainConfig, PoissonDpmConfig
from src.partitions.partition import Partition
from src.samplers.base_sampler import DpmGibbsSampler
from src.utils.validators import validate_count_matrix

_TINY = np.finfo(float).tiny


class PoissonDpmSampler(DpmGibbsSampler):
    """Blocked Gibbs sampler for the Poisson-Gamma kernel."""

    def __init__(self, model_config: PoissonDpmConfig, chain: ChainConfig):
        super().__init__(model_config, chain)
        self.depth: Optional[np.ndarray] = None

    def validate_data(self, data) -> np.ndarray:
        return validate_count_matrix(data, name="counts").astype(float)

    def prepare(self, data: np.ndarray) -> None:
        self.depth = data.sum(axis=1)

    def gamma_posterior(self, data: np.ndarray, z: np.ndarray, use_data: bool = True):
        """Shape a + sum X_id and rate b + sum N_i over each cluster's rows."""
        L, d = self.truncation, data.shape[1]
        if use_data:
            onehot = self.cluster_onehot(z)
            sums, depth = onehot.T @ data, onehot.T @ self.depth
        else:
            sums, depth = np.zeros((L, d)), np.zeros(L)
        return self.config.a + sums, self.config.b + depth

    def sample_parameters(self, data, z, rng, use_data=True) -> np.ndarray:
        shape, rate = self.gamma_posterior(data, z, use_data)
        theta = rng.gamma(shape, 1.0 / rate[:, None])
        return np.maximum(theta, _TINY)

    def log_likelihood(self, data: np.ndarray, theta: np.ndarray) -> np.ndarray:
        # terms constant in h (log N_i, log X_id!) are dropped
        return data @ np.log(theta).T - self.depth[:, None] * theta.sum(axis=1)[None, :]


def gibbs_poisson_dpm(counts, model: Optional[PoissonDpmConfig] = None,
                      chain: Optional[ChainConfig] = None) -> List[Partition]:
    """Kept partitions of a Poisson DP-mixture chain; deterministic given chain.seed."""
    return PoissonDpmSampler(model or PoissonDpmConfig(), chain or ChainConfig()).sample(counts)
