"""
DP mixture of diagonal Gaussians with independent Normal-Gamma priors per dimension.
"""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.core.config import ChainConfig, GaussianDpmConfig
from src.partitions.partition import Partition
from src.samplers.base_sampler import DpmGibbsSampler
from src.utils.validators import validate_data_matrix

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class NormalGammaParams:
    """Normal-Gamma hyperparameters, one entry per (cluster, dimension)."""
    mean: np.ndarray
    kappa: np.ndarray
    shape: np.ndarray
    rate: np.ndarray


@dataclass
class GaussianClusterParams:
    mean: np.ndarray
    precision: np.ndarray


def normal_gamma_posterior(counts: np.ndarray, sums: np.ndarray, sumsq: np.ndarray,
                           prior_mean: np.ndarray, kappa0: float, shape0: float,
                           rate0: np.ndarray) -> NormalGammaParams:
    """
    Conjugate update of a Normal-Gamma prior from per-cluster sufficient statistics.

    Args:
        counts: Cluster sizes n_h, shape (L,)
        sums: Per-cluster column sums, shape (L, d)
        sumsq: Per-cluster column sums of squares, shape (L, d)
        prior_mean: m0, shape (d,)
        kappa0: Mean-precision scale
        shape0: Gamma shape
        rate0: Gamma rate, shape (d,)

    Returns:
        Posterior hyperparameters of shape (L, d)
    """
    n_h = np.asarray(counts, dtype=float)[:, None]
    safe = np.where(n_h > 0, n_h, 1.0)
    xbar = np.where(n_h > 0, sums / safe, prior_mean[None, :])
    ss = np.maximum(sumsq - n_h * xbar ** 2, 0.0)
    kappa_n = kappa0 + n_h
    mean_n = (kappa0 * prior_mean[None, :] + n_h * xbar) / kappa_n
    shape_n = shape0 + n_h / 2.0
    rate_n = rate0[None, :] + ss / 2.0 + kappa0 * n_h * (xbar - prior_mean[None, :]) ** 2 / (2.0 * kappa_n)
    d = sums.shape[1]
    return NormalGammaParams(mean=mean_n, kappa=np.broadcast_to(kappa_n, (n_h.size, d)).copy(),
                             shape=np.broadcast_to(shape_n, (n_h.size, d)).copy(), rate=rate_n)


def sample_normal_gamma(params: NormalGammaParams, rng: np.random.Generator) -> GaussianClusterParams:
    """tau ~ Gamma(shape, rate), mu | tau ~ N(mean, 1 / (kappa tau))."""
    precision = rng.gamma(params.shape, 1.0 / params.rate)
    precision = np.maximum(precision, np.finfo(float).tiny)
    mean = params.mean + rng.standard_normal(params.mean.shape) / np.sqrt(params.kappa * precision)
    return GaussianClusterParams(mean=mean, precision=precision)


class GaussianDpmSampler(DpmGibbsSampler):
    """Blocked Gibbs sampler for the Gaussian kernel."""

    def __init__(self, model_config: GaussianDpmConfig, chain: ChainConfig):
        super().__init__(model_config, chain)
        self.prior_mean: Optional[np.ndarray] = None
        self.rate0: Optional[np.ndarray] = None
        self._sq: Optional[np.ndarray] = None

    def validate_data(self, data) -> np.ndarray:
        return validate_data_matrix(data, name="data", min_rows=1)

    def prepare(self, data: np.ndarray) -> None:
        d = data.shape[1]
        if self.config.prior_mean is None:
            self.prior_mean = data.mean(axis=0)
        else:
            self.prior_mean = np.full(d, float(self.config.prior_mean))
        if self.config.rate is None:
            var = data.var(axis=0)
            self.rate0 = np.where(var > 0, var, 1.0)
        else:
            self.rate0 = np.full(d, float(self.config.rate))
        self._sq = data ** 2

    def posterior_params(self, data: np.ndarray, z: np.ndarray, use_data: bool = True) -> NormalGammaParams:
        L, d = self.truncation, data.shape[1]
        if use_data:
            onehot = self.cluster_onehot(z)
            counts, sums, sumsq = onehot.sum(axis=0), onehot.T @ data, onehot.T @ self._sq
        else:
            counts, sums, sumsq = np.zeros(L), np.zeros((L, d)), np.zeros((L, d))
        return normal_gamma_posterior(counts, sums, sumsq, self.prior_mean,
                                      self.config.mean_precision_scale, self.config.shape, self.rate0)

    def sample_parameters(self, data, z, rng, use_data=True) -> GaussianClusterParams:
        return sample_normal_gamma(self.posterior_params(data, z, use_data), rng)

    def log_likelihood(self, data: np.ndarray, params: GaussianClusterParams) -> np.ndarray:
        tau, mu = params.precision, params.mean
        quad = self._sq @ tau.T - 2.0 * data @ (tau * mu).T + np.sum(tau * mu ** 2, axis=1)[None, :]
        const = 0.5 * np.sum(np.log(tau), axis=1) - 0.5 * data.shape[1] * _LOG_2PI
        return const[None, :] - 0.5 * quad


def gibbs_gaussian_dpm(data, model: Optional[GaussianDpmConfig] = None,
                       chain: Optional[ChainConfig] = None) -> List[Partition]:
    """Kept partitions of a Gaussian DP-mixture chain; deterministic given chain.seed."""
    return GaussianDpmSampler(model or GaussianDpmConfig(), chain or ChainConfig()).sample(data)
