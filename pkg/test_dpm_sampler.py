#!/usr/bin/env python3
"""
Tests for the truncated DP-mixture Gibbs samplers.
"""

import os
import sys
import unittest

import numpy as np

# Add src to path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from src.core.config import ChainConfig, GaussianDpmConfig, PoissonDpmConfig
from src.core.exceptions import InvalidArgumentError
from src.data.fixtures import separated_gaussians
from src.partitions.partition import Partition
from src.partitions.posterior import EmpiricalPartitionPosterior
from src.samplers.gaussian_dpm import GaussianDpmSampler, gibbs_gaussian_dpm, normal_gamma_posterior
from src.samplers.poisson_dpm import PoissonDpmSampler, gibbs_poisson_dpm

SHORT = ChainConfig(total_iters=300, burn_in=100, thin=1)


def within_and_across(partitions, truth):
    """Mean co-clustering over same-group pairs and over different-group pairs."""
    p = EmpiricalPartitionPosterior.from_samples(partitions).coclustering()
    labels = truth.as_array()
    same = labels[:, None] == labels[None, :]
    off = ~np.eye(len(labels), dtype=bool)
    return float(p[same & off].mean()), float(p[~same].mean())


def two_group_counts(seed, n=40, d=20, high=20.0, low=1.0):
    rng = np.random.default_rng(seed)
    labels = np.repeat([0, 1], n // 2)
    rates = np.full((n, d), low)
    rates[labels == 0, : d // 2] = high
    rates[labels == 1, d // 2:] = high
    counts = rng.poisson(rates)
    counts[counts.sum(axis=1) == 0, 0] = 1
    return counts, Partition.from_labels(labels)


def batch_se(values, batches=20):
    means = np.array([b.mean() for b in np.array_split(np.asarray(values), batches)])
    return float(means.std(ddof=1) / np.sqrt(batches))


class TestGaussianDpm(unittest.TestCase):
    """Gaussian kernel."""

    def test_separates_well_separated_clusters(self):
        for seed in range(5):
            data, truth = separated_gaussians(n=40, seed=seed)
            chain = ChainConfig(total_iters=300, burn_in=100, seed=seed)
            within, across = within_and_across(gibbs_gaussian_dpm(data, chain=chain), truth)
            self.assertGreater(within, 0.9)
            self.assertLess(across, 0.1)

    def test_identical_points_share_a_cluster(self):
        data = np.array([[1.5], [1.5]])
        model = GaussianDpmConfig(concentration=0.1)
        samples = gibbs_gaussian_dpm(data, model, ChainConfig(total_iters=1000, burn_in=200, seed=4))
        single = sum(p == Partition((0, 0)) for p in samples)
        self.assertGreater(single, len(samples) / 2)

    def test_deterministic_given_seed(self):
        data, _ = separated_gaussians(n=20, seed=1)
        first = gibbs_gaussian_dpm(data, chain=ChainConfig(total_iters=60, burn_in=10, seed=9))
        second = gibbs_gaussian_dpm(data, chain=ChainConfig(total_iters=60, burn_in=10, seed=9))
        self.assertEqual(first, second)
        sampler = GaussianDpmSampler(GaussianDpmConfig(), SHORT)
        self.assertEqual(sampler.sample(data, seed=3), sampler.sample(data, seed=3))

    def test_kept_draw_count_and_truncation(self):
        rng = np.random.default_rng(0)
        data = rng.normal(size=(30, 2)) * 5
        chain = ChainConfig(total_iters=50, burn_in=10, thin=4, seed=2)
        samples = gibbs_gaussian_dpm(data, GaussianDpmConfig(truncation=3), chain)
        self.assertEqual(len(samples), chain.n_kept)
        self.assertEqual(len(samples), 10)
        self.assertTrue(all(p.n_clusters <= 3 for p in samples))
        self.assertTrue(all(p.n == 30 for p in samples))

    def test_non_finite_data_rejected(self):
        with self.assertRaises(InvalidArgumentError):
            gibbs_gaussian_dpm(np.array([[0.0], [np.nan]]), chain=SHORT)

    def test_conjugate_update_matches_closed_form(self):
        rng = np.random.default_rng(12)
        data = np.concatenate([rng.normal(-2, 1, 15), rng.normal(3, 0.5, 10)])[:, None]
        z = np.repeat([0, 1], [15, 10])
        sampler = GaussianDpmSampler(GaussianDpmConfig(truncation=4), SHORT)
        sampler.prepare(data)
        post = sampler.posterior_params(data, z)
        draws = 10000
        precisions = np.empty((draws, 4))
        means = np.empty((draws, 4))
        for i in range(draws):
            params = sampler.sample_parameters(data, z, rng)
            precisions[i] = params.precision[:, 0]
            means[i] = params.mean[:, 0]
        for h in (0, 1):
            shape, rate = post.shape[h, 0], post.rate[h, 0]
            tau_mean, tau_sd = shape / rate, np.sqrt(shape) / rate
            self.assertLess(abs(precisions[:, h].mean() - tau_mean), 3 * tau_sd / np.sqrt(draws))
            # marginal of mu is Student-t with 2 * shape degrees of freedom
            mu_sd = np.sqrt(rate / (post.kappa[h, 0] * (shape - 1)))
            self.assertLess(abs(means[:, h].mean() - post.mean[h, 0]), 3 * mu_sd / np.sqrt(draws))

    def test_normal_gamma_posterior_empty_cluster_is_prior(self):
        post = normal_gamma_posterior(np.array([0.0]), np.zeros((1, 2)), np.zeros((1, 2)),
                                      np.array([1.0, -1.0]), 0.01, 2.0, np.array([3.0, 4.0]))
        np.testing.assert_allclose(post.mean, [[1.0, -1.0]])
        np.testing.assert_allclose(post.kappa, [[0.01, 0.01]])
        np.testing.assert_allclose(post.shape, [[2.0, 2.0]])
        np.testing.assert_allclose(post.rate, [[3.0, 4.0]])

    def test_prior_only_sticks_match_stick_breaking_prior(self):
        data = np.zeros((3, 1))
        model = GaussianDpmConfig(truncation=10, concentration=1.0)
        chain = ChainConfig(total_iters=21000, burn_in=1000, thin=5, prior_only=True, seed=5)
        trace = GaussianDpmSampler(model, chain).run(data)
        sticks = trace.stick_matrix()
        self.assertEqual(sticks.shape, (4000, 10))
        np.testing.assert_array_equal(sticks[:, -1], np.ones(4000))
        for h in (0, 1):
            self.assertLess(abs(sticks[:, h].mean() - 1.0 / (1.0 + model.concentration)),
                            3 * batch_se(sticks[:, h]))


class TestPoissonDpm(unittest.TestCase):
    """Poisson kernel with sequencing depth."""

    def test_recovers_planted_groups(self):
        for seed in range(5):
            counts, truth = two_group_counts(seed)
            chain = ChainConfig(total_iters=200, burn_in=50, seed=seed)
            within, _ = within_and_across(gibbs_poisson_dpm(counts, chain=chain), truth)
            self.assertGreater(within, 0.9)

    def test_single_row(self):
        samples = gibbs_poisson_dpm(np.array([[3, 0, 1]]), chain=SHORT)
        self.assertEqual(len(samples), SHORT.n_kept)
        self.assertTrue(all(p == Partition((0,)) for p in samples))

    def test_deterministic_given_seed(self):
        counts, _ = two_group_counts(0, n=12, d=6)
        chain = ChainConfig(total_iters=40, burn_in=5, seed=21)
        self.assertEqual(gibbs_poisson_dpm(counts, chain=chain), gibbs_poisson_dpm(counts, chain=chain))

    def test_zero_row_is_named(self):
        with self.assertRaisesRegex(InvalidArgumentError, "row 1"):
            gibbs_poisson_dpm(np.array([[1, 2], [0, 0], [3, 1]]), chain=SHORT)

    def test_rejects_non_integer_counts(self):
        with self.assertRaises(InvalidArgumentError):
            gibbs_poisson_dpm(np.array([[1.5, 2.0]]), chain=SHORT)

    def test_conjugate_update_matches_closed_form(self):
        rng = np.random.default_rng(3)
        counts, _ = two_group_counts(1, n=10, d=4)
        z = np.repeat([0, 1], 5)
        sampler = PoissonDpmSampler(PoissonDpmConfig(truncation=3, a=2.0, b=0.5), SHORT)
        data = counts.astype(float)
        sampler.prepare(data)
        shape, rate = sampler.gamma_posterior(data, z)
        np.testing.assert_allclose(shape[0], 2.0 + data[:5].sum(axis=0))
        self.assertAlmostEqual(rate[1], 0.5 + data[5:].sum(), places=9)
        self.assertAlmostEqual(rate[2], 0.5, places=12)
        draws = np.array([sampler.sample_parameters(data, z, rng) for _ in range(10000)])
        expected = shape / rate[:, None]
        sd = np.sqrt(shape) / rate[:, None]
        np.testing.assert_array_less(np.abs(draws.mean(axis=0) - expected), 3 * sd / np.sqrt(10000))


if __name__ == '__main__':
    unittest.main()
