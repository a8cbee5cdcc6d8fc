#!/usr/bin/env python3
"""
Tests for the barycenter weight schemes.
"""

import math
import os
import sys
import unittest

import numpy as np

# Add src to path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from src.core.config import ProjectionKind, WeightKind, WeightSchemeConfig
from src.core.exceptions import DegenerateWeightsError, InvalidArgumentError
from src.partitions.partition import Partition, canonicalize
from src.partitions.posterior import EmpiricalPartitionPosterior
from src.weights.consensus_weights import (compute_lambda, omega_entropy, omega_structured,
                                           project_simplex, structured_terms, weight_record)


def point(*values):
    return EmpiricalPartitionPosterior.point_mass(Partition.from_labels(values))


def random_posterior(rng, n=6, atoms=5):
    parts = list({canonicalize(rng.integers(0, 4, size=n)) for _ in range(atoms)})
    return EmpiricalPartitionPosterior(parts, rng.dirichlet(np.ones(len(parts))))


POWER = WeightSchemeConfig(kind=WeightKind.ENTROPY)


class TestOmega(unittest.TestCase):
    """Raw per-shard weights."""

    def test_entropy_examples(self):
        np.testing.assert_array_equal(omega_entropy([point(0, 0, 0), point(0, 0, 0)]), [0.0, 0.0])
        np.testing.assert_allclose(omega_entropy([point(0, 0, 0, 0), point(0, 1, 2, 3)]),
                                   [0.0, math.log(4)])
        rng = np.random.default_rng(1)
        post = random_posterior(rng)
        omega = omega_entropy([post, post, post])
        self.assertEqual(omega[0], omega[1])
        self.assertEqual(omega[1], omega[2])

    def test_entropy_ignores_sample_duplication(self):
        p, q = Partition.from_labels((0, 0, 1)), Partition.from_labels((0, 1, 2))
        once = EmpiricalPartitionPosterior.from_samples([p, q])
        twice = EmpiricalPartitionPosterior.from_samples([p, q, q, p])
        self.assertAlmostEqual(omega_entropy([once])[0], omega_entropy([twice])[0], places=14)

    def test_structured_trivial_partitions_vanish(self):
        for n in range(2, 9):
            single = point(*([0] * n))
            singletons = point(*range(n))
            omega = omega_structured([single, singletons], a=1.0)
            self.assertAlmostEqual(omega[0], 0.0, places=12)
            self.assertAlmostEqual(omega[1], 0.0, places=12)

    def test_structured_balanced_example(self):
        omega = omega_structured([point(0, 0, 1, 1)], a=1.0)
        self.assertAlmostEqual(omega[0], (8 / 9) * math.exp(-1.0), places=12)
        self.assertAlmostEqual(omega[0], 0.326976, places=6)

    def test_structured_terms_stay_in_range(self):
        rng = np.random.default_rng(42)
        for a in (-1.0, 0.0, 1.0, 10.0):
            for _ in range(30):
                terms = structured_terms(random_posterior(rng), a)
                self.assertGreaterEqual(terms.complexity, 0.0)
                self.assertLessEqual(terms.complexity, 1.0)
                self.assertGreaterEqual(terms.entropy_control, min(1.0, math.exp(-a)) - 1e-12)
                self.assertLessEqual(terms.entropy_control, max(1.0, math.exp(-a)) + 1e-12)
                self.assertGreaterEqual(terms.uncertainty_penalty, 0.0)
                self.assertLessEqual(terms.uncertainty_penalty, 1.0)

    def test_structured_needs_two_items(self):
        with self.assertRaises(InvalidArgumentError):
            omega_structured([point(0)], a=1.0)

    def test_empty_shard_list(self):
        with self.assertRaises(InvalidArgumentError):
            omega_entropy([])
        with self.assertRaises(InvalidArgumentError):
            compute_lambda([], POWER)


class TestProjection(unittest.TestCase):
    """Projection of raw weights onto the simplex."""

    def test_power_examples(self):
        np.testing.assert_allclose(project_simplex([1, 1, 1], POWER), [1 / 3] * 3)
        squared = WeightSchemeConfig(kind=WeightKind.ENTROPY, t=2.0)
        np.testing.assert_allclose(project_simplex([1, 2], squared), [0.2, 0.8])
        np.testing.assert_array_equal(project_simplex([0, 0, 1], POWER), [0.0, 0.0, 1.0])

    def test_power_is_scale_invariant(self):
        rng = np.random.default_rng(9)
        for t in (1.0, 2.0, 5.0):
            scheme = WeightSchemeConfig(kind=WeightKind.ENTROPY, t=t)
            for _ in range(20):
                omega = rng.random(4)
                base = project_simplex(omega, scheme)
                for c in (1e-3, 0.5, 7.0, 1e4):
                    np.testing.assert_allclose(project_simplex(c * omega, scheme), base,
                                               rtol=0, atol=1e-12)

    def test_all_zero_power_is_degenerate(self):
        with self.assertRaises(DegenerateWeightsError):
            project_simplex([0.0, 0.0], POWER)

    def test_negative_omega_rejected(self):
        with self.assertRaises(InvalidArgumentError):
            project_simplex([1.0, -1.0], POWER)

    def test_softmax(self):
        scheme = WeightSchemeConfig(kind=WeightKind.ENTROPY, projection=ProjectionKind.SOFTMAX,
                                    temperature=0.5)
        lam = project_simplex([0.0, math.log(2) / 2], scheme)
        np.testing.assert_allclose(lam, [1 / 3, 2 / 3])
        np.testing.assert_allclose(project_simplex([0.0, 0.0], scheme), [0.5, 0.5])


class TestLambda(unittest.TestCase):
    """End-to-end weight computation per scheme."""

    def test_all_trivial_shards_fall_back_to_uniform(self):
        posts = [point(0, 0, 0), point(0, 1, 2)]
        lam, _ = compute_lambda(posts, WeightSchemeConfig(kind=WeightKind.STRUCTURED))
        np.testing.assert_allclose(lam, [0.5, 0.5])
        lam, omega = compute_lambda([point(0, 0, 0), point(0, 0, 0)], POWER)
        np.testing.assert_array_equal(omega, [0.0, 0.0])
        np.testing.assert_allclose(lam, [0.5, 0.5])

    def test_identical_shards_give_uniform_lambda(self):
        rng = np.random.default_rng(3)
        post = random_posterior(rng)
        for kind in WeightKind:
            lam, _ = compute_lambda([post] * 4, WeightSchemeConfig(kind=kind))
            np.testing.assert_allclose(lam, [0.25] * 4, atol=1e-15)

    def test_entropy_scheme_favours_the_richer_shard(self):
        lam, omega = compute_lambda([point(0, 0, 1, 1), point(0, 1, 2, 3)], POWER)
        np.testing.assert_allclose(omega, [math.log(2), math.log(4)])
        np.testing.assert_allclose(lam, [1 / 3, 2 / 3])

    def test_entropy_control_sign_decides_balanced_against_outlier_shards(self):
        n = 20
        balanced = EmpiricalPartitionPosterior.point_mass(canonicalize([0] * 10 + [1] * 10))
        outlier = EmpiricalPartitionPosterior([canonicalize([0] * n), canonicalize([0] * (n - 1) + [1])],
                                              [0.9, 0.1])
        posts = [balanced] + [outlier] * 9
        lam, _ = compute_lambda(posts, WeightSchemeConfig(kind=WeightKind.STRUCTURED, a=10.0))
        self.assertLess(lam[0], 1e-3)
        lam, omega = compute_lambda(posts, WeightSchemeConfig(kind=WeightKind.STRUCTURED, a=-10.0))
        self.assertGreater(lam[0], 0.999)
        self.assertAlmostEqual(omega[0] / (4 * 18 / 19 ** 2 * math.exp(10.0)), 1.0, places=12)

    def test_weight_record(self):
        posts = [point(0, 0, 1, 1), point(0, 0, 0, 1)]
        record = weight_record(posts, WeightSchemeConfig(kind=WeightKind.STRUCTURED, a=10.0))
        self.assertEqual(set(record), {"scheme", "lambda", "omega", "terms"})
        self.assertEqual(len(record["terms"]), 2)
        self.assertAlmostEqual(sum(record["lambda"]), 1.0, places=12)
        self.assertAlmostEqual(record["terms"][0]["omega"], record["omega"][0], places=15)
        self.assertNotIn("terms", weight_record(posts, WeightSchemeConfig()))


if __name__ == '__main__':
    unittest.main()
