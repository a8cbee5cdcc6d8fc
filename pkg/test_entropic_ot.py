#!/usr/bin/env python3
"""
Tests for cost matrices, Sinkhorn and the exact assignment oracle.
"""

import itertools
import math
import os
import sys
import unittest

import numpy as np

# Add src to path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from src.core.config import MetricType
from src.core.exceptions import ConvergenceError, InvalidArgumentError
from src.partitions.partition import Partition, binder, canonicalize, voi
from src.partitions.posterior import EmpiricalPartitionPosterior
from src.transport.entropic_ot import (cost_matrix, exact_ot_assignment, posterior_distance,
                                       sinkhorn)


ORACLE_MAX_ITER = 200000
ORACLE_TOL = 1e-6


def P(*values):
    return Partition.from_labels(values)


def distinct_partitions(rng, m, n=6):
    out = []
    while len(out) < m:
        p = canonicalize(rng.integers(0, 4, size=n))
        if p not in out:
            out.append(p)
    return out


class TestCostMatrix(unittest.TestCase):
    """Ground-metric matrices between supports."""

    def test_examples(self):
        p = P(0, 1, 1)
        np.testing.assert_array_equal(cost_matrix([p], [p]).values, [[0.0]])
        M = cost_matrix([P(0, 0, 1, 1)], [P(0, 1, 0, 1)]).values
        self.assertAlmostEqual(M[0, 0], 2 * math.log(2), places=12)

    def test_identical_supports_are_symmetric_with_zero_diagonal(self):
        support = [P(0, 0, 1), P(0, 1, 1), P(0, 1, 2)]
        M = cost_matrix(support, support).values
        np.testing.assert_array_equal(M, M.T)
        np.testing.assert_array_equal(np.diag(M), np.zeros(3))

    def test_matches_pairwise_metrics(self):
        rng = np.random.default_rng(17)
        a, b = distinct_partitions(rng, 7), distinct_partitions(rng, 5)
        for metric, fn in ((MetricType.VOI, voi), (MetricType.BINDER, binder)):
            M = cost_matrix(a, b, metric).values
            expected = np.array([[fn(x, y) for y in b] for x in a])
            np.testing.assert_allclose(M, expected, rtol=0, atol=1e-12)

    def test_mismatched_n(self):
        with self.assertRaises(InvalidArgumentError):
            cost_matrix([P(0, 0)], [P(0, 0, 1)])


class TestSinkhorn(unittest.TestCase):
    """Entropic OT solver."""

    def test_forced_couplings(self):
        plan, value = sinkhorn([1.0], [1.0], np.array([[0.0]]), epsilon=0.1)
        np.testing.assert_allclose(plan.values, [[1.0]])
        self.assertEqual(value, 0.0)
        plan, value = sinkhorn([1.0], [1.0], np.array([[0.7]]), epsilon=0.1)
        self.assertAlmostEqual(value, 0.7, places=12)

    def test_small_epsilon_recovers_identity_plan(self):
        M = np.array([[0.0, 1.0], [1.0, 0.0]])
        plan, value = sinkhorn([0.5, 0.5], [0.5, 0.5], M, epsilon=0.01)
        perm, exact = exact_ot_assignment([P(0, 0), P(0, 1)], [P(0, 0), P(0, 1)], M)
        self.assertEqual(exact, 0.0)
        self.assertLess(abs(plan.transport_cost - exact), 5e-3)
        np.testing.assert_allclose(plan.values, np.eye(2) / 2, atol=1e-3)
        self.assertTrue(plan.log_domain)
        # objective = cost - eps * H; H is close to log 2 here
        self.assertAlmostEqual(value, plan.transport_cost - 0.01 * plan.entropy, places=15)

    def test_marginals_are_feasible(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            a, b = rng.dirichlet(np.ones(6)), rng.dirichlet(np.ones(4))
            M = rng.random((6, 4)) * 3
            plan, _ = sinkhorn(a, b, M, epsilon=0.1)
            self.assertLessEqual(plan.marginal_residual(), 1e-9)
            self.assertAlmostEqual(plan.mass, 1.0, places=9)

    def test_zero_weight_atoms(self):
        M = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0]])
        plan, _ = sinkhorn([1.0, 0.0], [0.5, 0.0, 0.5], M, epsilon=0.2)
        np.testing.assert_array_equal(plan.values[1], [0.0, 0.0, 0.0])
        np.testing.assert_array_equal(plan.values[:, 1], [0.0, 0.0])
        np.testing.assert_allclose(plan.values[0], [0.5, 0.0, 0.5], atol=1e-9)

    def test_transport_cost_increases_with_epsilon(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            a, b = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
            support_a, support_b = distinct_partitions(rng, 5), distinct_partitions(rng, 5)
            M = cost_matrix(support_a, support_b)
            costs = [sinkhorn(a, b, M, epsilon=eps, max_iter=100000, tol=1e-8)[0].transport_cost
                     for eps in (0.01, 0.05, 0.1, 0.5)]
            for lo, hi in zip(costs, costs[1:]):
                self.assertLessEqual(lo, hi + 1e-6)

    def test_symmetry(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            a, b = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(4))
            M = rng.random((5, 4))
            _, forward = sinkhorn(a, b, M, epsilon=0.5, tol=1e-12)
            _, backward = sinkhorn(b, a, M.T, epsilon=0.5, tol=1e-12)
            self.assertAlmostEqual(forward, backward, delta=1e-9)

    def test_log_domain_agrees_with_plain(self):
        rng = np.random.default_rng(4)
        a, b = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
        M = rng.random((4, 4))
        plain, v1 = sinkhorn(a, b, M, epsilon=0.2, tol=1e-12, log_domain=False)
        logd, v2 = sinkhorn(a, b, M, epsilon=0.2, tol=1e-12, log_domain=True)
        self.assertFalse(plain.log_domain)
        self.assertTrue(logd.log_domain)
        self.assertAlmostEqual(v1, v2, delta=1e-9)
        np.testing.assert_allclose(plain.values, logd.values, atol=1e-9)

    def test_non_convergence_raises_with_residual(self):
        rng = np.random.default_rng(6)
        a, b = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
        with self.assertRaises(ConvergenceError) as ctx:
            sinkhorn(a, b, rng.random((5, 5)), epsilon=0.5, max_iter=1, tol=1e-15, log_domain=False)
        self.assertGreater(ctx.exception.residual, 0.0)
        self.assertEqual(ctx.exception.iterations, 1)

    def test_invalid_arguments(self):
        M = np.zeros((2, 2))
        with self.assertRaises(InvalidArgumentError):
            sinkhorn([0.5, 0.5], [0.5, 0.5], M, epsilon=0.0)
        with self.assertRaises(InvalidArgumentError):
            sinkhorn([0.5, 0.6], [0.5, 0.5], M, epsilon=0.1)
        with self.assertRaises(InvalidArgumentError):
            sinkhorn([1.0], [0.5, 0.5], M, epsilon=0.1)


class TestExactAssignment(unittest.TestCase):
    """Assignment oracle for uniform equal-size measures."""

    def test_identical_supports(self):
        support = [P(0, 0, 1), P(0, 1, 1), P(0, 1, 2)]
        perm, value = exact_ot_assignment(support, support)
        self.assertEqual(perm, (0, 1, 2))
        self.assertEqual(value, 0.0)

    def test_single_pairing(self):
        perm, value = exact_ot_assignment([P(0, 0, 1, 1)], [P(0, 1, 0, 1)])
        self.assertEqual(perm, (0,))
        self.assertAlmostEqual(value, 2 * math.log(2), places=12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            a, b = distinct_partitions(rng, 3), distinct_partitions(rng, 3)
            M = cost_matrix(a, b).values
            brute = min(sum(M[i, perm[i]] for i in range(3)) / 3
                        for perm in itertools.permutations(range(3)))
            _, value = exact_ot_assignment(a, b, M)
            self.assertAlmostEqual(value, brute, places=12)

    def test_unequal_sizes(self):
        with self.assertRaises(InvalidArgumentError):
            exact_ot_assignment([P(0, 0)], [P(0, 0), P(0, 1)])

    def test_small_epsilon_matches_assignment(self):
        # eps=1e-3 needs more than the default budget on some instances
        rng = np.random.default_rng(21)
        for instance in range(100):
            m = int(rng.integers(2, 9))
            a, b = distinct_partitions(rng, m), distinct_partitions(rng, m)
            M = cost_matrix(a, b).values
            uniform = np.full(m, 1.0 / m)
            plan, _ = sinkhorn(uniform, uniform, M, epsilon=1e-3, max_iter=ORACLE_MAX_ITER, tol=ORACLE_TOL)
            _, exact = exact_ot_assignment(a, b, M)
            with self.subTest(instance=instance, m=m):
                self.assertLessEqual(abs(plan.transport_cost - exact), 0.02 * M.max() + 1e-12)


class TestPosteriorDistance(unittest.TestCase):
    """Distances between empirical posteriors."""

    def test_point_masses(self):
        p, q = P(0, 0, 1, 1), P(0, 1, 0, 1)
        plan = posterior_distance(EmpiricalPartitionPosterior.point_mass(p),
                                  EmpiricalPartitionPosterior.point_mass(q), epsilon=0.05)
        self.assertAlmostEqual(plan.transport_cost, 2 * math.log(2), places=12)
        self.assertAlmostEqual(plan.objective, 2 * math.log(2), places=12)

    def test_mismatched_n(self):
        with self.assertRaises(InvalidArgumentError):
            posterior_distance(EmpiricalPartitionPosterior.point_mass(P(0, 0)),
                               EmpiricalPartitionPosterior.point_mass(P(0, 0, 1)), epsilon=0.05)


if __name__ == '__main__':
    unittest.main()
