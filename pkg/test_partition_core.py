#!/usr/bin/env python3
"""
Tests for canonical partitions and the information-theoretic partition metrics.
"""

import math
import os
import sys
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

# Add src to path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from src.core.exceptions import InvalidArgumentError
from src.partitions.partition import (Partition, binder, canonicalize, contingency, entropy,
                                      joint_entropy, mutual_information, normalized_entropy,
                                      read_partitions, voi)

labels = st.lists(st.integers(min_value=0, max_value=5), min_size=2, max_size=10)


def P(*values):
    return Partition.from_labels(values)


class TestCanonicalize(unittest.TestCase):
    """Canonical first-occurrence relabeling."""

    def test_relabels_in_first_occurrence_order(self):
        self.assertEqual(canonicalize([2, 2, 5, 2]).labels, (0, 0, 1, 0))
        self.assertEqual(canonicalize([0, 1, 2]).labels, (0, 1, 2))
        self.assertEqual(canonicalize([7, 7, 7]).labels, (0, 0, 0))

    def test_empty_input_rejected(self):
        with self.assertRaises(InvalidArgumentError):
            canonicalize([])

    def test_non_canonical_labels_rejected(self):
        with self.assertRaises(InvalidArgumentError):
            Partition((1, 0))
        with self.assertRaises(InvalidArgumentError):
            Partition((0, 2))

    def test_equal_partitions_hash_equal(self):
        self.assertEqual(P(3, 3, 1), P(0, 0, 9))
        self.assertEqual(len({P(3, 3, 1), P(0, 0, 9), P(1, 0, 0)}), 2)

    @given(labels)
    def test_canonicalize_is_idempotent(self, raw):
        once = canonicalize(raw)
        self.assertEqual(canonicalize(once.labels), once)
        self.assertEqual(set(once.labels), set(range(once.n_clusters)))

    def test_read_partitions(self):
        parts = read_partitions(["2,2,5\n", "\n", "0,1,1\n"])
        self.assertEqual(parts, (P(0, 0, 1), P(0, 1, 1)))
        with self.assertRaises(InvalidArgumentError):
            read_partitions(["0,a,1"])


class TestEntropyAndInformation(unittest.TestCase):
    """Entropy, mutual information and contingency counts."""

    def test_entropy_examples(self):
        self.assertEqual(entropy(P(0, 0, 0)), 0.0)
        self.assertAlmostEqual(entropy(P(0, 0, 1, 1)), math.log(2), places=12)
        self.assertEqual(entropy(P(0, 1, 2, 3)), math.log(4))

    def test_contingency_marginals(self):
        table = contingency(P(0, 0, 1, 1, 1), P(0, 1, 0, 1, 1))
        self.assertEqual(int(table.counts.sum()), 5)
        np.testing.assert_allclose(table.row_marginal, [0.4, 0.6])
        np.testing.assert_allclose(table.col_marginal, [0.4, 0.6])
        np.testing.assert_allclose(table.joint.sum(), 1.0)

    def test_mutual_information_examples(self):
        self.assertAlmostEqual(mutual_information(P(0, 0, 1, 1), P(0, 1, 0, 1)), 0.0, places=12)
        self.assertAlmostEqual(mutual_information(P(0, 0, 1, 1), P(0, 0, 1, 1)), math.log(2), places=12)
        self.assertAlmostEqual(mutual_information(P(0, 0, 0), P(0, 0, 1)), 0.0, places=12)

    def test_mismatched_n_rejected(self):
        for fn in (mutual_information, voi, binder, joint_entropy):
            with self.assertRaises(InvalidArgumentError):
                fn(P(0, 0), P(0, 0, 1))

    def test_normalized_entropy_examples(self):
        self.assertEqual(normalized_entropy(P(0, 0, 0)), 0.0)
        self.assertAlmostEqual(normalized_entropy(P(0, 0, 1, 1)), 1.0, places=12)
        self.assertAlmostEqual(normalized_entropy(P(0, 0, 0, 1)), 0.811278, places=6)

    @given(labels, labels)
    def test_mutual_information_bounds(self, a, b):
        n = min(len(a), len(b))
        p1, p2 = canonicalize(a[:n]), canonicalize(b[:n])
        mi = mutual_information(p1, p2)
        self.assertGreaterEqual(mi, 0.0)
        self.assertLessEqual(mi, min(entropy(p1), entropy(p2)) + 1e-12)

    @given(labels)
    def test_entropy_range(self, raw):
        p = canonicalize(raw)
        self.assertGreaterEqual(entropy(p), 0.0)
        self.assertLessEqual(entropy(p), math.log(p.n) + 1e-12)


class TestDistances(unittest.TestCase):
    """VoI and Binder distances."""

    def test_voi_examples(self):
        self.assertEqual(voi(P(0, 1, 1), P(0, 1, 1)), 0.0)
        self.assertAlmostEqual(voi(P(0, 0, 1, 1), P(0, 1, 0, 1)), 2 * math.log(2), places=12)
        expected = (2 / 3) * math.log(3 / 2) + (1 / 3) * math.log(3)
        self.assertAlmostEqual(voi(P(0, 0, 0), P(0, 0, 1)), expected, places=12)
        self.assertAlmostEqual(expected, 0.636514, places=6)

    def test_binder_examples(self):
        self.assertEqual(binder(P(0, 1, 0), P(0, 1, 0)), 0.0)
        self.assertEqual(binder(P(0, 0), P(0, 1)), 1.0)
        self.assertAlmostEqual(binder(P(0, 0, 1, 1), P(0, 1, 0, 1)), 4 / 6, places=12)

    def test_voi_metric_axioms_on_random_triples(self):
        rng = np.random.default_rng(20240501)
        for _ in range(1000):
            n = int(rng.integers(2, 11))
            p1, p2, p3 = (canonicalize(rng.integers(0, n, size=n)) for _ in range(3))
            self.assertEqual(voi(p1, p2), voi(p2, p1))
            self.assertEqual(voi(p1, p1), 0.0)
            if p1 != p2:
                self.assertGreater(voi(p1, p2), 0.0)
            self.assertLessEqual(voi(p1, p3), voi(p1, p2) + voi(p2, p3) + 1e-12)

    @settings(max_examples=200)
    @given(labels, labels, st.randoms(use_true_random=False))
    def test_relabeling_invariance(self, a, b, rnd):
        n = min(len(a), len(b))
        a, b = a[:n], b[:n]
        ids = list(range(6))
        rnd.shuffle(ids)
        relabeled = [ids[v] + 10 for v in a]
        p1, p2 = canonicalize(a), canonicalize(b)
        q1 = canonicalize(relabeled)
        self.assertEqual(entropy(q1), entropy(p1))
        self.assertEqual(voi(q1, p2), voi(p1, p2))
        self.assertEqual(binder(q1, p2), binder(p1, p2))
        self.assertEqual(mutual_information(q1, p2), mutual_information(p1, p2))


if __name__ == '__main__':
    unittest.main()
