#!/usr/bin/env python3

"""Tests for the statistics helpers."""

import itertools
import logging
import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.abspath(__file__), "..", "..")))

# pylint: disable=wrong-import-position
from simple_behavior.config import RunConfig
from simple_behavior.exceptions import ValidationException
from simple_behavior.stats import (
    RankSumMethod,
    StatsClient,
    descriptive,
    wald_ci_halfwidth,
    wilcoxon_rank_sum,
)


def enumerated_p(first_size: int, second_size: int, statistic: float) -> float:
    """Get the exact two-sided p-value by listing every rank assignment."""
    total = first_size + second_size
    sums = [sum(ranks) for ranks in itertools.combinations(range(1, total + 1), first_size)]
    lower = sum(1 for value in sums if value <= statistic) / len(sums)
    upper = sum(1 for value in sums if value >= statistic) / len(sums)
    return min(1.0, 2.0 * min(lower, upper))


class RankSumTests(unittest.TestCase):
    """Test the Wilcoxon rank sum test."""

    def test_small_exact(self) -> None:
        """Test the exact p-value of two separated pairs."""
        result = wilcoxon_rank_sum([1, 2], [3, 4])

        self.assertEqual(result.method, RankSumMethod.EXACT)
        self.assertEqual(result.statistic, 3.0)
        self.assertAlmostEqual(result.p_two_sided, 1.0 / 3.0)

    def test_identical_samples(self) -> None:
        """Test that identical samples give p = 1."""
        self.assertEqual(wilcoxon_rank_sum([5.0, 5.0, 5.0], [5.0, 5.0]).p_two_sided, 1.0)
        self.assertEqual(wilcoxon_rank_sum([1, 2, 3], [1, 2, 3]).p_two_sided, 1.0)

    def test_shifted_normals(self) -> None:
        """Test that a one sigma shift with 200 values each is highly significant."""
        generator = np.random.default_rng(0)
        result = wilcoxon_rank_sum(generator.normal(0, 1, 200), generator.normal(1, 1, 200))

        self.assertEqual(result.method, RankSumMethod.NORMAL)
        self.assertLess(result.p_two_sided, 0.0001)
        self.assertLess(result.z, 0.0)

    def test_symmetry(self) -> None:
        """Test that swapping the samples keeps the p-value."""
        generator = np.random.default_rng(1)
        for size in (4, 30):
            a = generator.normal(0, 1, size)
            b = generator.normal(0.5, 1, size + 3)
            self.assertAlmostEqual(
                wilcoxon_rank_sum(a, b).p_two_sided, wilcoxon_rank_sum(b, a).p_two_sided
            )

    def test_exact_matches_enumeration(self) -> None:
        """Test every tie-free split of up to ten values against listing every rank subset."""
        cases = 0
        for total in range(2, 11):
            for first_size in range(1, total):
                second_size = total - first_size
                ranks = range(1, total + 1)

                for chosen in itertools.combinations(ranks, first_size):
                    a = [float(rank) for rank in chosen]
                    b = [float(rank) for rank in ranks if rank not in chosen]

                    result = wilcoxon_rank_sum(a, b, method=RankSumMethod.EXACT)

                    self.assertEqual(result.statistic, float(sum(chosen)))
                    self.assertAlmostEqual(
                        result.p_two_sided,
                        enumerated_p(first_size, second_size, result.statistic),
                        places=12,
                        msg=str(chosen),
                    )
                    cases += 1

        self.assertEqual(cases, 2026)

    def test_increasing_transform(self) -> None:
        """Test that a strictly increasing transform of both samples changes nothing."""
        generator = np.random.default_rng(6)
        transforms = (np.exp, lambda values: values**3 + 7.0, lambda values: 2.0 * values - 5.0)

        for size in (4, 6, 40):
            a = generator.normal(0.0, 1.0, size)
            b = generator.normal(0.5, 1.0, size + 1)
            original = wilcoxon_rank_sum(a, b)

            for transform in transforms:
                moved = wilcoxon_rank_sum(transform(a), transform(b))

                self.assertEqual(moved.method, original.method)
                self.assertEqual(moved.statistic, original.statistic)
                self.assertAlmostEqual(moved.p_two_sided, original.p_two_sided, places=12)

    def test_exact_close_to_normal(self) -> None:
        """Test that both computations agree for ten values per sample."""
        generator = np.random.default_rng(3)
        for _ in range(5):
            a = generator.normal(0, 1, 10)
            b = generator.normal(0.7, 1, 10)

            exact = wilcoxon_rank_sum(a, b, method=RankSumMethod.EXACT)
            normal = wilcoxon_rank_sum(a, b, method=RankSumMethod.NORMAL)

            self.assertLess(abs(exact.p_two_sided - normal.p_two_sided), 0.02)

    def test_ties_use_normal(self) -> None:
        """Test that tied samples fall back to the normal approximation."""
        self.assertEqual(wilcoxon_rank_sum([1, 2, 2], [2, 3]).method, RankSumMethod.NORMAL)

        with self.assertRaises(ValidationException):
            wilcoxon_rank_sum([1, 2, 2], [2, 3], method=RankSumMethod.EXACT)

    def test_empty_sample(self) -> None:
        """Test that both samples need values."""
        with self.assertRaises(ValidationException):
            wilcoxon_rank_sum([], [1.0])


class IntervalTests(unittest.TestCase):
    """Test the Wald interval."""

    def test_reported_values(self) -> None:
        """Test the half-widths of two proportions over 315 sessions."""
        self.assertAlmostEqual(wald_ci_halfwidth(0.71, 315), 0.050, delta=0.001)
        self.assertAlmostEqual(wald_ci_halfwidth(0.62, 315), 0.054, delta=0.001)

    def test_degenerate(self) -> None:
        """Test that certain proportions have no width."""
        self.assertEqual(wald_ci_halfwidth(0.0, 10), 0.0)
        self.assertEqual(wald_ci_halfwidth(1.0, 10), 0.0)

    def test_invalid(self) -> None:
        """Test that the inputs are validated."""
        with self.assertRaises(ValidationException):
            wald_ci_halfwidth(0.5, 0)

        with self.assertRaises(ValidationException):
            wald_ci_halfwidth(1.5, 10)


class DescriptiveTests(unittest.TestCase):
    """Test the mean and standard deviation."""

    def test_examples(self) -> None:
        """Test small fixed inputs."""
        self.assertEqual(descriptive([2, 2, 2]), (2.0, 0.0))
        self.assertEqual(descriptive([1, 3]), (2.0, 1.0))
        self.assertIsNone(descriptive([]))

    def test_two_pass(self) -> None:
        """Test against a two-pass computation."""
        values = np.random.default_rng(4).uniform(-5, 5, 101).tolist()
        mean = sum(values) / len(values)
        std = (sum((value - mean) ** 2 for value in values) / len(values)) ** 0.5

        actual = descriptive(values)

        assert actual is not None
        self.assertAlmostEqual(actual[0], mean)
        self.assertAlmostEqual(actual[1], std)


class RankSumTableTests(unittest.TestCase):
    """Test the screening table."""

    def test_table(self) -> None:
        """Test one row per feature with medians and significance."""
        client = StatsClient(RunConfig.default(), logging.getLogger("test"))
        generator = np.random.default_rng(5)

        high = {"speed": generator.normal(1.2, 0.1, 100).tolist(), "same": [1.0, 2.0], "none": []}
        low = {"speed": generator.normal(0.8, 0.1, 100).tolist(), "same": [1.0, 2.0], "none": [1.0]}

        rows = client.rank_sum_table(high, low)

        self.assertEqual([row.feature for row in rows], ["speed", "same", "none"])
        assert rows[0].significant
        assert not rows[1].significant
        self.assertIsNone(rows[2].result)
        self.assertIsNone(rows[2].median_high)
        self.assertEqual(rows[2].median_low, 1.0)
        self.assertEqual(rows[0].n_high, 100)
