#!/usr/bin/env python3

# Copyright (c) Microsoft Corporation.
# Licensed under the MIT license.

"""Hypothesis tests and interval arithmetic."""

import dataclasses
import enum
import logging
import math
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import norm, rankdata

from simple_behavior.base_component import BaseComponent
from simple_behavior.config import RunConfig
from simple_behavior.exceptions import ValidationException

Z_95 = 1.96
DEFAULT_EXACT_CUTOFF = 12


class RankSumMethod(enum.Enum):
    """How the rank sum p-value was computed."""

    EXACT = "exact"
    NORMAL = "normal"


@dataclasses.dataclass(frozen=True)
class RankSumResult:
    """The outcome of a Wilcoxon rank sum test."""

    statistic: float
    z: float
    p_two_sided: float
    method: RankSumMethod


@dataclasses.dataclass(frozen=True)
class RankSumRow:
    """One row of a feature screening table."""

    feature: str
    n_high: int
    n_low: int
    median_high: float | None
    median_low: float | None
    result: RankSumResult | None
    significant: bool


def descriptive(values: Sequence[float]) -> tuple[float, float] | None:
    """Get the mean and population standard deviation.

    :param values: The values

    :returns: (mean, std), or None for an empty input
    """
    if len(values) == 0:
        return None

    array = np.asarray(values, dtype=float)
    return float(np.mean(array)), float(np.std(array))


def wald_ci_halfwidth(p_hat: float, n: int) -> float:
    """Get the half-width of the 95% normal-approximation interval of a proportion.

    :param p_hat: The observed proportion, in [0, 1]
    :param n: The number of observations

    :returns: 1.96 * sqrt(p(1 - p) / n)

    :raises ValidationException: If the inputs are out of range
    """
    if n < 1:
        raise ValidationException(f"Interval needs at least one observation, got {n}")

    if not 0.0 <= p_hat <= 1.0:
        raise ValidationException(f"Proportion out of [0, 1]: {p_hat}")

    return Z_95 * math.sqrt(p_hat * (1.0 - p_hat) / n)


def _exact_p(statistic: float, first_size: int, total: int) -> float:
    """Two-sided p-value of a tie-free rank sum by counting every rank subset.

    :param statistic: The observed rank sum of the first sample
    :param first_size: The size of the first sample
    :param total: The size of both samples together

    :returns: The exact two-sided p-value
    """

    max_sum = total * (total + 1) // 2
    # counts[k][s]: subsets of size k of the ranks seen so far with sum s
    counts = np.zeros((first_size + 1, max_sum + 1), dtype=np.float64)
    counts[0][0] = 1.0

    for rank in range(1, total + 1):
        for size in range(min(rank, first_size), 0, -1):
            counts[size][rank:] += counts[size - 1][: max_sum + 1 - rank]

    distribution = counts[first_size]
    observed = int(round(statistic))
    total_count = distribution.sum()
    lower = distribution[: observed + 1].sum() / total_count
    upper = distribution[observed:].sum() / total_count

    return float(min(1.0, 2.0 * min(lower, upper)))


def wilcoxon_rank_sum(
    a: Sequence[float],
    b: Sequence[float],
    *,
    method: RankSumMethod | None = None,
    exact_cutoff: int = DEFAULT_EXACT_CUTOFF,
) -> RankSumResult:
    """Run a two-sided Wilcoxon rank sum test.

    Ties get mid-ranks. Without a forced method, the exact distribution is used
    when both samples together hold at most `exact_cutoff` values and there
    are no ties; otherwise the tie-corrected normal approximation with a
    continuity correction.

    :param a: The first sample
    :param b: The second sample
    :param method: Force the exact or the normal computation
    :param exact_cutoff: The largest combined size for the exact test

    :returns: The rank sum of `a`, the z score and the two-sided p-value

    :raises ValidationException: If a sample is empty, or exact is forced on tied data
    """

    if len(a) == 0 or len(b) == 0:
        raise ValidationException("Both samples need at least one value")

    combined = np.concatenate([np.asarray(a, dtype=float), np.asarray(b, dtype=float)])
    first_size, second_size, total = len(a), len(b), len(combined)

    ranks = rankdata(combined)
    statistic = float(ranks[:first_size].sum())

    _, tie_counts = np.unique(combined, return_counts=True)
    has_ties = bool(np.any(tie_counts > 1))
    tie_term = float(np.sum(tie_counts.astype(float) ** 3 - tie_counts))

    mean = first_size * (total + 1) / 2.0
    variance = first_size * second_size / 12.0 * ((total + 1) - tie_term / (total * (total - 1)))

    if variance <= 0.0:
        # Every value is identical
        return RankSumResult(statistic, 0.0, 1.0, RankSumMethod.NORMAL)

    deviation = statistic - mean
    z = math.copysign(max(abs(deviation) - 0.5, 0.0), deviation) / math.sqrt(variance)

    if method is None:
        method = (
            RankSumMethod.EXACT if total <= exact_cutoff and not has_ties else RankSumMethod.NORMAL
        )

    if method == RankSumMethod.EXACT:
        if has_ties:
            raise ValidationException("The exact rank sum test needs tie-free samples")
        return RankSumResult(statistic, z, _exact_p(statistic, first_size, total), method)

    p_value = float(min(1.0, 2.0 * norm.sf(abs(z))))
    return RankSumResult(statistic, z, p_value, method)


class StatsClient(BaseComponent):
    """Screens raw feature distributions between the two classes.

    :param config: The run configuration
    :param log: The logger to use
    """

    def __init__(self, config: RunConfig, log: logging.Logger) -> None:
        super().__init__(config, log.getChild("stats"))

    def rank_sum_table(
        self, high: Mapping[str, Sequence[float]], low: Mapping[str, Sequence[float]]
    ) -> list[RankSumRow]:
        """Test every raw feature pooled per class.

        :param high: The pooled raw values of each feature for the high functioning class
        :param low: The pooled raw values of each feature for the low functioning class

        :returns: One row per feature, in the order of `high`
        """

        rows = []

        for feature, high_values in high.items():
            low_values = low.get(feature, [])
            result = None

            if len(high_values) > 0 and len(low_values) > 0:
                result = wilcoxon_rank_sum(
                    high_values, low_values, exact_cutoff=self.config.stats.exact_cutoff
                )
                self.log.debug(f"Rank sum for {feature}: p={result.p_two_sided:.3g}")
            else:
                self.log.warning(f"Skipping rank sum for {feature}: a class has no values")

            rows.append(
                RankSumRow(
                    feature=feature,
                    n_high=len(high_values),
                    n_low=len(low_values),
                    median_high=float(np.median(high_values)) if len(high_values) else None,
                    median_low=float(np.median(low_values)) if len(low_values) else None,
                    result=result,
                    significant=result is not None
                    and result.p_two_sided < self.config.stats.alpha,
                )
            )

        return rows
