#!/usr/bin/env python3

# Copyright (c) Microsoft Corporation.
# Licensed under the MIT license.

"""Leave-one-out evaluation, metrics and permutation importance."""

import concurrent.futures
import dataclasses
import enum
import logging
from typing import Any, Callable, Iterable, Sequence, TypeVar

import numpy as np

from simple_behavior.base_component import BaseComponent
from simple_behavior.config import ModelKind, RunConfig
from simple_behavior.exceptions import ValidationException
from simple_behavior.learn.classifiers import (
    NEGATIVE_LABEL,
    POSITIVE_LABEL,
    ModelSpec,
    TrainedModel,
    train,
)
from simple_behavior.learn.scaling import apply_scaler, fit_scaler
from simple_behavior.models import CohortLabel, SessionFeatureVector
from simple_behavior.models.features import GROUP_COUNT
from simple_behavior.stats import wald_ci_halfwidth
from simple_behavior.utilities import derive_seed

T = TypeVar("T")
R = TypeVar("R")


class FeatureSet(enum.Enum):
    """The feature subsets models are evaluated on."""

    ALL = "all"
    SOCIAL = "social"
    MOVEMENT = "movement"

    def columns(self, names: Sequence[str]) -> list[int]:
        """Select the columns of a feature order that belong to the subset.

        :param names: The full feature order

        :returns: The selected column indices, in order
        """
        if self == FeatureSet.ALL:
            return list(range(len(names)))

        social = [name.startswith(GROUP_COUNT) for name in names]
        wanted = self == FeatureSet.SOCIAL
        return [index for index, is_social in enumerate(social) if is_social == wanted]


@dataclasses.dataclass(frozen=True)
class MetricValue:
    """A proportion and the half-width of its 95% interval."""

    value: float
    halfwidth: float

    def to_dict(self) -> dict[str, float]:
        """Serialize to plain data."""
        return {"value": self.value, "halfwidth": self.halfwidth}


@dataclasses.dataclass(frozen=True)
class ClassifierReport:
    """The out-of-fold performance of one model on one feature subset.

    The positive class is low functioning.
    """

    model: str
    feature_set: str
    precision: MetricValue
    recall: MetricValue
    f1: MetricValue
    accuracy: MetricValue
    true_positive: int
    false_positive: int
    false_negative: int
    true_negative: int
    abstained: int

    @property
    def count(self) -> int:
        """The number of classified samples."""
        return self.true_positive + self.false_positive + self.false_negative + self.true_negative

    def to_dict(self) -> dict[str, Any]:
        """Serialize to plain data.

        :returns: A JSON compatible dictionary
        """
        return {
            "model": self.model,
            "feature_set": self.feature_set,
            "precision": self.precision.to_dict(),
            "recall": self.recall.to_dict(),
            "f1": self.f1.to_dict(),
            "accuracy": self.accuracy.to_dict(),
            "true_positive": self.true_positive,
            "false_positive": self.false_positive,
            "false_negative": self.false_negative,
            "true_negative": self.true_negative,
            "abstained": self.abstained,
        }


@dataclasses.dataclass(frozen=True)
class ImportanceEntry:
    """The F1 drop caused by shuffling one feature."""

    feature_index: int
    mean_drop: float
    std_drop: float


@dataclasses.dataclass(frozen=True)
class ImportanceReport:
    """Permutation importance of every feature of a model."""

    baseline_f1: float
    entries: tuple[ImportanceEntry, ...]

    def ranked(self) -> list[ImportanceEntry]:
        """The entries from most to least important (stable on ties)."""
        return sorted(self.entries, key=lambda entry: -entry.mean_drop)


def _run_parallel(function: Callable[[T], R], items: Iterable[T], threads: int) -> list[R]:
    """Map a function over items, keeping input order."""
    if threads <= 1:
        return [function(item) for item in items]

    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(function, items))


def _division(numerator: int, denominator: int) -> float:
    if denominator == 0:
        return 0.0
    return numerator / denominator


def metrics(
    predictions: Sequence[CohortLabel | None],
    labels: Sequence[CohortLabel],
    n_ci: int | None = None,
    model: str = "",
    feature_set: str = "",
) -> ClassifierReport:
    """Score predictions against the true labels.

    An abstained prediction (None) counts as the negative class.

    :param predictions: One prediction per sample
    :param labels: The true labels
    :param n_ci: The sample count the intervals use (defaults to the number of samples)
    :param model: The model name to report
    :param feature_set: The feature subset name to report

    :returns: The report

    :raises ValidationException: If the inputs are empty or of different lengths
    """
    if len(predictions) != len(labels) or len(labels) == 0:
        raise ValidationException(
            "Need equal, non-empty predictions and labels, "
            f"got {len(predictions)} and {len(labels)}"
        )

    pairs = [
        (prediction if prediction is not None else NEGATIVE_LABEL, label)
        for prediction, label in zip(predictions, labels)
    ]
    true_positive = sum(1 for p, y in pairs if p == POSITIVE_LABEL and y == POSITIVE_LABEL)
    false_positive = sum(1 for p, y in pairs if p == POSITIVE_LABEL and y != POSITIVE_LABEL)
    false_negative = sum(1 for p, y in pairs if p != POSITIVE_LABEL and y == POSITIVE_LABEL)
    true_negative = len(pairs) - true_positive - false_positive - false_negative

    precision = _division(true_positive, true_positive + false_positive)
    recall = _division(true_positive, true_positive + false_negative)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    accuracy = (true_positive + true_negative) / len(pairs)

    count = len(labels) if n_ci is None else n_ci

    def interval(value: float) -> MetricValue:
        return MetricValue(value, wald_ci_halfwidth(value, count))

    return ClassifierReport(
        model=model,
        feature_set=feature_set,
        precision=interval(precision),
        recall=interval(recall),
        f1=interval(f1),
        accuracy=interval(accuracy),
        true_positive=true_positive,
        false_positive=false_positive,
        false_negative=false_negative,
        true_negative=true_negative,
        abstained=sum(1 for prediction in predictions if prediction is None),
    )


def loocv(
    rows: np.ndarray,
    labels: Sequence[CohortLabel],
    spec: ModelSpec,
    seed: int = 0,
    global_scaling: bool = False,
    threads: int = 1,
) -> list[CohortLabel | None]:
    """Leave-one-out cross-validation.

    Fold k trains on every row but k, with its own scaler unless
    global_scaling is set, and predicts row k. A fold whose training rows
    hold a single class abstains with None.

    :param rows: The dataset; NaN marks a missing feature
    :param labels: One label per row
    :param spec: The model to evaluate
    :param seed: The root seed; fold k uses a seed derived from it and k
    :param global_scaling: Scale the whole dataset once before splitting
    :param threads: The number of folds run at once

    :returns: The out-of-fold prediction of every row, in input order

    :raises ValidationException: If there are fewer than 2 rows
    """
    matrix = np.atleast_2d(np.asarray(rows, dtype=float))

    if len(matrix) < 2 or len(matrix) != len(labels):
        raise ValidationException(
            f"Cross-validation needs at least 2 rows with one label each, got {len(matrix)}"
        )

    if global_scaling:
        matrix = apply_scaler(fit_scaler(matrix), matrix)

    def fold(index: int) -> CohortLabel | None:
        keep = np.arange(len(matrix)) != index
        training_labels = [label for position, label in enumerate(labels) if position != index]

        if len(set(training_labels)) < 2:
            return None

        model = train(
            spec,
            matrix[keep],
            training_labels,
            seed=derive_seed(seed, index),
            scale=not global_scaling,
        )
        return model.predict(matrix[index : index + 1])[0]

    return _run_parallel(fold, range(len(matrix)), threads)


def permutation_importance(
    model: TrainedModel,
    rows: np.ndarray,
    labels: Sequence[CohortLabel],
    repeats: int = 10,
    seed: int = 0,
    threads: int = 1,
) -> ImportanceReport:
    """Measure how much F1 drops when each feature is shuffled.

    Every (feature, repeat) pair shuffles with its own derived seed, so the
    result does not depend on the thread count.

    :param model: The trained model
    :param rows: The rows to evaluate on
    :param labels: One label per row
    :param repeats: How many shuffles per feature
    :param seed: The root seed
    :param threads: The number of features evaluated at once

    :returns: The baseline F1 and the mean and std of the drop per feature

    :raises ValidationException: If there are fewer than 2 rows
    """
    matrix = np.atleast_2d(np.asarray(rows, dtype=float))

    if len(matrix) < 2:
        raise ValidationException("Permutation importance needs at least 2 rows")

    baseline = metrics(model.predict(matrix), labels).f1.value

    def feature_drops(feature: int) -> ImportanceEntry:
        drops = []
        for repeat in range(repeats):
            generator = np.random.default_rng(derive_seed(seed, feature, repeat))
            shuffled = matrix.copy()
            shuffled[:, feature] = generator.permutation(matrix[:, feature])
            drops.append(baseline - metrics(model.predict(shuffled), labels).f1.value)

        if not drops:
            return ImportanceEntry(feature, 0.0, 0.0)
        return ImportanceEntry(feature, float(np.mean(drops)), float(np.std(drops)))

    entries = _run_parallel(feature_drops, range(matrix.shape[1]), threads)
    return ImportanceReport(baseline, tuple(entries))


def feature_matrix(
    vectors: Sequence[SessionFeatureVector], columns: Sequence[int] | None = None
) -> np.ndarray:
    """Stack feature vectors into a matrix, masked values becoming NaN.

    :param vectors: The session feature vectors
    :param columns: The columns to keep (all when None)

    :returns: One row per session
    """
    matrix = np.array(
        [[np.nan if value is None else value for value in vector.values] for vector in vectors],
        dtype=float,
    )
    if columns is None:
        return matrix
    return matrix[:, list(columns)]


class LearnClient(BaseComponent):
    """Evaluates classifiers on session feature vectors.

    :param config: The run configuration
    :param log: The logger to use
    """

    def __init__(self, config: RunConfig, log: logging.Logger) -> None:
        super().__init__(config, log.getChild("learn"))

    def model_spec(self, kind: ModelKind) -> ModelSpec:
        """Get the `ModelSpec` of a model kind from the configuration.

        :param kind: The classifier kind

        :returns: The model hyperparameters
        """
        return ModelSpec.from_config(kind, self.config.learning)

    def classify(
        self, vectors: Sequence[SessionFeatureVector], feature_set: FeatureSet
    ) -> list[ClassifierReport]:
        """Cross-validate every configured model on one feature subset.

        :param vectors: The session feature vectors
        :param feature_set: The subset of features to use

        :returns: One report per configured model, in configuration order
        """
        if not vectors:
            raise ValidationException("No sessions to classify")

        columns = feature_set.columns(vectors[0].names)
        rows = feature_matrix(vectors, columns)
        labels = [vector.label for vector in vectors]

        reports = []
        for kind in self.config.learning.models:
            predictions = loocv(
                rows,
                labels,
                self.model_spec(kind),
                seed=self.config.seed,
                global_scaling=self.config.learning.global_scaling,
                threads=self.config.threads,
            )
            report = metrics(predictions, labels, model=kind.value, feature_set=feature_set.value)
            self.log.info(
                f"{kind.value} on {feature_set.value} features: "
                f"F1 {report.f1.value:.3f}, accuracy {report.accuracy.value:.3f}"
            )
            reports.append(report)

        return reports

    def importance(
        self, vectors: Sequence[SessionFeatureVector], feature_set: FeatureSet
    ) -> list[tuple[str, ImportanceEntry]]:
        """Rank the features of one subset by permutation importance.

        The configured importance model is trained on every session and
        evaluated on the same sessions.

        :param vectors: The session feature vectors
        :param feature_set: The subset of features to use

        :returns: (feature name, importance) pairs from most to least important
        """
        if not vectors:
            raise ValidationException("No sessions to rank features on")

        names = vectors[0].names
        columns = feature_set.columns(names)
        rows = feature_matrix(vectors, columns)
        labels = [vector.label for vector in vectors]

        kind = self.config.learning.importance_model
        model = train(self.model_spec(kind), rows, labels, seed=self.config.seed)
        report = permutation_importance(
            model,
            rows,
            labels,
            repeats=self.config.learning.importance_repeats,
            seed=self.config.seed,
            threads=self.config.threads,
        )
        self.log.debug(f"Importance baseline F1 on {feature_set.value}: {report.baseline_f1:.3f}")

        return [(names[columns[entry.feature_index]], entry) for entry in report.ranked()]
