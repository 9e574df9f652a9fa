"""From-scratch binary classifiers.

Every classifier works on dense float matrices and 0/1 targets where 1 is
the positive class (low functioning). `train` is the entry point that maps
cohort labels to targets and applies the min-max scaler.
"""

import abc
import dataclasses
import math
from typing import Any, Sequence

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

from simple_behavior.config import (
    BoostingParameters,
    LassoParameters,
    LearningConfig,
    LogisticParameters,
    ModelKind,
    SvmParameters,
)
from simple_behavior.exceptions import ValidationException
from simple_behavior.learn.scaling import ScalerState, apply_scaler, fit_scaler
from simple_behavior.models import CohortLabel

POSITIVE_LABEL = CohortLabel.LOW
NEGATIVE_LABEL = CohortLabel.HIGH

Hyperparameters = SvmParameters | LogisticParameters | LassoParameters | BoostingParameters | None


def label_targets(labels: Sequence[CohortLabel]) -> np.ndarray:
    """Map cohort labels to 0/1 targets, low functioning being 1.

    :param labels: The labels to map

    :returns: The targets
    """
    return np.array([1.0 if label == POSITIVE_LABEL else 0.0 for label in labels])


def _parameters_dict(parameters: Hyperparameters) -> dict[str, Any]:
    if parameters is None:
        return {}
    return {key: value for key, value in vars(parameters).items() if not key.startswith("_")}


@dataclasses.dataclass(frozen=True)
class ModelSpec:
    """A classifier kind and its hyperparameters."""

    kind: ModelKind
    parameters: Hyperparameters = None

    @staticmethod
    def from_config(kind: ModelKind, learning: LearningConfig) -> "ModelSpec":
        """Build the `ModelSpec` of a model kind from the learning configuration.

        :param kind: The classifier kind
        :param learning: The learning section of the run configuration

        :returns: The model spec
        """
        parameters: Hyperparameters = {
            ModelKind.SVM_RBF: learning.svm,
            ModelKind.LOGISTIC: learning.logistic,
            ModelKind.LASSO: learning.lasso,
            ModelKind.GBT: learning.gbt,
            ModelKind.NEAREST: None,
        }[kind]
        return ModelSpec(kind, parameters)

    def to_dict(self) -> dict[str, Any]:
        """Serialize to plain data.

        :returns: The kind and hyperparameters
        """
        return {"kind": self.kind.value, "parameters": _parameters_dict(self.parameters)}


class Classifier(abc.ABC):
    """A binary classifier over 0/1 targets."""

    @abc.abstractmethod
    def fit(self, rows: np.ndarray, targets: np.ndarray, seed: int) -> None:
        """Fit the classifier.

        :param rows: The training matrix
        :param targets: The 0/1 targets
        :param seed: The seed for any randomness
        """

    @abc.abstractmethod
    def score(self, rows: np.ndarray) -> np.ndarray:
        """Get the positive class score of each row.

        :param rows: The rows to score

        :returns: The scores, higher meaning more likely positive
        """

    @property
    def threshold(self) -> float:
        """Rows scoring strictly above this are positive."""
        return 0.5

    def predict(self, rows: np.ndarray) -> np.ndarray:
        """Predict 0/1 targets.

        :param rows: The rows to classify

        :returns: The predicted targets
        """
        return (self.score(rows) > self.threshold).astype(float)


def rbf_kernel(first: np.ndarray, second: np.ndarray, gamma: float) -> np.ndarray:
    """Compute the Gaussian kernel matrix exp(-gamma * |x - y|^2)."""
    return np.exp(-gamma * cdist(first, second, "sqeuclidean"))


def dual_objective(kernel: np.ndarray, signs: np.ndarray, alpha: np.ndarray) -> float:
    """Evaluate the SVM dual objective sum(alpha) - alpha' Q alpha / 2.

    :param kernel: The training kernel matrix
    :param signs: The +1/-1 targets
    :param alpha: The dual variables

    :returns: The objective value (to be maximized)
    """
    weighted = alpha * signs
    return float(alpha.sum() - 0.5 * weighted @ kernel @ weighted)


def _violation_bounds(
    signs: np.ndarray, alpha: np.ndarray, gradient: np.ndarray, c: float
) -> tuple[int, float, int, float]:
    """Find the maximal violating pair of the dual."""
    scaled = -signs * gradient
    upper = ((signs > 0) & (alpha < c)) | ((signs < 0) & (alpha > 0))
    lower = ((signs > 0) & (alpha > 0)) | ((signs < 0) & (alpha < c))

    if not upper.any() or not lower.any():
        return -1, 0.0, -1, 0.0

    up_index = int(np.argmax(np.where(upper, scaled, -np.inf)))
    low_index = int(np.argmin(np.where(lower, scaled, np.inf)))
    return up_index, float(scaled[up_index]), low_index, float(scaled[low_index])


def kkt_gap(kernel: np.ndarray, signs: np.ndarray, alpha: np.ndarray, c: float) -> float:
    """Measure how far dual variables are from the KKT conditions.

    :param kernel: The training kernel matrix
    :param signs: The +1/-1 targets
    :param alpha: The dual variables
    :param c: The box constraint

    :returns: The maximal violating pair gap, at most the tolerance at convergence
    """
    gradient = signs * (kernel @ (alpha * signs)) - 1.0
    _, up_value, _, low_value = _violation_bounds(signs, alpha, gradient, c)
    return max(up_value - low_value, 0.0)


def solve_smo(
    kernel: np.ndarray, signs: np.ndarray, c: float, tol: float, max_iterations: int
) -> tuple[np.ndarray, float]:
    """Solve the soft-margin SVM dual with sequential minimal optimization.

    Each step updates the maximal violating pair analytically and keeps the
    gradient of the dual current.

    :param kernel: The training kernel matrix
    :param signs: The +1/-1 targets
    :param c: The box constraint
    :param tol: The stopping tolerance on the violating pair gap
    :param max_iterations: The largest number of pair updates

    :returns: The dual variables and the bias term rho
    """
    count = len(signs)
    alpha = np.zeros(count)
    gradient = -np.ones(count)
    q_matrix = np.outer(signs, signs) * kernel

    for _ in range(max_iterations):
        i, up_value, j, low_value = _violation_bounds(signs, alpha, gradient, c)
        if i < 0 or up_value - low_value < tol:
            break

        # K_ii + K_jj - 2 K_ij
        quad = max(kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j], 1e-12)
        old_i, old_j = alpha[i], alpha[j]

        if signs[i] != signs[j]:
            delta = (-gradient[i] - gradient[j]) / quad
            difference = old_i - old_j
            new_i, new_j = old_i + delta, old_j + delta
            if difference > 0 and new_j < 0:
                new_j, new_i = 0.0, difference
            elif difference <= 0 and new_i < 0:
                new_i, new_j = 0.0, -difference
            if difference > 0 and new_i > c:
                new_i, new_j = c, c - difference
            elif difference <= 0 and new_j > c:
                new_j, new_i = c, c + difference
        else:
            delta = (gradient[i] - gradient[j]) / quad
            total = old_i + old_j
            new_i, new_j = old_i - delta, old_j + delta
            if total > c and new_i > c:
                new_i, new_j = c, total - c
            elif total <= c and new_j < 0:
                new_j, new_i = 0.0, total
            if total > c and new_j > c:
                new_j, new_i = c, total - c
            elif total <= c and new_i < 0:
                new_i, new_j = 0.0, total

        alpha[i], alpha[j] = new_i, new_j
        gradient += q_matrix[:, i] * (new_i - old_i) + q_matrix[:, j] * (new_j - old_j)

    return alpha, _rho(signs, alpha, gradient, c)


def _rho(signs: np.ndarray, alpha: np.ndarray, gradient: np.ndarray, c: float) -> float:
    scaled = signs * gradient
    free = (alpha > 0) & (alpha < c)
    if free.any():
        return float(scaled[free].mean())

    at_upper = alpha >= c
    at_lower = alpha <= 0
    upper_candidates = scaled[(at_upper & (signs < 0)) | (at_lower & (signs > 0))]
    lower_candidates = scaled[(at_upper & (signs > 0)) | (at_lower & (signs < 0))]
    if upper_candidates.size == 0 or lower_candidates.size == 0:
        return float(np.concatenate([upper_candidates, lower_candidates, [0.0]])[0])
    return float((upper_candidates.min() + lower_candidates.max()) / 2.0)


class SvmClassifier(Classifier):
    """A support vector machine with a Gaussian (RBF) kernel.

    :param parameters: The hyperparameters
    """

    def __init__(self, parameters: SvmParameters) -> None:
        self.parameters = parameters
        self.gamma = 1.0
        self.alpha = np.zeros(0)
        self.rho = 0.0
        self.training_rows = np.zeros((0, 0))
        self.signs = np.zeros(0)

    def fit(self, rows: np.ndarray, targets: np.ndarray, seed: int) -> None:
        # SMO with maximal violating pairs is deterministic, the seed is unused
        del seed
        self.training_rows = rows
        self.signs = np.where(targets > 0.5, 1.0, -1.0)

        if self.parameters.gamma is not None:
            self.gamma = self.parameters.gamma
        else:
            variance = float(rows.var(axis=0).mean())
            self.gamma = 1.0 / (rows.shape[1] * variance) if variance > 0 else 1.0 / rows.shape[1]

        self.alpha, self.rho = solve_smo(
            self.training_kernel,
            self.signs,
            self.parameters.c,
            self.parameters.tol,
            self.parameters.max_passes * len(rows),
        )

    @property
    def training_kernel(self) -> np.ndarray:
        """The kernel matrix of the training rows."""
        return rbf_kernel(self.training_rows, self.training_rows, self.gamma)

    def kkt_gap(self) -> float:
        """The KKT violation of the fitted dual variables."""
        return kkt_gap(self.training_kernel, self.signs, self.alpha, self.parameters.c)

    def dual_objective(self) -> float:
        """The dual objective of the fitted dual variables."""
        return dual_objective(self.training_kernel, self.signs, self.alpha)

    def score(self, rows: np.ndarray) -> np.ndarray:
        support = self.alpha > 0
        kernel = rbf_kernel(rows, self.training_rows[support], self.gamma)
        return kernel @ (self.alpha[support] * self.signs[support]) - self.rho

    @property
    def threshold(self) -> float:
        return 0.0


class LogisticClassifier(Classifier):
    """Logistic regression trained by full-batch gradient descent.

    An L1 penalty, applied as a soft-threshold proximal step, turns it into
    the lasso classifier.

    :param learning_rate: The gradient step size
    :param iterations: The number of full-batch steps
    :param l1: The L1 penalty weight (0 for none)
    """

    def __init__(self, learning_rate: float, iterations: int, l1: float = 0.0) -> None:
        self.learning_rate = learning_rate
        self.iterations = iterations
        self.l1 = l1
        self.weights = np.zeros(0)
        self.bias = 0.0

    def fit(self, rows: np.ndarray, targets: np.ndarray, seed: int) -> None:
        del seed
        count, width = rows.shape
        self.weights = np.zeros(width)
        self.bias = 0.0

        for _ in range(self.iterations):
            residuals = expit(rows @ self.weights + self.bias) - targets
            self.weights -= self.learning_rate * (rows.T @ residuals) / count
            self.bias -= self.learning_rate * float(residuals.mean())

            if self.l1 > 0:
                shrink = self.learning_rate * self.l1
                magnitude = np.maximum(np.abs(self.weights) - shrink, 0.0)
                self.weights = np.sign(self.weights) * magnitude

    def score(self, rows: np.ndarray) -> np.ndarray:
        return expit(rows @ self.weights + self.bias)


@dataclasses.dataclass
class TreeNode:
    """A node of a regression tree; leaves have no feature."""

    value: float
    feature: int | None = None
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    def predict(self, rows: np.ndarray) -> np.ndarray:
        """Route every row to its leaf value.

        :param rows: The rows to route

        :returns: One leaf value per row
        """
        if self.feature is None or self.left is None or self.right is None:
            return np.full(len(rows), self.value)

        goes_left = rows[:, self.feature] <= self.threshold
        values = np.empty(len(rows))
        values[goes_left] = self.left.predict(rows[goes_left])
        values[~goes_left] = self.right.predict(rows[~goes_left])
        return values


def _best_split(rows: np.ndarray, residuals: np.ndarray) -> tuple[int, float] | None:
    """Find the split with the largest squared error reduction.

    Ties go to the lowest feature index, then the lowest threshold.
    """
    count = len(residuals)
    order = np.argsort(rows, axis=0, kind="stable")
    values = np.take_along_axis(rows, order, axis=0)
    sums = np.cumsum(residuals[order], axis=0)
    total = sums[-1]

    left_counts = np.arange(1, count)[:, np.newaxis]
    left_sums = sums[:-1]
    gains = (
        left_sums**2 / left_counts
        + (total - left_sums) ** 2 / (count - left_counts)
        - residuals.sum() ** 2 / count
    )
    gains = np.where(values[:-1] < values[1:], gains, -np.inf)

    best = int(np.argmax(gains.T))
    feature, position = divmod(best, count - 1)
    if not gains[position, feature] > 1e-12:
        return None

    threshold = float((values[position, feature] + values[position + 1, feature]) / 2.0)
    return feature, threshold


def grow_tree(rows: np.ndarray, residuals: np.ndarray, depth: int) -> TreeNode:
    """Grow a depth-limited least-squares regression tree.

    :param rows: The training matrix
    :param residuals: The values to fit
    :param depth: The largest number of splits from root to leaf

    :returns: The root node
    """
    node = TreeNode(value=float(residuals.mean()))
    if depth <= 0 or len(residuals) < 2:
        return node

    split = _best_split(rows, residuals)
    if split is None:
        return node

    node.feature, node.threshold = split
    left = rows[:, node.feature] <= node.threshold
    node.left = grow_tree(rows[left], residuals[left], depth - 1)
    node.right = grow_tree(rows[~left], residuals[~left], depth - 1)
    return node


class BoostedTreesClassifier(Classifier):
    """Gradient-boosted regression trees on the logistic loss.

    :param parameters: The hyperparameters
    """

    def __init__(self, parameters: BoostingParameters) -> None:
        self.parameters = parameters
        self.initial = 0.0
        self.trees: list[TreeNode] = []

    def fit(self, rows: np.ndarray, targets: np.ndarray, seed: int) -> None:
        generator = np.random.default_rng(seed)
        prior = min(max(float(targets.mean()), 1e-6), 1.0 - 1e-6)
        self.initial = math.log(prior / (1.0 - prior))
        self.trees = []

        logits = np.full(len(targets), self.initial)
        sample_size = max(1, int(round(self.parameters.subsample * len(targets))))

        for _ in range(self.parameters.trees):
            residuals = targets - expit(logits)
            if sample_size < len(targets):
                chosen = np.sort(generator.choice(len(targets), size=sample_size, replace=False))
            else:
                chosen = np.arange(len(targets))

            tree = grow_tree(rows[chosen], residuals[chosen], self.parameters.depth)
            self.trees.append(tree)
            logits += self.parameters.learning_rate * tree.predict(rows)

    def score(self, rows: np.ndarray) -> np.ndarray:
        logits = np.full(len(rows), self.initial)
        for tree in self.trees:
            logits += self.parameters.learning_rate * tree.predict(rows)
        return expit(logits)


class NearestNeighborClassifier(Classifier):
    """The 1-nearest-neighbour baseline; ties go to the earliest training row."""

    def __init__(self) -> None:
        self.training_rows = np.zeros((0, 0))
        self.targets = np.zeros(0)

    def fit(self, rows: np.ndarray, targets: np.ndarray, seed: int) -> None:
        del seed
        self.training_rows = rows
        self.targets = targets

    def score(self, rows: np.ndarray) -> np.ndarray:
        nearest = np.argmin(cdist(rows, self.training_rows), axis=1)
        return self.targets[nearest]


def build_classifier(spec: ModelSpec) -> Classifier:
    """Instantiate the classifier a spec describes.

    :param spec: The model spec

    :returns: An unfitted classifier

    :raises ValidationException: If the hyperparameters do not fit the kind
    """
    parameters = spec.parameters

    if spec.kind == ModelKind.SVM_RBF and isinstance(parameters, SvmParameters):
        return SvmClassifier(parameters)

    if spec.kind == ModelKind.LOGISTIC and isinstance(parameters, LogisticParameters):
        return LogisticClassifier(parameters.learning_rate, parameters.iterations)

    if spec.kind == ModelKind.LASSO and isinstance(parameters, LassoParameters):
        return LogisticClassifier(parameters.learning_rate, parameters.iterations, parameters.l1)

    if spec.kind == ModelKind.GBT and isinstance(parameters, BoostingParameters):
        return BoostedTreesClassifier(parameters)

    if spec.kind == ModelKind.NEAREST:
        return NearestNeighborClassifier()

    raise ValidationException(f"Hyperparameters do not match model kind {spec.kind.value}")


@dataclasses.dataclass
class TrainedModel:
    """A fitted classifier together with the scaler it was trained behind."""

    spec: ModelSpec
    classifier: Classifier
    scaler: ScalerState | None
    seed: int

    def _prepare(self, rows: np.ndarray) -> np.ndarray:
        matrix = np.atleast_2d(np.asarray(rows, dtype=float))
        if self.scaler is not None:
            return apply_scaler(self.scaler, matrix)
        return matrix

    def scores(self, rows: np.ndarray) -> np.ndarray:
        """Get the positive class score of each row.

        :param rows: The unscaled rows

        :returns: The scores
        """
        return self.classifier.score(self._prepare(rows))

    def predict(self, rows: np.ndarray) -> list[CohortLabel]:
        """Classify rows.

        :param rows: The unscaled rows

        :returns: One label per row
        """
        predicted = self.classifier.predict(self._prepare(rows))
        return [POSITIVE_LABEL if target > 0.5 else NEGATIVE_LABEL for target in predicted]

    def describe(self, feature_names: Sequence[str] | None = None) -> dict[str, Any]:
        """Describe the model for reproducibility.

        :param feature_names: The names of the input columns, if known

        :returns: A JSON compatible description
        """
        return {
            **self.spec.to_dict(),
            "seed": self.seed,
            "scaled": self.scaler is not None,
            "feature_names": list(feature_names) if feature_names is not None else None,
        }


def train(
    spec: ModelSpec,
    rows: np.ndarray,
    labels: Sequence[CohortLabel],
    seed: int = 0,
    scale: bool = True,
) -> TrainedModel:
    """Train a classifier.

    :param spec: What to train
    :param rows: The training rows; NaN marks a missing feature
    :param labels: One label per row
    :param seed: The seed for any randomness
    :param scale: Fit a min-max scaler on the rows first; when False the rows
                  must already be scaled and free of missing values

    :returns: The trained model

    :raises ValidationException: If there are too few rows or a single class
    """
    matrix = np.atleast_2d(np.asarray(rows, dtype=float))

    if len(matrix) != len(labels):
        raise ValidationException(f"Got {len(matrix)} rows for {len(labels)} labels")

    if len(matrix) < 2:
        raise ValidationException("Training needs at least 2 rows")

    targets = label_targets(labels)
    if targets.min() == targets.max():
        raise ValidationException("Training needs both classes to be present")

    scaler = fit_scaler(matrix) if scale else None
    prepared = apply_scaler(scaler, matrix) if scaler is not None else matrix

    classifier = build_classifier(spec)
    classifier.fit(prepared, targets, seed)
    return TrainedModel(spec, classifier, scaler, seed)
