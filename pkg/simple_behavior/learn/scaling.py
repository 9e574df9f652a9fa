"""Min-max feature scaling with mean imputation."""

import dataclasses

import numpy as np

from simple_behavior.exceptions import ValidationException


@dataclasses.dataclass(frozen=True, eq=False)
class ScalerState:
    """Per-feature ranges and imputation constants learned from training rows."""

    minimums: np.ndarray
    maximums: np.ndarray
    means: np.ndarray


def _as_matrix(rows: np.ndarray) -> np.ndarray:
    matrix = np.asarray(rows, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix[np.newaxis, :]
    return matrix


def fit_scaler(rows: np.ndarray) -> ScalerState:
    """Learn the scaling of every feature.

    Missing values (NaN) are imputed with the training mean before the range
    is taken. A feature that is missing in every row gets the constant 0.

    :param rows: The training rows, one per sample

    :returns: The scaler state

    :raises ValidationException: If there are no rows
    """
    matrix = _as_matrix(rows)

    if matrix.shape[0] < 1:
        raise ValidationException("The scaler needs at least one training row")

    present = ~np.isnan(matrix)
    counts = present.sum(axis=0)
    sums = np.where(present, matrix, 0.0).sum(axis=0)
    means = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)

    imputed = np.where(present, matrix, means)
    return ScalerState(imputed.min(axis=0), imputed.max(axis=0), means)


def apply_scaler(state: ScalerState, rows: np.ndarray) -> np.ndarray:
    """Scale rows into [0, 1] per feature.

    Constant training features map to 0.5 and values outside the training
    range are clipped.

    :param state: The learned scaler state
    :param rows: One row or a matrix of rows

    :returns: The scaled rows, always as a matrix
    """
    matrix = _as_matrix(rows)
    imputed = np.where(np.isnan(matrix), state.means, matrix)

    span = state.maximums - state.minimums
    constant = span <= 0.0
    scaled = (imputed - state.minimums) / np.where(constant, 1.0, span)
    scaled = np.where(constant, 0.5, scaled)
    return np.clip(scaled, 0.0, 1.0)
