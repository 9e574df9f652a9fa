"""Cohorts and their cognitive functioning labels."""

import dataclasses
import enum

from simple_behavior.exceptions import ValidationException
from simple_behavior.types import CohortId

DEFAULT_MOCA_THRESHOLD = 21.0


class CohortLabel(enum.Enum):
    """The cognitive functioning class of a cohort."""

    HIGH = "high"
    LOW = "low"


@dataclasses.dataclass(frozen=True)
class Cohort:
    """A cohort and the MoCA scores of its members."""

    cohort_id: CohortId
    moca_scores: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.moca_scores) == 0:
            raise ValidationException(f"Cohort {self.cohort_id} has no MoCA scores")

        for score in self.moca_scores:
            if not 0 <= score <= 30:
                raise ValidationException(
                    f"Cohort {self.cohort_id} MoCA score out of range [0, 30]: {score}"
                )

    @property
    def mean_score(self) -> float:
        """The arithmetic mean of the MoCA scores."""
        return sum(self.moca_scores) / len(self.moca_scores)


def label_cohort(cohort: Cohort, threshold: float = DEFAULT_MOCA_THRESHOLD) -> CohortLabel:
    """Label a cohort as high or low functioning.

    :param cohort: The cohort to label
    :param threshold: The mean score a high functioning cohort must exceed

    :returns: HIGH if the mean MoCA score is strictly above the threshold, LOW otherwise
    """
    if cohort.mean_score > threshold:
        return CohortLabel.HIGH
    return CohortLabel.LOW
