"""The per-session feature vector and its canonical ordering."""

import dataclasses
import math
from typing import Any, Sequence

from simple_behavior.exceptions import InvariantException, ValidationException
from simple_behavior.models.cohort import CohortLabel
from simple_behavior.types import CohortId, SessionId

# Order is part of the output format
MOVEMENT_QUANTITIES = (
    "linear_path_length",
    "walking_speed",
    "direction_change",
    "velocity_entropy",
    "orientation_entropy",
    "levy_mu",
    "levy_c",
)

GROUP_COUNT = "group_count"


def movement_feature_names() -> list[str]:
    """Get the 14 movement feature names in canonical order.

    :returns: The names
    """
    return [
        f"{quantity}_{statistic}"
        for quantity in MOVEMENT_QUANTITIES
        for statistic in ("mean", "std")
    ]


def social_feature_names(region_names: Sequence[str]) -> list[str]:
    """Get the social feature names in canonical order.

    :param region_names: The floor plan regions, in plan order

    :returns: The overall group count pair followed by one pair per region
    """
    names = [f"{GROUP_COUNT}_mean", f"{GROUP_COUNT}_std"]
    for region in region_names:
        names.extend([f"{GROUP_COUNT}_{region}_mean", f"{GROUP_COUNT}_{region}_std"])
    return names


def feature_names(region_names: Sequence[str]) -> list[str]:
    """Get the full canonical feature order.

    :param region_names: The floor plan regions, in plan order

    :returns: The movement names followed by the social names
    """
    return movement_feature_names() + social_feature_names(region_names)


@dataclasses.dataclass(frozen=True)
class SessionFeatureVector:
    """The features of one break session.

    Masked features are stored as None, never as zero.
    """

    session_id: SessionId
    cohort_id: CohortId
    names: tuple[str, ...]
    values: tuple[float | None, ...]
    label: CohortLabel

    def __post_init__(self) -> None:
        if len(self.names) != len(self.values):
            raise InvariantException(
                f"Session {self.session_id} has {len(self.values)} values "
                f"for {len(self.names)} features"
            )

        for name, value in zip(self.names, self.values):
            if value is not None and not math.isfinite(value):
                raise InvariantException(f"Session {self.session_id} feature {name} is not finite")

    @property
    def mask(self) -> tuple[bool, ...]:
        """True for every missing feature."""
        return tuple(value is None for value in self.values)

    def value(self, name: str) -> float | None:
        """Get a feature by name.

        :param name: The feature name

        :returns: The value, None if masked
        """
        return self.values[self.names.index(name)]

    def to_dict(self) -> dict[str, Any]:
        """Serialize to plain data.

        :returns: A JSON compatible dictionary
        """
        return {
            "session_id": self.session_id,
            "cohort_id": self.cohort_id,
            "label": self.label.value,
            "values": dict(zip(self.names, self.values)),
        }

    @staticmethod
    def from_dict(raw: dict[str, Any], names: Sequence[str]) -> "SessionFeatureVector":
        """Deserialize from plain data.

        :param raw: The dictionary produced by `to_dict`
        :param names: The expected canonical feature order

        :returns: The feature vector

        :raises ValidationException: If features are missing or unexpected
        """
        values = raw["values"]

        if set(values) != set(names):
            raise ValidationException(
                f"Session {raw['session_id']} features do not match the expected feature set"
            )

        return SessionFeatureVector(
            session_id=SessionId(raw["session_id"]),
            cohort_id=CohortId(raw["cohort_id"]),
            names=tuple(names),
            values=tuple(None if values[name] is None else float(values[name]) for name in names),
            label=CohortLabel(raw["label"]),
        )
