"""Track samples, trajectories and break sessions."""

import dataclasses
import math
from typing import Iterable

from simple_behavior.exceptions import ValidationException
from simple_behavior.models.geometry import Point2D
from simple_behavior.types import CohortId, SessionId, TrackId

# Joins a track id and the index of a part cut from it by a gap split
PART_SEPARATOR = "#"


@dataclasses.dataclass(frozen=True)
class TrackSample:
    """One 1 Hz sample of a tracked person.

    :param t: Seconds since the session started
    :param position: Where the person was
    :param orientation: The body orientation in degrees, if the tracker estimated one
    """

    t: int
    position: Point2D
    orientation: float | None = None

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValidationException(f"Sample time must not be negative: {self.t}")

        if self.orientation is not None and not (
            math.isfinite(self.orientation) and 0.0 <= self.orientation < 360.0
        ):
            raise ValidationException(f"Orientation must be in [0, 360): {self.orientation}")


@dataclasses.dataclass(frozen=True)
class Trajectory:
    """An ordered person-track inside one break session."""

    track_id: TrackId
    samples: tuple[TrackSample, ...]

    def __post_init__(self) -> None:
        if len(self.samples) < 2:
            raise ValidationException(
                f"Trajectory {self.track_id} needs at least 2 samples, got {len(self.samples)}"
            )

        for previous, current in zip(self.samples, self.samples[1:]):
            if current.t <= previous.t:
                raise ValidationException(
                    f"Trajectory {self.track_id} timestamps are not strictly increasing "
                    f"({previous.t} then {current.t})"
                )

    @property
    def positions(self) -> list[Point2D]:
        """The sample positions in time order."""
        return [sample.position for sample in self.samples]

    def max_gap(self) -> int:
        """Get the largest time step of the trajectory.

        :returns: The largest difference between consecutive timestamps
        """
        pairs = zip(self.samples, self.samples[1:])
        return max(current.t - previous.t for previous, current in pairs)


@dataclasses.dataclass(frozen=True)
class BreakSession:
    """All trajectories observed during one break."""

    session_id: SessionId
    cohort_id: CohortId
    duration: int
    trajectories: tuple[Trajectory, ...] = ()

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValidationException(f"Session {self.session_id} duration must be positive")

        track_ids = [trajectory.track_id for trajectory in self.trajectories]
        if len(set(track_ids)) != len(track_ids):
            raise ValidationException(f"Session {self.session_id} has duplicate track ids")

        for trajectory in self.trajectories:
            if trajectory.samples[-1].t >= self.duration:
                raise ValidationException(
                    f"Session {self.session_id} track {trajectory.track_id} has samples past "
                    f"the session end ({trajectory.samples[-1].t} >= {self.duration})"
                )


def split_track_id(track_id: TrackId, part: int) -> TrackId:
    """Name the part of a track produced by a gap split.

    :param track_id: The identifier of the original track
    :param part: The 0-based part index

    :returns: The original identifier for the first part, a suffixed one for the rest
    """
    if part == 0:
        return track_id
    return TrackId(f"{track_id}{PART_SEPARATOR}{part}")


def split_on_gaps(
    track_id: TrackId, samples: Iterable[TrackSample], max_gap_s: int
) -> tuple[list[Trajectory], int]:
    """Build trajectories from time-ordered samples, splitting wherever the tracker dropped out.

    :param track_id: The identifier of the track the samples belong to
    :param samples: The samples, strictly increasing in time
    :param max_gap_s: The largest allowed step between samples

    :returns: The trajectories and the number of samples dropped as single-sample parts
    """

    parts: list[list[TrackSample]] = [[]]
    for sample in samples:
        if parts[-1] and sample.t - parts[-1][-1].t > max_gap_s:
            parts.append([])
        parts[-1].append(sample)

    trajectories = []
    dropped = 0

    for part in parts:
        if len(part) < 2:
            dropped += len(part)
            continue
        trajectories.append(Trajectory(split_track_id(track_id, len(trajectories)), tuple(part)))

    return trajectories, dropped
