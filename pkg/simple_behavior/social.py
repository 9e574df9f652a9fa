#!/usr/bin/env python3

# Copyright (c) Microsoft Corporation.
# Licensed under the MIT license.

"""Social interaction features: frame-level group detection and group counts."""

import collections
import dataclasses
import itertools
import logging
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from simple_behavior.base_component import BaseComponent
from simple_behavior.config import RunConfig, SocialConfig
from simple_behavior.exceptions import ValidationException
from simple_behavior.models import BreakSession, FloorPlan, Point2D, Trajectory
from simple_behavior.models.features import GROUP_COUNT
from simple_behavior.stats import descriptive
from simple_behavior.types import RegionName, TrackId


@dataclasses.dataclass(frozen=True)
class PersonState:
    """Where a person is and which way they face at one second."""

    track_id: TrackId
    position: Point2D
    orientation: float | None


@dataclasses.dataclass(frozen=True)
class Frame:
    """Everybody observed at one second of a session."""

    t: int
    people: tuple[PersonState, ...]


@dataclasses.dataclass(frozen=True)
class GroupFormation:
    """A group of two or more people at one second."""

    t: int
    member_ids: frozenset[TrackId]
    centroid: Point2D
    region: RegionName

    def __post_init__(self) -> None:
        if len(self.member_ids) < 2:
            raise ValidationException(f"A group needs at least 2 members at t={self.t}")


@dataclasses.dataclass
class SocialRaw:
    """The per-frame normalized group counts of a session."""

    overall: list[float]
    per_region: dict[RegionName, list[float]]


def _orientation_at(trajectory: Trajectory, index: int) -> float | None:
    """Get the body orientation of a sample, else the movement heading around it."""
    samples = trajectory.samples
    sample = samples[index]

    if sample.orientation is not None:
        return sample.orientation

    if index + 1 < len(samples) and samples[index + 1].position != sample.position:
        return sample.position.bearing_to(samples[index + 1].position)

    if index > 0 and samples[index - 1].position != sample.position:
        return samples[index - 1].position.bearing_to(sample.position)

    return None


def build_frames(session: BreakSession) -> list[Frame]:
    """Snap every trajectory of a session to the shared 1 Hz grid.

    :param session: The session

    :returns: One frame per second that has at least one sample, in time order
    """
    people: dict[int, list[PersonState]] = collections.defaultdict(list)

    for trajectory in session.trajectories:
        for index, sample in enumerate(trajectory.samples):
            orientation = _orientation_at(trajectory, index)
            people[sample.t].append(PersonState(trajectory.track_id, sample.position, orientation))

    return [Frame(t, tuple(people[t])) for t in sorted(people)]


def detect_groups(
    frame: Frame, plan: FloorPlan, d_max: float = 2.0, facing_deg: float = 120.0
) -> list[GroupFormation]:
    """Find the groups of one frame.

    Two people are linked when they are at most d_max apart and either both
    lack an orientation or each faces the other within facing_deg. Groups are
    the connected components with 2 or more members, placed in the region of
    their centroid.

    :param frame: The people observed at one second
    :param plan: The floor plan used to assign regions
    :param d_max: The largest distance between linked people, in meters
    :param facing_deg: The largest deviation between a person's orientation and the bearing
        to the other

    :returns: The groups, ordered by their sorted member identifiers
    """

    count = len(frame.people)
    if count < 2:
        return []

    positions = np.array([person.position.as_tuple() for person in frame.people], dtype=float)
    orientations = np.array(
        [np.nan if person.orientation is None else person.orientation for person in frame.people],
        dtype=float,
    )

    close = squareform(pdist(positions)) <= d_max

    offsets = positions[np.newaxis, :, :] - positions[:, np.newaxis, :]
    bearings = np.degrees(np.arctan2(offsets[:, :, 1], offsets[:, :, 0]))
    deviation = np.abs((orientations[:, np.newaxis] - bearings + 180.0) % 360.0 - 180.0)
    coincident = (offsets[:, :, 0] == 0.0) & (offsets[:, :, 1] == 0.0)
    absent = np.isnan(orientations)
    faces = ~absent[:, np.newaxis] & (coincident | (deviation <= facing_deg))
    both_absent = absent[:, np.newaxis] & absent[np.newaxis, :]

    linked = close & (both_absent | (faces & faces.T))
    np.fill_diagonal(linked, False)

    _, labels = connected_components(csr_matrix(linked), directed=False)

    groups = []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        if len(members) < 2:
            continue

        centroid = Point2D(*(float(value) for value in positions[members].mean(axis=0)))
        groups.append(
            GroupFormation(
                t=frame.t,
                member_ids=frozenset(frame.people[index].track_id for index in members),
                centroid=centroid,
                region=plan.region_of(centroid),
            )
        )

    return sorted(groups, key=lambda group: sorted(group.member_ids))


def smooth_groups(
    formations: Mapping[int, Sequence[GroupFormation]], min_persist_s: int = 3
) -> dict[int, list[GroupFormation]]:
    """Remove groups that flicker.

    A group, identified by its member set, is kept only in runs of at least
    min_persist_s consecutive seconds.

    :param formations: The groups of each second
    :param min_persist_s: The shortest run that is kept

    :returns: The kept groups of each second (every input second is present)
    """

    seconds: dict[frozenset[TrackId], list[int]] = collections.defaultdict(list)
    for t in sorted(formations):
        for group in formations[t]:
            seconds[group.member_ids].append(t)

    kept: set[tuple[frozenset[TrackId], int]] = set()
    for members, times in seconds.items():
        # Consecutive seconds share the same t - index
        for _, run in itertools.groupby(enumerate(times), key=lambda item: item[1] - item[0]):
            run_times = [t for _, t in run]
            if len(run_times) >= min_persist_s:
                kept.update((members, t) for t in run_times)

    return {
        t: [group for group in formations[t] if (group.member_ids, t) in kept]
        for t in sorted(formations)
    }


def normalized_group_count(group_count: int, participant_count: int) -> float | None:
    """Normalize a group count by the number of people in groups.

    :param group_count: The number of groups
    :param participant_count: The number of people who are members of those groups

    :returns: group_count / participant_count, None when nobody is in a group

    :raises ValidationException: If the counts are inconsistent
    """
    if group_count < 0 or participant_count < 0:
        raise ValidationException("Group counts must not be negative")

    if group_count > 0 and participant_count < 2 * group_count:
        raise ValidationException(
            f"{group_count} groups need at least {2 * group_count} participants, "
            f"got {participant_count}"
        )

    if participant_count == 0:
        return None

    return group_count / participant_count


class SocialClient(BaseComponent):
    """Computes the social interaction features of break sessions.

    :param config: The run configuration
    :param log: The logger to use
    """

    def __init__(self, config: RunConfig, log: logging.Logger) -> None:
        super().__init__(config, log.getChild("social"))

    @property
    def parameters(self) -> SocialConfig:
        """The social section of the configuration."""
        return self.config.social

    def session_groups(
        self, session: BreakSession, plan: FloorPlan
    ) -> dict[int, list[GroupFormation]]:
        """Detect and smooth the groups of every second of a session.

        :param session: The session
        :param plan: The floor plan

        :returns: The kept groups of each observed second
        """
        detected = {
            frame.t: detect_groups(frame, plan, self.parameters.d_max_m, self.parameters.facing_deg)
            for frame in build_frames(session)
        }
        return smooth_groups(detected, self.parameters.min_persist_s)

    def social_raw(self, session: BreakSession, plan: FloorPlan) -> SocialRaw:
        """Get the defined per-frame group counts of a session.

        :param session: The session
        :param plan: The floor plan

        :returns: The overall and per-region normalized counts of every frame where they
                  are defined
        """
        raw = SocialRaw(overall=[], per_region={name: [] for name in plan.region_names})

        for groups in self.session_groups(session, plan).values():
            overall = normalized_group_count(
                len(groups), sum(len(group.member_ids) for group in groups)
            )
            if overall is None:
                continue
            raw.overall.append(overall)

            for region in plan.region_names:
                in_region = [group for group in groups if group.region == region]
                value = normalized_group_count(
                    len(in_region), sum(len(group.member_ids) for group in in_region)
                )
                if value is not None:
                    raw.per_region[region].append(value)

        return raw

    def social_features(self, session: BreakSession, plan: FloorPlan) -> dict[str, float | None]:
        """Compute the social features of a session.

        :param session: The session
        :param plan: The floor plan

        :returns: The mean and standard deviation of the overall count and of each
                  region's count, in canonical order; None where never defined
        """
        self.log.debug(f"Social features for session {session.session_id}")

        raw = self.social_raw(session, plan)
        features: dict[str, float | None] = {}

        pools = [(GROUP_COUNT, raw.overall)] + [
            (f"{GROUP_COUNT}_{region}", raw.per_region[region]) for region in plan.region_names
        ]
        for prefix, pool in pools:
            summary = descriptive(pool)
            mean, std = summary if summary is not None else (None, None)
            features[f"{prefix}_mean"] = mean
            features[f"{prefix}_std"] = std

        return features
