# Copyright (c) Microsoft Corporation.
# Licensed under the MIT license.

"""Base test cases."""

import logging
import os
import sys
from typing import Any, Sequence

sys.path.insert(0, os.path.abspath(os.path.join(os.path.abspath(__file__), "..", "..")))

# pylint: disable=wrong-import-position
from simple_behavior.config import RunConfig, build_run_config
from simple_behavior.models import (
    BreakSession,
    Cohort,
    Point2D,
    TrackSample,
    Trajectory,
)
from simple_behavior.types import CohortId, SessionId, TrackId

LOG = logging.getLogger("simple_behavior_tests")

# Mean MoCA scores of the six study cohorts sit either side of the cut point:
# A, C and E above it, B, D and F at or below it.
STUDY_COHORT_SCORES: dict[str, tuple[int, ...]] = {
    "A": (25, 23, 24, 22, 26),
    "B": (19, 21, 18, 20, 17),
    "C": (22, 24, 23, 21, 25),
    "D": (16, 20, 21, 19, 18),
    "E": (27, 22, 24, 25, 23),
    "F": (21, 18, 20, 22, 19),
}


def study_cohorts() -> list[Cohort]:
    """Get the six study cohorts.

    :returns: The cohorts A to F
    """
    return [Cohort(CohortId(name), scores) for name, scores in STUDY_COHORT_SCORES.items()]


def make_config(**sections: Any) -> RunConfig:
    """Build a run configuration from override sections.

    :param sections: Top level keys and their override values

    :returns: The validated configuration
    """
    return build_run_config(sections)


def make_trajectory(
    track_id: str,
    points: Sequence[tuple[float, float]],
    start: int = 0,
    orientations: Sequence[float | None] | None = None,
) -> Trajectory:
    """Build a 1 Hz trajectory from positions.

    :param track_id: The track identifier
    :param points: One (x, y) position per second
    :param start: The time of the first sample
    :param orientations: One orientation per sample, all absent when None

    :returns: The trajectory
    """
    if orientations is None:
        orientations = [None] * len(points)

    return Trajectory(
        TrackId(track_id),
        tuple(
            TrackSample(start + index, Point2D(x, y), orientation)
            for index, ((x, y), orientation) in enumerate(zip(points, orientations))
        ),
    )


def make_session(
    trajectories: Sequence[Trajectory],
    session_id: str = "s0001",
    cohort_id: str = "A",
    duration: int = 900,
) -> BreakSession:
    """Build a break session.

    :param trajectories: The trajectories of the session
    :param session_id: The session identifier
    :param cohort_id: The cohort identifier
    :param duration: The session length in seconds

    :returns: The session
    """
    return BreakSession(SessionId(session_id), CohortId(cohort_id), duration, tuple(trajectories))
