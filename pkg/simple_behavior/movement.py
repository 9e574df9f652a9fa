#!/usr/bin/env python3

# Copyright (c) Microsoft Corporation.
# Licensed under the MIT license.

"""Movement features: linear paths, speed, turning, entropies and Levy parameters."""

import dataclasses
import logging
import math
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from simple_behavior.base_component import BaseComponent
from simple_behavior.config import MovementConfig, OrientationSource, RunConfig
from simple_behavior.exceptions import UndefinedAngleException
from simple_behavior.models import BreakSession, Point2D, Trajectory, angle_difference
from simple_behavior.models.features import MOVEMENT_QUANTITIES
from simple_behavior.stats import descriptive

# Smallest gap kept between the Levy location and the smallest sample
_LEVY_EPSILON = 1e-6
_LEVY_COARSE_GRID = 64


@dataclasses.dataclass(frozen=True)
class LinearPath:
    """A maximal straight walking segment of a trajectory."""

    points: tuple[Point2D, ...]

    @property
    def n(self) -> int:
        """The number of positions on the path."""
        return len(self.points)

    @property
    def length(self) -> float:
        """The summed step lengths, in meters."""
        return sum(a.distance_to(b) for a, b in zip(self.points, self.points[1:]))


@dataclasses.dataclass(frozen=True)
class LevyFit:
    """A maximum likelihood fit of the two parameter Levy distribution."""

    mu: float
    c: float
    log_likelihood: float


@dataclasses.dataclass
class MovementRaw:
    """The raw per-path and per-trajectory movement quantities of a session."""

    linear_path_length: list[float] = dataclasses.field(default_factory=list)
    walking_speed: list[float] = dataclasses.field(default_factory=list)
    direction_change: list[float] = dataclasses.field(default_factory=list)
    velocity_entropy: list[float] = dataclasses.field(default_factory=list)
    orientation_entropy: list[float] = dataclasses.field(default_factory=list)
    levy_mu: list[float] = dataclasses.field(default_factory=list)
    levy_c: list[float] = dataclasses.field(default_factory=list)

    def pool(self, quantity: str) -> list[float]:
        """Get the pooled values of a quantity.

        :param quantity: One of MOVEMENT_QUANTITIES

        :returns: The values
        """
        values: list[float] = getattr(self, quantity)
        return values


def direction_change_angle(p1: Point2D, p2: Point2D, p3: Point2D) -> float:
    """Get how far the heading deviates when walking p1 -> p2 -> p3.

    :param p1: The first position
    :param p2: The turning position
    :param p3: The next position

    :returns: The deviation in degrees, 0 for straight ahead and 180 for a reversal

    :raises UndefinedAngleException: If either segment has zero length
    """
    ax, ay = p2.x - p1.x, p2.y - p1.y
    bx, by = p3.x - p2.x, p3.y - p2.y

    if (ax == 0.0 and ay == 0.0) or (bx == 0.0 and by == 0.0):
        raise UndefinedAngleException(f"Zero-length segment around {p2}")

    return math.degrees(math.atan2(abs(ax * by - ay * bx), ax * bx + ay * by))


def moving_points(trajectory: Trajectory, stationary_m: float) -> list[Point2D]:
    """Drop stationary samples from a trajectory.

    A position is kept when it is at least `stationary_m` away from the last
    kept position.

    :param trajectory: The trajectory to filter
    :param stationary_m: The smallest displacement that counts as movement

    :returns: The positions that mark movement
    """
    points = [trajectory.samples[0].position]
    for sample in trajectory.samples[1:]:
        distance = points[-1].distance_to(sample.position)
        if distance > 0.0 and distance >= stationary_m:
            points.append(sample.position)
    return points


def turn_angles(points: Sequence[Point2D]) -> list[float]:
    """Get the direction change at every interior point of a polyline.

    :param points: The polyline, without repeated positions

    :returns: One angle per interior point
    """
    return [direction_change_angle(a, b, c) for a, b, c in zip(points, points[1:], points[2:])]


def segment_linear_paths(
    trajectory: Trajectory, split_deg: float = 20.0, stationary_m: float = 0.25
) -> list[LinearPath]:
    """Split the moving part of a trajectory into linear paths.

    Consecutive paths share their boundary point.

    :param trajectory: The trajectory to segment
    :param split_deg: The largest direction change inside a path
    :param stationary_m: The stationary filter threshold

    :returns: The linear paths, empty if fewer than 2 moving positions remain
    """
    points = moving_points(trajectory, stationary_m)
    if len(points) < 2:
        return []

    paths = []
    start = 0
    for index, angle in enumerate(turn_angles(points), start=1):
        if angle > split_deg:
            paths.append(LinearPath(tuple(points[start : index + 1])))
            start = index
    paths.append(LinearPath(tuple(points[start:])))
    return paths


def path_speed(path: LinearPath, fencepost_correct: bool = False) -> float:
    """Get the walking speed along a linear path.

    :param path: The path
    :param fencepost_correct: Divide by the n - 1 steps instead of the n positions

    :returns: The speed in meters per second
    """
    return path.length / (path.n - 1 if fencepost_correct else path.n)


def velocity_series(trajectory: Trajectory) -> list[float]:
    """Get the speed between every pair of consecutive samples.

    :param trajectory: The trajectory

    :returns: The displacement of each step divided by its duration
    """
    return [
        a.position.distance_to(b.position) / (b.t - a.t)
        for a, b in zip(trajectory.samples, trajectory.samples[1:])
    ]


def _template_matches(series: np.ndarray, length: int, count: int, tolerance: float) -> int:
    templates = np.lib.stride_tricks.sliding_window_view(series, length)[:count]
    matches = 0
    for index in range(count - 1):
        distances = np.max(np.abs(templates[index + 1 :] - templates[index]), axis=1)
        matches += int(np.count_nonzero(distances <= tolerance))
    return matches


def sample_entropy(
    series: Sequence[float], m: int = 2, r_factor: float = 0.2, r: float | None = None
) -> float | None:
    """Compute the sample entropy of a series.

    Templates of length m and m + 1 are compared with the Chebyshev distance
    over the same N - m starting positions, self-matches excluded.

    :param series: The values
    :param m: The template length
    :param r_factor: The tolerance as a fraction of the population standard deviation
    :param r: An absolute tolerance, overriding r_factor

    :returns: -ln(A / B), or None when the series is too short or either count is zero
    """
    values = np.asarray(series, dtype=float)

    if len(values) < m + 2:
        return None

    tolerance = r_factor * float(np.std(values)) if r is None else r
    count = len(values) - m

    shorter = _template_matches(values, m, count, tolerance)
    if shorter == 0:
        return None

    longer = _template_matches(values, m + 1, count, tolerance)
    if longer == 0:
        return None

    return -math.log(longer / shorter)


def orientation_change_series(
    trajectory: Trajectory,
    stationary_m: float = 0.25,
    source: OrientationSource = OrientationSource.HEADING,
) -> list[float]:
    """Get the change of orientation between consecutive steps.

    :param trajectory: The trajectory
    :param stationary_m: The stationary filter threshold used for headings
    :param source: Use the movement heading or the tracked body orientation

    :returns: The changes in degrees, wrapped to (-180, 180]
    """

    if source == OrientationSource.BODY:
        angles = [s.orientation for s in trajectory.samples if s.orientation is not None]
        if len(angles) == len(trajectory.samples):
            return [angle_difference(b, a) for a, b in zip(angles, angles[1:])]

    points = moving_points(trajectory, stationary_m)
    if len(points) < 3:
        return []

    headings = [math.degrees(math.atan2(b.y - a.y, b.x - a.x)) for a, b in zip(points, points[1:])]
    return [angle_difference(b, a) for a, b in zip(headings, headings[1:])]


def levy_log_likelihood(samples: Sequence[float], mu: float, c: float) -> float:
    """Get the log likelihood of samples under a Levy distribution.

    :param samples: The samples, all greater than mu
    :param mu: The location
    :param c: The scale

    :returns: The summed log density
    """
    shifted = np.asarray(samples, dtype=float) - mu
    return float(
        np.sum(0.5 * math.log(c / (2.0 * math.pi)) - c / (2.0 * shifted) - 1.5 * np.log(shifted))
    )


def _profile_scale(samples: np.ndarray, mu: float) -> float:
    return float(len(samples) / np.sum(1.0 / (samples - mu)))


def fit_levy(samples: Sequence[float], min_samples: int = 5) -> LevyFit | None:
    """Fit a Levy distribution by maximum likelihood.

    For a fixed location the scale has the closed form n / sum(1 / (x - mu)),
    so only the location is searched, over [0, min(x) - 1e-6].

    :param samples: Positive samples, e.g. linear path lengths
    :param min_samples: The fewest samples to fit

    :returns: The fit, or None if there are too few samples or they are degenerate
    """
    values = np.asarray(samples, dtype=float)

    if len(values) < min_samples or np.any(values <= 0.0) or np.ptp(values) == 0.0:
        return None

    upper = float(values.min()) - _LEVY_EPSILON

    def profile(mu: float) -> float:
        return levy_log_likelihood(values, mu, _profile_scale(values, mu))

    if upper <= 0.0:
        best_mu = 0.0
    else:
        # Coarse scan then bounded refinement around the best grid cell
        grid = np.linspace(0.0, upper, _LEVY_COARSE_GRID)
        scores = [profile(float(mu)) for mu in grid]
        best = int(np.argmax(scores))
        low = float(grid[max(best - 1, 0)])
        high = float(grid[min(best + 1, len(grid) - 1)])

        result = minimize_scalar(
            lambda mu: -profile(mu), bounds=(low, high), method="bounded", options={"xatol": 1e-12}
        )
        best_mu = float(grid[best])
        if result.success and -float(result.fun) >= scores[best]:
            best_mu = float(result.x)

    scale = _profile_scale(values, best_mu)
    return LevyFit(mu=best_mu, c=scale, log_likelihood=levy_log_likelihood(values, best_mu, scale))


class MovementClient(BaseComponent):
    """Computes the movement features of break sessions.

    :param config: The run configuration
    :param log: The logger to use
    """

    def __init__(self, config: RunConfig, log: logging.Logger) -> None:
        super().__init__(config, log.getChild("movement"))

    @property
    def parameters(self) -> MovementConfig:
        """The movement section of the configuration."""
        return self.config.movement

    def trajectory_paths(self, trajectory: Trajectory) -> list[LinearPath]:
        """Segment a trajectory with the configured thresholds.

        :param trajectory: The trajectory

        :returns: Its linear paths
        """
        return segment_linear_paths(
            trajectory, self.parameters.split_deg, self.parameters.stationary_m
        )

    def movement_raw(self, session: BreakSession) -> MovementRaw:
        """Collect the raw movement quantities of a session.

        Path quantities are pooled over every path of every trajectory;
        entropies and Levy parameters contribute one value per trajectory.
        Undefined per-trajectory values are left out.

        :param session: The session

        :returns: The pooled quantities
        """
        raw = MovementRaw()
        parameters = self.parameters

        for trajectory in session.trajectories:
            paths = self.trajectory_paths(trajectory)
            lengths = [path.length for path in paths]

            raw.linear_path_length.extend(lengths)
            raw.walking_speed.extend(
                path_speed(path, parameters.fencepost_correct) for path in paths
            )
            raw.direction_change.extend(
                turn_angles(moving_points(trajectory, parameters.stationary_m))
            )

            velocity_entropy = sample_entropy(
                velocity_series(trajectory), parameters.entropy_m, parameters.entropy_r
            )
            if velocity_entropy is not None:
                raw.velocity_entropy.append(velocity_entropy)

            orientation_entropy = sample_entropy(
                orientation_change_series(
                    trajectory, parameters.stationary_m, parameters.orientation_source
                ),
                parameters.entropy_m,
                parameters.entropy_r,
            )
            if orientation_entropy is not None:
                raw.orientation_entropy.append(orientation_entropy)

            levy = fit_levy(lengths, parameters.levy_min_samples)
            if levy is not None:
                raw.levy_mu.append(levy.mu)
                raw.levy_c.append(levy.c)

        return raw

    def movement_features(self, session: BreakSession) -> dict[str, float | None]:
        """Compute the 14 movement features of a session.

        :param session: The session

        :returns: The mean and standard deviation of each quantity in canonical order;
                  None where the pool is empty
        """
        self.log.debug(f"Movement features for session {session.session_id}")

        raw = self.movement_raw(session)
        features: dict[str, float | None] = {}

        for quantity in MOVEMENT_QUANTITIES:
            summary = descriptive(raw.pool(quantity))
            mean, std = summary if summary is not None else (None, None)
            features[f"{quantity}_mean"] = mean
            features[f"{quantity}_std"] = std

        return features
