#!/usr/bin/env python3

# Copyright (c) Microsoft Corporation.
# Licensed under the MIT license.

"""Synthetic break sessions for two behavioral profiles."""

import dataclasses
import datetime
import enum
import logging
import math
import os
from typing import Sequence

import numpy as np
from scipy.stats import truncnorm

from simple_behavior.base_component import BaseComponent
from simple_behavior.config import NoiseConfig, RunConfig
from simple_behavior.exceptions import ValidationException
from simple_behavior.ingest import IngestClient
from simple_behavior.models import (
    BreakSession,
    Cohort,
    CohortLabel,
    FloorPlan,
    Point2D,
    SessionEntry,
    SessionManifest,
    TrackSample,
    split_on_gaps,
)
from simple_behavior.models.floorplan import Region
from simple_behavior.types import OTHER_REGION, CohortId, RegionName, SessionId, TrackId
from simple_behavior.utilities import derive_seed

# Radius of the circle group members stand on around the shared center
GROUP_RADIUS_M = 0.8
GROUP_MIN_DWELL_S = 5
PAUSE_MEAN_S = 10.0
LEVY_BOUT_CAP_M = 30.0
MIN_SPEED_M_S = 0.1
MIN_BOUT_M = 0.1
# Fraction of the session during which people arrive, and before the end during which they leave
PRESENCE_SLACK = 0.1

BREAK_DURATIONS_S = (900, 900, 1800)
STUDY_START = datetime.date(2023, 1, 2)

HIGH_COHORTS: dict[str, tuple[int, ...]] = {
    "A": (24, 26, 23, 25, 22, 27),
    "C": (23, 25, 28, 22, 24, 21),
    "E": (26, 22, 25, 24, 23, 27),
}
LOW_COHORTS: dict[str, tuple[int, ...]] = {
    "B": (17, 19, 20, 15, 18, 21),
    "D": (16, 20, 18, 19, 14, 17),
    "F": (19, 15, 21, 18, 16, 20),
}


def truncated_normal(
    generator: np.random.Generator, mean: float, std: float, lower: float
) -> float:
    """Draw from a normal distribution restricted to values above a bound.

    :param generator: The random generator
    :param mean: The mean of the untruncated distribution
    :param std: The standard deviation of the untruncated distribution
    :param lower: The exclusive lower bound

    :returns: The drawn value
    """
    if std == 0:
        return max(mean, lower)

    value = float(generator.normal(mean, std))
    if value > lower:
        return value

    # Conditioned on the first draw failing, this is still the truncated law
    low = (lower - mean) / std
    return float(truncnorm.rvs(low, np.inf, loc=mean, scale=std, random_state=generator))


class StepModelKind(enum.Enum):
    """The distribution walk bout lengths are drawn from."""

    LEVY = "levy"
    GAUSSIAN = "gaussian"


@dataclasses.dataclass(frozen=True)
class StepLengthModel:
    """The bout length distribution, in meters.

    For LEVY, location is mu and scale is c; for GAUSSIAN they are the mean
    and the standard deviation.
    """

    kind: StepModelKind
    location: float
    scale: float

    def sample(self, generator: np.random.Generator) -> float:
        """Draw a bout length.

        :param generator: The random generator

        :returns: A positive length in meters
        """
        if self.kind == StepModelKind.LEVY:
            normal = max(abs(float(generator.standard_normal())), 1e-9)
            return min(self.location + self.scale / normal**2, LEVY_BOUT_CAP_M)

        return truncated_normal(generator, self.location, self.scale, MIN_BOUT_M)


@dataclasses.dataclass(frozen=True)
class CohortProfile:
    """How the people of one class move and socialize."""

    label: CohortLabel
    step: StepLengthModel
    speed_mean: float
    speed_std: float
    turn_sigma_deg: float
    pause_probability: float
    group_rate_per_min: float
    group_sizes: tuple[tuple[int, float], ...]
    region_weights: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        levy = self.step.kind == StepModelKind.LEVY
        size_total = sum(weight for _, weight in self.group_sizes)
        region_total = sum(weight for _, weight in self.region_weights)

        checks = [
            (self.step.scale > 0 or not levy, "Levy scale must be > 0"),
            (self.step.scale >= 0, "step scale must be >= 0"),
            (self.step.location > 0 or levy, "mean step must be > 0"),
            (self.speed_mean > MIN_SPEED_M_S, f"speed mean must be > {MIN_SPEED_M_S}"),
            (self.speed_std >= 0, "speed std must be >= 0"),
            (self.turn_sigma_deg >= 0, "turn sigma must be >= 0"),
            (0 <= self.pause_probability <= 1, "pause probability must be in [0, 1]"),
            (0 <= self.group_rate_per_min <= 60, "group rate must be in [0, 60] per minute"),
            (all(size >= 2 for size, _ in self.group_sizes), "group sizes must be at least 2"),
            (all(weight >= 0 for _, weight in self.group_sizes), "group size weights must be >= 0"),
            (math.isclose(size_total, 1.0), "group size weights must sum to 1"),
            (all(weight >= 0 for _, weight in self.region_weights), "region weights must be >= 0"),
            (math.isclose(region_total, 1.0), "region weights must sum to 1"),
        ]

        for passed, message in checks:
            if not passed:
                raise ValidationException(f"Invalid {self.label.value} profile: {message}")

    @staticmethod
    def default_high() -> "CohortProfile":
        """Levy-like exploration, brisk and straight walking, frequent and larger groups."""
        return CohortProfile(
            label=CohortLabel.HIGH,
            step=StepLengthModel(StepModelKind.LEVY, 0.5, 1.2),
            speed_mean=1.2,
            speed_std=0.3,
            turn_sigma_deg=10.0,
            pause_probability=0.02,
            group_rate_per_min=0.35,
            group_sizes=((2, 0.6), (3, 0.3), (4, 0.1)),
            region_weights=(
                ("activity", 0.25),
                ("gym", 0.2),
                ("lounge", 0.2),
                ("dining", 0.15),
                ("tech_bar", 0.1),
                ("kitchen", 0.05),
                ("staff", 0.05),
            ),
        )

    @staticmethod
    def default_low() -> "CohortProfile":
        """Brownian-like wandering, slower and more erratic, fewer groups of mostly pairs."""
        return CohortProfile(
            label=CohortLabel.LOW,
            step=StepLengthModel(StepModelKind.GAUSSIAN, 1.0, 0.5),
            speed_mean=0.85,
            speed_std=0.3,
            turn_sigma_deg=35.0,
            pause_probability=0.04,
            group_rate_per_min=0.18,
            group_sizes=((2, 0.8), (3, 0.2)),
            region_weights=(
                ("dining", 0.3),
                ("lounge", 0.3),
                ("activity", 0.15),
                ("kitchen", 0.1),
                ("gym", 0.05),
                ("tech_bar", 0.05),
                ("staff", 0.05),
            ),
        )


@dataclasses.dataclass(frozen=True)
class NoiseModel:
    """Tracker error added to the ground truth.

    Position error is per-axis gaussian with marginal standard deviation
    localization_sigma_m, correlated over time as an AR(1) process.
    """

    localization_sigma_m: float = 0.0
    orientation_sigma_deg: float = 0.0
    dropout: float = 0.0
    correlation: float = 0.0

    def __post_init__(self) -> None:
        if self.localization_sigma_m < 0 or self.orientation_sigma_deg < 0:
            raise ValidationException("Noise standard deviations must be >= 0")

        if not 0 <= self.dropout < 1:
            raise ValidationException(f"Dropout must be in [0, 1): {self.dropout}")

        if not 0 <= self.correlation < 1:
            raise ValidationException(f"Noise correlation must be in [0, 1): {self.correlation}")

    @staticmethod
    def from_config(config: NoiseConfig) -> "NoiseModel":
        """Build the noise model from the simulation configuration.

        :param config: The noise section

        :returns: The noise model
        """
        return NoiseModel(
            config.localization_sigma_m,
            config.orientation_sigma_deg,
            config.dropout,
            config.correlation,
        )


def apply_position_noise(
    positions: np.ndarray, noise: NoiseModel, generator: np.random.Generator
) -> np.ndarray:
    """Add localization error to one person's positions.

    :param positions: The (T, 2) ground truth positions in time order
    :param noise: The noise model
    :param generator: The random generator

    :returns: The noisy positions
    """
    sigma = noise.localization_sigma_m
    if sigma == 0 or len(positions) == 0:
        return positions.copy()

    innovations = generator.standard_normal(positions.shape)
    errors = np.empty_like(innovations)
    errors[0] = sigma * innovations[0]
    step_scale = sigma * math.sqrt(1.0 - noise.correlation**2)

    for index in range(1, len(errors)):
        errors[index] = noise.correlation * errors[index - 1] + step_scale * innovations[index]

    return positions + errors


@dataclasses.dataclass
class _GroupEvent:
    center: np.ndarray
    end: int


class _Agent:
    """The ground truth walker of one simulated person."""

    def __init__(
        self,
        profile: CohortProfile,
        plan: FloorPlan,
        generator: np.random.Generator,
        start: np.ndarray,
        arrival: int,
        departure: int,
    ) -> None:
        self.profile = profile
        self.plan = plan
        self.generator = generator
        self.position = start
        self.arrival = arrival
        self.departure = departure
        self.heading = float(generator.uniform(0.0, 360.0))
        self.orientation = self.heading
        self.speed = profile.speed_mean
        self.bout_steps = 0
        self.pause_left = 0
        self.group: _GroupEvent | None = None
        self.slot = start
        self.arrived = False

    def present(self, t: int) -> bool:
        """Whether the person is in the facility at t."""
        return self.arrival <= t <= self.departure

    @property
    def free(self) -> bool:
        """Whether the person can join a group."""
        return self.group is None

    def join(self, event: _GroupEvent, slot: np.ndarray) -> None:
        """Send the person to a slot of a group."""
        self.group = event
        self.slot = slot
        self.arrived = False
        self.pause_left = 0

    def _new_bout(self) -> None:
        self.heading = float(self.generator.uniform(0.0, 360.0))
        self.speed = truncated_normal(
            self.generator, self.profile.speed_mean, self.profile.speed_std, MIN_SPEED_M_S
        )
        length = self.profile.step.sample(self.generator)
        self.bout_steps = max(1, int(round(length / self.speed)))

    def _reflect(self) -> None:
        bounds = self.plan.bounds
        x, y = float(self.position[0]), float(self.position[1])

        if x < bounds.min_x or x > bounds.max_x:
            x = 2 * bounds.min_x - x if x < bounds.min_x else 2 * bounds.max_x - x
            self.heading = (180.0 - self.heading) % 360.0
        if y < bounds.min_y or y > bounds.max_y:
            y = 2 * bounds.min_y - y if y < bounds.min_y else 2 * bounds.max_y - y
            self.heading = (-self.heading) % 360.0

        clamped = bounds.clamp(Point2D(x, y))
        self.position = np.array([clamped.x, clamped.y])

    def _walk(self) -> None:
        if self.bout_steps <= 0:
            self._new_bout()

        if self.profile.turn_sigma_deg > 0:
            turn = self.generator.normal(0.0, self.profile.turn_sigma_deg)
            self.heading = (self.heading + turn) % 360.0

        radians = math.radians(self.heading)
        step = self.speed * np.array([math.cos(radians), math.sin(radians)])
        self.position = self.position + step
        self._reflect()
        self.orientation = self.heading
        self.bout_steps -= 1

        if self.generator.random() < self.profile.pause_probability:
            self.pause_left = max(1, int(round(self.generator.exponential(PAUSE_MEAN_S))))
            self.bout_steps = 0

    def _approach(self, t: int) -> None:
        assert self.group is not None

        if t >= self.group.end:
            self.group = None
            self.bout_steps = 0
            self._walk()
            return

        if not self.arrived:
            offset = self.slot - self.position
            distance = float(np.hypot(*offset))
            step = max(self.speed, 1.0)
            if distance <= step:
                self.position = self.slot.copy()
                self.arrived = True
            else:
                self.position = self.position + offset * (step / distance)
                self.orientation = math.degrees(math.atan2(offset[1], offset[0])) % 360.0
                return

        to_center = self.group.center - self.position
        self.orientation = math.degrees(math.atan2(to_center[1], to_center[0])) % 360.0

    def advance(self, t: int) -> None:
        """Move the person to their ground truth state at t."""
        if t == self.arrival:
            return

        if self.group is not None:
            self._approach(t)
        elif self.pause_left > 0:
            self.pause_left -= 1
        else:
            self._walk()


def _weighted_choice(
    generator: np.random.Generator,
    options: Sequence[tuple[str, float]] | Sequence[tuple[int, float]],
) -> int:
    weights = np.array([weight for _, weight in options], dtype=float)
    return int(generator.choice(len(options), p=weights / weights.sum()))


def _preferred_region(
    profile: CohortProfile, plan: FloorPlan, generator: np.random.Generator
) -> Region:
    """Pick a region by the profile's preferences among the regions the plan has."""
    names = set(plan.region_names)
    options = [(name, weight) for name, weight in profile.region_weights if name in names]

    if not options or sum(weight for _, weight in options) <= 0:
        named = [name for name in plan.region_names if name != OTHER_REGION] or [OTHER_REGION]
        options = [(name, 1.0) for name in named]

    return plan.region(RegionName(options[_weighted_choice(generator, options)][0]))


def _point_in(region: Region, generator: np.random.Generator) -> np.ndarray:
    min_x, min_y, max_x, max_y = region.shape.bounds
    for _ in range(20):
        candidate = Point2D(
            float(generator.uniform(min_x, max_x)), float(generator.uniform(min_y, max_y))
        )
        if region.contains(candidate):
            return np.array(candidate.as_tuple())

    inside = region.shape.representative_point()
    return np.array([inside.x, inside.y])


def _start_group(
    initiator: _Agent,
    agents: list[_Agent],
    t: int,
    generator: np.random.Generator,
) -> None:
    """Gather the initiator and some free people around a shared center."""
    others = [
        agent
        for agent in agents
        if agent is not initiator and agent.free and agent.present(t)
    ]
    if not others:
        return

    sizes = initiator.profile.group_sizes
    size = min(sizes[_weighted_choice(generator, sizes)][0], len(others) + 1)
    chosen = generator.choice(len(others), size=size - 1, replace=False)
    members = [initiator] + [others[int(index)] for index in sorted(chosen)]

    center = _point_in(_preferred_region(initiator.profile, initiator.plan, generator), generator)
    rotation = generator.uniform(0.0, 2 * math.pi)
    travel = max(float(np.hypot(*(center - member.position))) for member in members)
    dwell = max(GROUP_MIN_DWELL_S, int(round(generator.exponential(60.0))))
    event = _GroupEvent(center=center, end=t + int(math.ceil(travel)) + dwell)

    for index, member in enumerate(members):
        angle = rotation + 2 * math.pi * index / len(members)
        member.join(event, center + GROUP_RADIUS_M * np.array([math.cos(angle), math.sin(angle)]))


def simulate_session(
    profile: CohortProfile,
    plan: FloorPlan,
    duration_s: int,
    n_people: int,
    noise: NoiseModel,
    seed: int,
    session_id: SessionId = SessionId("sim"),
    cohort_id: CohortId = CohortId("sim"),
    companion_profile: CohortProfile | None = None,
    companion_fraction: float = 0.0,
    max_gap_s: int = 2,
) -> BreakSession:
    """Simulate one break session.

    Every person alternates straight walking bouts with pauses and joins
    group events, standing around a shared center facing it. Tracker noise
    and dropout are applied last, then positions are clamped to the plan
    and sampled at 1 Hz.

    :param profile: The behavior of the session's class
    :param plan: The floor plan
    :param duration_s: The length of the break in seconds
    :param n_people: How many people are tracked
    :param noise: The tracker noise
    :param seed: The seed; it fully determines the output
    :param session_id: The identifier of the session
    :param cohort_id: The cohort the session belongs to
    :param companion_profile: The profile of healthy companions (the profile itself when None)
    :param companion_fraction: The share of people who follow the companion profile
    :param max_gap_s: The largest sample gap kept inside one trajectory

    :returns: The session

    :raises ValidationException: If the parameters are invalid
    """
    if duration_s < 2:
        raise ValidationException(f"Session duration must be at least 2 s, got {duration_s}")

    if n_people < 1:
        raise ValidationException(f"A session needs at least one person, got {n_people}")

    if not 0 <= companion_fraction <= 1:
        raise ValidationException(f"Companion fraction must be in [0, 1]: {companion_fraction}")

    generator = np.random.default_rng(seed)
    companions = int(round(companion_fraction * n_people))
    slack = int(PRESENCE_SLACK * duration_s)

    agents = []
    for index in range(n_people):
        person_profile = profile
        if index < companions and companion_profile is not None:
            person_profile = companion_profile

        arrival = int(generator.integers(0, slack + 1))
        departure = duration_s - 1 - int(generator.integers(0, slack + 1))
        start = _point_in(_preferred_region(person_profile, plan, generator), generator)
        agents.append(_Agent(person_profile, plan, generator, start, arrival, departure))

    truth: list[list[tuple[int, float, float, float]]] = [[] for _ in agents]

    for t in range(duration_s):
        for agent in agents:
            if agent.present(t):
                agent.advance(t)

        for agent in agents:
            if agent.present(t) and agent.free and agent.pause_left == 0:
                if generator.random() < agent.profile.group_rate_per_min / 60.0:
                    _start_group(agent, agents, t, generator)

        for index, agent in enumerate(agents):
            if agent.present(t):
                truth[index].append(
                    (t, float(agent.position[0]), float(agent.position[1]), agent.orientation)
                )

    trajectories = []
    for index, observed in enumerate(truth):
        track_id = TrackId(f"p{index:02d}")
        times = np.array([sample[0] for sample in observed], dtype=int)
        positions = apply_position_noise(
            np.array([sample[1:3] for sample in observed], dtype=float), noise, generator
        )
        orientations = np.array([sample[3] for sample in observed], dtype=float)
        if noise.orientation_sigma_deg > 0:
            orientations = orientations + generator.normal(
                0.0, noise.orientation_sigma_deg, len(orientations)
            )
        kept = generator.random(len(observed)) >= noise.dropout

        samples = []
        for t, (x, y), orientation, keep in zip(times, positions, orientations, kept):
            if not keep:
                continue
            position = plan.bounds.clamp(Point2D(round(float(x), 3), round(float(y), 3)))
            samples.append(
                TrackSample(int(t), position, round(float(orientation) % 360.0, 3) % 360.0)
            )

        split, _ = split_on_gaps(track_id, samples, max_gap_s)
        trajectories.extend(split)

    trajectories.sort(key=lambda trajectory: trajectory.track_id)
    return BreakSession(session_id, cohort_id, duration_s, tuple(trajectories))


@dataclasses.dataclass
class SimulatedStudy:
    """The sessions of a synthetic study and the manifest describing them."""

    sessions: list[BreakSession]
    manifest: SessionManifest


def study_manifest(sessions_high: int, sessions_low: int) -> SessionManifest:
    """Lay out a synthetic study.

    Sessions alternate between the classes. Each class has three cohorts that
    take turns, and every cohort has three breaks a day (900, 900 and 1800 s).

    :param sessions_high: The number of high functioning sessions
    :param sessions_low: The number of low functioning sessions

    :returns: The manifest
    """
    cohorts = [
        Cohort(CohortId(name), scores)
        for name, scores in sorted({**HIGH_COHORTS, **LOW_COHORTS}.items())
    ]
    breaks_taken = {cohort.cohort_id: 0 for cohort in cohorts}

    entries = []
    for index in range(max(sessions_high, sessions_low)):
        for names, count in (
            (sorted(HIGH_COHORTS), sessions_high),
            (sorted(LOW_COHORTS), sessions_low),
        ):
            if index >= count:
                continue

            cohort_id = CohortId(names[index % len(names)])
            taken = breaks_taken[cohort_id]
            breaks_taken[cohort_id] += 1

            date = STUDY_START + datetime.timedelta(days=taken // len(BREAK_DURATIONS_S))
            entries.append(
                SessionEntry(
                    SessionId(f"s{len(entries):04d}"),
                    cohort_id,
                    date.isoformat(),
                    BREAK_DURATIONS_S[taken % len(BREAK_DURATIONS_S)],
                )
            )

    return SessionManifest(entries, cohorts)


def simulate_study(
    high: CohortProfile,
    low: CohortProfile,
    sessions_per_class: int | tuple[int, int],
    plan: FloorPlan,
    noise: NoiseModel,
    seed: int,
    people: tuple[int, int] = (6, 12),
    companion_fraction: float = 0.3,
    max_gap_s: int = 2,
) -> SimulatedStudy:
    """Simulate a labeled study.

    :param high: The high functioning profile
    :param low: The low functioning profile
    :param sessions_per_class: Sessions per class, or (high, low) counts
    :param plan: The floor plan
    :param noise: The tracker noise
    :param seed: The root seed; session k uses a seed derived from it and k
    :param people: The inclusive range of people per session
    :param companion_fraction: The share of high profile companions in low sessions
    :param max_gap_s: The largest sample gap kept inside one trajectory

    :returns: The sessions and their manifest

    :raises ValidationException: If the parameters are invalid
    """
    if isinstance(sessions_per_class, int):
        sessions_high = sessions_low = sessions_per_class
    else:
        sessions_high, sessions_low = sessions_per_class

    if sessions_high < 1 or sessions_low < 1:
        raise ValidationException("A study needs at least one session per class")

    if not 1 <= people[0] <= people[1]:
        raise ValidationException(f"Invalid people range: {people}")

    manifest = study_manifest(sessions_high, sessions_low)
    sessions = []

    for index, entry in enumerate(manifest.sessions.values()):
        session_seed = derive_seed(seed, index)
        label = manifest.label_of(entry.session_id)
        profile = high if label == CohortLabel.HIGH else low
        people_generator = np.random.default_rng(derive_seed(session_seed, 0))
        n_people = int(people_generator.integers(people[0], people[1] + 1))

        sessions.append(
            simulate_session(
                profile,
                plan,
                entry.duration_s,
                n_people,
                noise,
                session_seed,
                session_id=entry.session_id,
                cohort_id=entry.cohort_id,
                companion_profile=high,
                companion_fraction=companion_fraction if label == CohortLabel.LOW else 0.0,
                max_gap_s=max_gap_s,
            )
        )

    return SimulatedStudy(sessions, manifest)


class SimulateClient(BaseComponent):
    """Generates synthetic studies from the simulation configuration.

    :param config: The run configuration
    :param log: The logger to use
    """

    def __init__(self, config: RunConfig, log: logging.Logger) -> None:
        super().__init__(config, log.getChild("simulate"))

    def simulate_study(
        self,
        plan: FloorPlan,
        high: CohortProfile | None = None,
        low: CohortProfile | None = None,
    ) -> SimulatedStudy:
        """Simulate the configured study.

        :param plan: The floor plan
        :param high: The high functioning profile (the default when None)
        :param low: The low functioning profile (the default when None)

        :returns: The sessions and their manifest
        """
        simulation = self.config.simulation
        self.log.info(
            f"Simulating {simulation.sessions_high} high and {simulation.sessions_low} "
            f"low functioning sessions (seed {self.config.seed})"
        )

        return simulate_study(
            high or CohortProfile.default_high(),
            low or CohortProfile.default_low(),
            (simulation.sessions_high, simulation.sessions_low),
            plan,
            NoiseModel.from_config(simulation.noise),
            self.config.seed,
            people=(simulation.people_min, simulation.people_max),
            companion_fraction=simulation.companion_fraction,
            max_gap_s=self.config.ingest.gap_split_s,
        )

    def write_study(
        self, study: SimulatedStudy, plan: FloorPlan, ingest: IngestClient
    ) -> dict[str, str]:
        """Write a study in the ingest formats to the configured paths.

        :param study: The study to write
        :param plan: The floor plan to write alongside it
        :param ingest: The ingest component that serializes the documents

        :returns: The written paths keyed by kind
        """
        paths = self.config.paths
        written = {
            "tracks": paths.tracks,
            "manifest": paths.manifest,
            "floorplan": paths.floorplan,
        }
        contents = {
            "tracks": ingest.serialize_tracks(study.sessions, paths.tracks_format),
            "manifest": ingest.dump_manifest(study.manifest, self.config.hash),
            "floorplan": ingest.dump_floorplan(plan, self.config.hash),
        }

        for kind, path in written.items():
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as output:
                output.write(contents[kind])
            self.log.debug(f"Wrote {kind} to {path}")

        return written
