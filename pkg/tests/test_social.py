#!/usr/bin/env python3

"""Tests for the social features."""

import collections
import logging
import math
import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.abspath(__file__), "..", "..")))

# pylint: disable=wrong-import-position
from simple_behavior.config import RunConfig
from simple_behavior.exceptions import ValidationException
from simple_behavior.models import (
    Point2D,
    Trajectory,
    angle_difference,
    default_floorplan,
    social_feature_names,
)
from simple_behavior.social import (
    Frame,
    GroupFormation,
    PersonState,
    SocialClient,
    build_frames,
    detect_groups,
    normalized_group_count,
    smooth_groups,
)
from simple_behavior.types import RegionName, TrackId

from tests import make_config, make_session, make_trajectory


def person(name: str, x: float, y: float, orientation: float | None) -> PersonState:
    """Build a person state."""
    return PersonState(TrackId(name), Point2D(x, y), orientation)


def group(t: int, *members: str) -> GroupFormation:
    """Build a group in the gym."""
    member_ids = frozenset(TrackId(name) for name in members)
    return GroupFormation(t, member_ids, Point2D(1, 1), RegionName("gym"))


def random_session(seed: int, people: int = 6, duration: int = 40):
    """Wander people around a small area of the gym with random orientations."""
    generator = np.random.default_rng(seed)
    trajectories = []
    for index in range(people):
        steps = generator.normal(0.0, 0.3, size=(duration, 2))
        positions = generator.uniform(4.0, 8.0, 2) + np.cumsum(steps, axis=0)
        orientations = generator.uniform(0.0, 360.0, duration)
        trajectories.append(
            make_trajectory(
                f"p{index}",
                [tuple(position) for position in positions.tolist()],
                orientations=orientations.tolist(),
            )
        )
    return make_session(trajectories, duration=duration)


def recount(session, d_max: float = 2.0, facing_deg: float = 120.0) -> list[float]:
    """Recount the normalized group count of every frame with plain loops."""
    frames: dict[int, list] = {}
    for trajectory in session.trajectories:
        for sample in trajectory.samples:
            frames.setdefault(sample.t, []).append(sample)

    values = []
    for t in sorted(frames):
        samples = frames[t]
        parent = list(range(len(samples)))

        def find(index: int) -> int:
            while parent[index] != index:
                index = parent[index]
            return index

        for i, first in enumerate(samples):
            for j in range(i + 1, len(samples)):
                second = samples[j]
                if first.position.distance_to(second.position) > d_max:
                    continue
                there = first.position.bearing_to(second.position)
                back = second.position.bearing_to(first.position)
                if abs(angle_difference(first.orientation, there)) > facing_deg:
                    continue
                if abs(angle_difference(second.orientation, back)) > facing_deg:
                    continue
                parent[find(j)] = find(i)

        sizes: dict[int, int] = {}
        for index in range(len(samples)):
            root = find(index)
            sizes[root] = sizes.get(root, 0) + 1

        groups = [size for size in sizes.values() if size >= 2]
        if groups:
            values.append(len(groups) / sum(groups))

    return values


class DetectGroupsTests(unittest.TestCase):
    """Test frame-level group detection."""

    def setUp(self) -> None:
        self.plan = default_floorplan()

    def test_triangle(self) -> None:
        """Test three people facing the centroid of a 1 m triangle."""
        corners = [(5.0, 5.0), (6.0, 5.0), (5.5, 5.0 + math.sqrt(3.0) / 2.0)]
        cx = sum(x for x, _ in corners) / 3.0
        cy = sum(y for _, y in corners) / 3.0
        people = tuple(
            person(f"p{index}", x, y, math.degrees(math.atan2(cy - y, cx - x)) % 360.0)
            for index, (x, y) in enumerate(corners)
        )

        groups = detect_groups(Frame(0, people), self.plan)

        self.assertEqual(len(groups), 1)
        self.assertEqual(groups[0].member_ids, frozenset({"p0", "p1", "p2"}))
        self.assertEqual(groups[0].region, "gym")

    def test_back_to_back(self) -> None:
        """Test that people facing away from each other are not a group."""
        people = (person("a", 5.0, 5.0, 180.0), person("b", 6.0, 5.0, 0.0))
        self.assertEqual(detect_groups(Frame(0, people), self.plan), [])

    def test_far_apart(self) -> None:
        """Test that people facing each other from 5 m are not a group."""
        people = (person("a", 5.0, 5.0, 0.0), person("b", 10.0, 5.0, 180.0))
        self.assertEqual(detect_groups(Frame(0, people), self.plan), [])

    def test_missing_orientation(self) -> None:
        """Test that only two people without orientations skip the facing check."""
        both = (person("a", 5.0, 5.0, None), person("b", 6.0, 5.0, None))
        self.assertEqual(len(detect_groups(Frame(0, both), self.plan)), 1)

        one = (person("a", 5.0, 5.0, None), person("b", 6.0, 5.0, 180.0))
        self.assertEqual(detect_groups(Frame(0, one), self.plan), [])

    def test_chain(self) -> None:
        """Test that groups are connected components, not cliques."""
        people = (
            person("a", 1.0, 5.0, None),
            person("b", 2.8, 5.0, None),
            person("c", 4.6, 5.0, None),
        )
        groups = detect_groups(Frame(0, people), self.plan)

        self.assertEqual(len(groups), 1)
        self.assertEqual(len(groups[0].member_ids), 3)

    def test_centroid_region(self) -> None:
        """Test that a group is placed in the region of its centroid."""
        people = (person("a", 14.5, 5.0, None), person("b", 16.0, 5.0, None))
        groups = detect_groups(Frame(0, people), self.plan)
        self.assertEqual(groups[0].region, "other")

    def test_single_person(self) -> None:
        """Test that one person is never a group."""
        self.assertEqual(detect_groups(Frame(0, (person("a", 1, 1, 0.0),)), self.plan), [])


def random_frame(generator: np.random.Generator, t: int = 0, people: int = 8) -> Frame:
    """Scatter people over a few square meters, some of them without an orientation."""
    states = []
    for index in range(people):
        x, y = generator.uniform(3.0, 9.0, 2)
        orientation = None if generator.random() < 0.25 else float(generator.uniform(0, 360))
        states.append(person(f"p{index}", float(x), float(y), orientation))
    return Frame(t, tuple(states))


class GroupInvariantTests(unittest.TestCase):
    """Test properties of group detection that hold for any frame."""

    def setUp(self) -> None:
        self.plan = default_floorplan()

    def test_rigid_motion(self) -> None:
        """Test that rotating and shifting everybody together keeps the same groups."""
        generator = np.random.default_rng(11)

        for _ in range(50):
            frame = random_frame(generator)
            angle = float(generator.uniform(0.0, 360.0))
            shift = generator.uniform(-50.0, 50.0, 2)
            cos, sin = math.cos(math.radians(angle)), math.sin(math.radians(angle))

            moved = Frame(
                frame.t,
                tuple(
                    person(
                        state.track_id,
                        cos * state.position.x - sin * state.position.y + shift[0],
                        sin * state.position.x + cos * state.position.y + shift[1],
                        None if state.orientation is None else (state.orientation + angle) % 360,
                    )
                    for state in frame.people
                ),
            )

            self.assertEqual(
                [group.member_ids for group in detect_groups(frame, self.plan)],
                [group.member_ids for group in detect_groups(moved, self.plan)],
            )

    def test_region_counts_sum(self) -> None:
        """Test that the groups of every region add up to all groups of the frame."""
        generator = np.random.default_rng(12)
        regions = set(self.plan.region_names)

        for _ in range(50):
            groups = detect_groups(random_frame(generator, people=12), self.plan)
            per_region = collections.Counter(group.region for group in groups)

            self.assertEqual(sum(per_region.values()), len(groups))
            assert set(per_region) <= regions

    def test_smoothing_is_subset(self) -> None:
        """Test that smoothing only ever removes groups."""
        generator = np.random.default_rng(13)

        for _ in range(20):
            formations = {
                t: detect_groups(random_frame(generator, t, people=5), self.plan)
                for t in range(30)
            }
            persist = int(generator.integers(1, 5))
            smoothed = smooth_groups(formations, persist)

            self.assertEqual(list(smoothed), list(formations))
            for t, groups in smoothed.items():
                assert all(group in formations[t] for group in groups)


class SmoothingTests(unittest.TestCase):
    """Test group persistence smoothing."""

    def test_flicker_removed(self) -> None:
        """Test that a group seen for one second is removed."""
        smoothed = smooth_groups({0: [], 1: [group(1, "a", "b")], 2: []}, 3)
        self.assertEqual(smoothed, {0: [], 1: [], 2: []})

    def test_persistent_kept(self) -> None:
        """Test that a group seen for three seconds is kept in all of them."""
        formations = {t: [group(t, "a", "b")] for t in range(3)}
        self.assertEqual(smooth_groups(formations, 3), formations)

    def test_identity(self) -> None:
        """Test that a persistence of one second changes nothing."""
        formations = {0: [group(0, "a", "b")], 1: [], 2: [group(2, "a", "c")]}
        self.assertEqual(smooth_groups(formations, 1), formations)

    def test_runs_judged_separately(self) -> None:
        """Test that only the long run of an interrupted group survives."""
        formations = {t: [group(t, "a", "b")] for t in (0, 1, 3, 4, 5)}
        smoothed = smooth_groups(formations, 3)

        self.assertEqual([t for t, groups in smoothed.items() if groups], [3, 4, 5])

    def test_membership_change_is_new_group(self) -> None:
        """Test that a group that gains a member starts a new run."""
        formations = {
            0: [group(0, "a", "b")],
            1: [group(1, "a", "b")],
            2: [group(2, "a", "b", "c")],
        }
        smoothed = smooth_groups(formations, 2)

        self.assertEqual(len(smoothed[1]), 1)
        self.assertEqual(smoothed[2], [])


class GroupCountTests(unittest.TestCase):
    """Test the normalized group count."""

    def test_examples(self) -> None:
        """Test two groups of six people and one group of ten."""
        self.assertAlmostEqual(normalized_group_count(2, 6), 1.0 / 3.0)
        self.assertAlmostEqual(normalized_group_count(1, 10), 0.1)
        self.assertIsNone(normalized_group_count(0, 0))

    def test_inconsistent(self) -> None:
        """Test that a group needs at least two participants."""
        with self.assertRaises(ValidationException):
            normalized_group_count(2, 3)


class SocialFeatureTests(unittest.TestCase):
    """Test the per-session social features."""

    def setUp(self) -> None:
        self.plan = default_floorplan()
        self.client = SocialClient(RunConfig.default(), logging.getLogger("test"))

    def test_no_groups(self) -> None:
        """Test that a session without groups is fully masked."""
        lonely = make_trajectory("a", [(2.0, 2.0)] * 10)
        features = self.client.social_features(make_session([lonely], duration=10), self.plan)

        self.assertEqual(list(features), social_feature_names(self.plan.region_names))
        self.assertEqual(len(features), 18)
        assert all(value is None for value in features.values())

    def test_persistent_pair(self) -> None:
        """Test a pair facing each other in the gym for a whole session."""
        first = make_trajectory("a", [(5.0, 5.0)] * 20, orientations=[0.0] * 20)
        second = make_trajectory("b", [(6.0, 5.0)] * 20, orientations=[180.0] * 20)
        session = make_session([first, second], duration=20)
        features = self.client.social_features(session, self.plan)

        self.assertEqual(features["group_count_mean"], 0.5)
        self.assertEqual(features["group_count_std"], 0.0)
        self.assertEqual(features["group_count_gym_mean"], 0.5)
        self.assertEqual(features["group_count_gym_std"], 0.0)
        for region in self.plan.region_names:
            if region != "gym":
                self.assertIsNone(features[f"group_count_{region}_mean"])

    def test_matches_recount(self) -> None:
        """Test the per-frame counts against a plain loop recount."""
        client = SocialClient(make_config(social={"min_persist_s": 1}), logging.getLogger("test"))

        for seed in range(3):
            session = random_session(seed)
            raw = client.social_raw(session, self.plan)

            np.testing.assert_allclose(raw.overall, recount(session))
            assert all(value <= 0.5 for value in raw.overall)

    def test_track_order_irrelevant(self) -> None:
        """Test that renaming and reordering the tracks leaves the features unchanged."""
        session = random_session(4)
        renamed = make_session(
            [
                Trajectory(TrackId(f"q{9 - index}"), trajectory.samples)
                for index, trajectory in reversed(list(enumerate(session.trajectories)))
            ],
            duration=session.duration,
        )

        original = self.client.social_features(session, self.plan)
        permuted = self.client.social_features(renamed, self.plan)

        for name, value in original.items():
            if value is None:
                self.assertIsNone(permuted[name])
            else:
                self.assertAlmostEqual(permuted[name], value, msg=name)

    def test_frames(self) -> None:
        """Test that frames collect everybody present at each second."""
        first = make_trajectory("a", [(1.0, 1.0), (2.0, 1.0)], start=0)
        second = make_trajectory("b", [(3.0, 3.0), (3.0, 4.0)], start=1)
        frames = build_frames(make_session([first, second], duration=10))

        self.assertEqual([frame.t for frame in frames], [0, 1, 2])
        self.assertEqual(len(frames[1].people), 2)
        self.assertEqual(frames[0].people[0].orientation, 0.0)
        self.assertEqual(frames[2].people[0].orientation, 90.0)
