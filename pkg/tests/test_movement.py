#!/usr/bin/env python3

"""Tests for the movement features."""

import logging
import math
import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.abspath(__file__), "..", "..")))

# pylint: disable=wrong-import-position
from simple_behavior.config import OrientationSource, RunConfig
from simple_behavior.exceptions import UndefinedAngleException
from simple_behavior.models import Point2D, TrackSample, Trajectory, movement_feature_names
from simple_behavior.movement import (
    LinearPath,
    MovementClient,
    direction_change_angle,
    fit_levy,
    levy_log_likelihood,
    moving_points,
    orientation_change_series,
    path_speed,
    sample_entropy,
    segment_linear_paths,
    velocity_series,
)
from simple_behavior.types import TrackId

from tests import make_config, make_session, make_trajectory


def naive_sample_entropy(series: list[float], m: int, r: float) -> float | None:
    """Count template matches with a plain double loop."""
    count = len(series) - m

    def matches(length: int) -> int:
        total = 0
        for i in range(count):
            for j in range(i + 1, count):
                distance = max(abs(series[i + k] - series[j + k]) for k in range(length))
                if distance <= r:
                    total += 1
        return total

    shorter, longer = matches(m), matches(m + 1)
    if shorter == 0 or longer == 0:
        return None
    return -math.log(longer / shorter)


def random_walk(seed: int, steps: int = 200) -> list[tuple[float, float]]:
    """Walk with random headings and step lengths well above the stationary threshold."""
    generator = np.random.default_rng(seed)
    headings = np.cumsum(generator.normal(0.0, 0.6, steps))
    lengths = generator.uniform(0.5, 1.5, steps)
    x = np.concatenate([[0.0], np.cumsum(lengths * np.cos(headings))])
    y = np.concatenate([[0.0], np.cumsum(lengths * np.sin(headings))])
    return list(zip(x.tolist(), y.tolist()))


class DirectionChangeTests(unittest.TestCase):
    """Test the turn angle."""

    def test_examples(self) -> None:
        """Test straight, right-angle and reversing steps."""
        origin, east = Point2D(0, 0), Point2D(1, 0)
        self.assertAlmostEqual(direction_change_angle(origin, east, Point2D(2, 0)), 0.0)
        self.assertAlmostEqual(direction_change_angle(origin, east, Point2D(1, 1)), 90.0)
        self.assertAlmostEqual(direction_change_angle(origin, east, Point2D(0.5, 0)), 180.0)

    def test_turn_side_irrelevant(self) -> None:
        """Test that a left and a right turn of 30 degrees give the same angle."""
        generator = np.random.default_rng(8)
        for _ in range(20):
            heading = float(generator.uniform(0.0, 2.0 * math.pi))
            p1 = Point2D(*(float(value) for value in generator.uniform(-10.0, 10.0, 2)))
            p2 = Point2D(p1.x + math.cos(heading), p1.y + math.sin(heading))

            turns = []
            for turn in (math.radians(30.0), -math.radians(30.0)):
                onward = heading + turn
                p3 = Point2D(p2.x + 2.0 * math.cos(onward), p2.y + 2.0 * math.sin(onward))
                turns.append(direction_change_angle(p1, p2, p3))

            self.assertAlmostEqual(turns[0], turns[1], places=7)
            self.assertAlmostEqual(turns[0], 30.0, places=7)

    def test_zero_length_segment(self) -> None:
        """Test that a repeated position has no defined angle."""
        with self.assertRaises(UndefinedAngleException):
            direction_change_angle(Point2D(0, 0), Point2D(0, 0), Point2D(1, 0))


class LinearPathTests(unittest.TestCase):
    """Test linear path segmentation and speed."""

    def test_straight_walk(self) -> None:
        """Test that a straight walk is one path."""
        trajectory = make_trajectory("p", [(float(i), 0.0) for i in range(5)])
        paths = segment_linear_paths(trajectory)

        self.assertEqual(len(paths), 1)
        self.assertAlmostEqual(paths[0].length, 4.0)
        self.assertEqual(paths[0].n, 5)

    def test_corner(self) -> None:
        """Test that an L-shaped walk is two paths sharing the corner."""
        trajectory = make_trajectory("p", [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)])
        paths = segment_linear_paths(trajectory)

        self.assertEqual(len(paths), 2)
        self.assertEqual(paths[0].points[-1], paths[1].points[0])
        self.assertAlmostEqual(sum(path.length for path in paths), 4.0)

    def test_stationary_track(self) -> None:
        """Test that a standing person has no paths."""
        trajectory = make_trajectory("p", [(1.0, 1.0 + 0.01 * i) for i in range(10)])
        self.assertEqual(segment_linear_paths(trajectory), [])

    def test_jitter_filtered(self) -> None:
        """Test that sub-threshold jitter does not break a straight path."""
        trajectory = make_trajectory("p", [(0, 0), (1, 0), (1.05, 0.1), (2, 0), (3, 0)])
        self.assertEqual(len(segment_linear_paths(trajectory)), 1)

    def test_segment_count_matches_angle_scan(self) -> None:
        """Test the segment count against a direct scan of interior angles."""
        for seed in range(5):
            points = np.array(random_walk(seed))
            steps = np.diff(points, axis=0)
            norms = np.linalg.norm(steps, axis=1)
            cosines = np.sum(steps[:-1] * steps[1:], axis=1) / (norms[:-1] * norms[1:])
            angles = np.degrees(np.arccos(np.clip(cosines, -1.0, 1.0)))
            expected = 1 + int(np.count_nonzero(angles > 20.0))

            trajectory = make_trajectory("p", [tuple(point) for point in points])
            self.assertEqual(len(segment_linear_paths(trajectory, 20.0)), expected)

    def test_lengths_add_up(self) -> None:
        """Test that the paths of a walk cover exactly its moving length."""
        generator = np.random.default_rng(9)

        for seed in range(20):
            points = random_walk(seed, int(generator.integers(3, 300)))
            # Sprinkle in sub-threshold jitter for the stationary filter to remove
            jittered = []
            for x, y in points:
                jittered.append((x, y))
                if generator.random() < 0.2:
                    jittered.append((x + 0.05, y - 0.05))

            trajectory = make_trajectory("p", jittered)
            moving = moving_points(trajectory, 0.25)
            expected = sum(a.distance_to(b) for a, b in zip(moving, moving[1:]))

            paths = segment_linear_paths(trajectory, 20.0, 0.25)

            self.assertAlmostEqual(sum(path.length for path in paths), expected, places=9)
            for first, second in zip(paths, paths[1:]):
                self.assertEqual(first.points[-1], second.points[0])

    def test_path_speed(self) -> None:
        """Test both speed conventions."""
        path = LinearPath(tuple(Point2D(0.0, y) for y in (0.0, 1.0, 2.0, 4.0)))
        self.assertAlmostEqual(path_speed(path), 1.0)
        self.assertAlmostEqual(path_speed(path, fencepost_correct=True), 4.0 / 3.0)


class VelocityTests(unittest.TestCase):
    """Test the velocity series."""

    def test_examples(self) -> None:
        """Test a straight walk and a standing person."""
        walk = make_trajectory("p", [(0, 0), (1, 0), (2, 0)])
        self.assertEqual(velocity_series(walk), [1.0, 1.0])
        self.assertEqual(velocity_series(make_trajectory("p", [(3, 3)] * 4)), [0.0, 0.0, 0.0])

    def test_matches_step_distances(self) -> None:
        """Test against recomputed per-step distances, including a dropout."""
        points = random_walk(7, 20)
        trajectory = make_trajectory("p", points)
        expected = [math.dist(a, b) for a, b in zip(points, points[1:])]
        np.testing.assert_allclose(velocity_series(trajectory), expected)

        gappy = Trajectory(
            TrackId("p"), (TrackSample(0, Point2D(0, 0)), TrackSample(2, Point2D(2, 0)))
        )
        self.assertEqual(velocity_series(gappy), [1.0])


class SampleEntropyTests(unittest.TestCase):
    """Test sample entropy."""

    def test_constant_series(self) -> None:
        """Test that a constant series has zero entropy."""
        self.assertEqual(sample_entropy([1, 1, 1, 1, 1, 1]), 0.0)

    def test_alternating_series(self) -> None:
        """Test a periodic series against the double loop."""
        series = [1.0, 2.0, 1.0, 2.0, 1.0, 2.0]
        self.assertEqual(sample_entropy(series, 2, r=0.5), naive_sample_entropy(series, 2, 0.5))

    def test_ramp_undefined(self) -> None:
        """Test that a ramp with a tolerance below its step has no matches."""
        self.assertIsNone(sample_entropy([float(i) for i in range(20)], 2, r=0.5))

    def test_short_series(self) -> None:
        """Test that a series shorter than m + 2 is undefined."""
        self.assertIsNone(sample_entropy([1.0, 2.0, 3.0]))

    def test_random_series(self) -> None:
        """Test 100 random series of up to 300 values against the double loop."""
        generator = np.random.default_rng(3)
        defined = 0

        for index in range(100):
            size = int(generator.integers(4, 301))
            if index % 3 == 0:
                series = generator.normal(size=size)
            elif index % 3 == 1:
                series = np.cumsum(generator.normal(size=size))
            else:
                series = np.round(generator.uniform(0.0, 3.0, size), 1)
            m = int(generator.integers(1, 4))
            r_factor = float(generator.choice([0.1, 0.2, 0.3]))

            values = series.tolist()
            expected = naive_sample_entropy(values, m, r_factor * float(np.std(values)))
            actual = sample_entropy(values, m, r_factor)

            if expected is None:
                self.assertIsNone(actual, index)
                continue

            defined += 1
            assert actual is not None
            self.assertAlmostEqual(actual, expected, delta=1e-9, msg=index)
            self.assertGreaterEqual(actual, 0.0)

        self.assertGreater(defined, 50)


class OrientationTests(unittest.TestCase):
    """Test the orientation change series."""

    def test_straight_walk(self) -> None:
        """Test that a straight walk never turns."""
        trajectory = make_trajectory("p", [(float(i), float(i)) for i in range(6)])
        np.testing.assert_allclose(orientation_change_series(trajectory), [0.0] * 4, atol=1e-9)

    def test_staircase(self) -> None:
        """Test that alternating right-angle turns alternate in sign."""
        trajectory = make_trajectory("p", [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (3, 2)])
        np.testing.assert_allclose(
            orientation_change_series(trajectory), [90.0, -90.0, 90.0, -90.0]
        )

    def test_wrap_around(self) -> None:
        """Test that a heading of 170 then -170 degrees changes by 20."""
        first = math.radians(170.0)
        second = math.radians(-170.0)
        p2 = (math.cos(first), math.sin(first))
        p3 = (p2[0] + math.cos(second), p2[1] + math.sin(second))

        series = orientation_change_series(make_trajectory("p", [(0.0, 0.0), p2, p3]))
        self.assertEqual(len(series), 1)
        self.assertAlmostEqual(series[0], 20.0)

    def test_body_orientation(self) -> None:
        """Test using the tracked orientation, falling back to headings when incomplete."""
        points = [(0, 0), (1, 0), (2, 0), (3, 0)]
        body = make_trajectory("p", points, orientations=[350.0, 10.0, 20.0, 0.0])
        self.assertEqual(
            orientation_change_series(body, source=OrientationSource.BODY), [20.0, 10.0, -20.0]
        )

        partial = make_trajectory("p", points, orientations=[350.0, None, 20.0, 0.0])
        self.assertEqual(
            orientation_change_series(partial, source=OrientationSource.BODY), [0.0, 0.0]
        )


class LevyTests(unittest.TestCase):
    """Test the Levy fit."""

    def setUp(self) -> None:
        generator = np.random.default_rng(11)
        self.samples = (1.0 / generator.standard_normal(2000) ** 2).tolist()

    def test_recovery(self) -> None:
        """Test recovering the location and scale of inverse-square normal samples."""
        fit = fit_levy(self.samples)

        assert fit is not None
        self.assertLess(abs(fit.mu), 0.05)
        self.assertLess(abs(fit.c - 1.0), 0.1)

    def test_recovery_many_seeds(self) -> None:
        """Test recovery on 20 seeded datasets of 2000 samples."""
        for seed in range(20):
            generator = np.random.default_rng(100 + seed)
            samples = (1.0 / generator.standard_normal(2000) ** 2).tolist()

            fit = fit_levy(samples)

            assert fit is not None, seed
            self.assertLess(abs(fit.mu), 0.05, seed)
            self.assertLess(abs(fit.c - 1.0), 0.1, seed)

    def test_beats_grid(self) -> None:
        """Test that no point of a 100 by 100 grid of location and scale scores higher."""
        generator = np.random.default_rng(12)

        for mu, c in ((0.0, 1.0), (0.5, 0.3), (2.0, 2.0)):
            samples = (mu + c / generator.standard_normal(300) ** 2).tolist()
            fit = fit_levy(samples)
            assert fit is not None

            self.assertAlmostEqual(
                fit.log_likelihood, levy_log_likelihood(samples, fit.mu, fit.c), places=6
            )

            best = -math.inf
            for grid_mu in np.linspace(0.0, min(samples) - 1e-6, 100):
                for grid_c in np.linspace(0.01 * fit.c, 3.0 * fit.c, 100):
                    best = max(best, levy_log_likelihood(samples, float(grid_mu), float(grid_c)))

            self.assertLessEqual(best, fit.log_likelihood + 1e-6)

    def test_translation(self) -> None:
        """Test that shifting the samples shifts only the location."""
        fit = fit_levy(self.samples)
        shifted = fit_levy([value + 3.0 for value in self.samples])

        assert fit is not None and shifted is not None
        self.assertAlmostEqual(shifted.mu, fit.mu + 3.0, delta=0.01)
        self.assertAlmostEqual(shifted.c, fit.c, delta=0.02 * fit.c)

    def test_masked(self) -> None:
        """Test that too few or identical samples give no fit."""
        self.assertIsNone(fit_levy([1.0, 2.0, 3.0, 4.0]))
        self.assertIsNone(fit_levy([2.0] * 10))


class MovementFeatureTests(unittest.TestCase):
    """Test the per-session movement features."""

    def setUp(self) -> None:
        self.client = MovementClient(RunConfig.default(), logging.getLogger("test"))

    def test_empty_session(self) -> None:
        """Test that a session without trajectories is fully masked."""
        features = self.client.movement_features(make_session([]))

        self.assertEqual(list(features), movement_feature_names())
        assert all(value is None for value in features.values())

    def test_straight_constant_speed(self) -> None:
        """Test a single straight walk at constant speed."""
        trajectory = make_trajectory("p", [(float(i), 2.0) for i in range(10)])
        features = self.client.movement_features(make_session([trajectory]))

        self.assertEqual(features["linear_path_length_mean"], 9.0)
        self.assertEqual(features["linear_path_length_std"], 0.0)
        self.assertAlmostEqual(features["walking_speed_mean"], 0.9)
        self.assertEqual(features["walking_speed_std"], 0.0)
        self.assertEqual(features["direction_change_mean"], 0.0)
        self.assertEqual(features["velocity_entropy_mean"], 0.0)
        self.assertEqual(features["orientation_entropy_mean"], 0.0)
        self.assertIsNone(features["levy_mu_mean"])
        self.assertIsNone(features["levy_c_std"])

    def test_fencepost_setting(self) -> None:
        """Test that the configured speed convention is used."""
        client = MovementClient(
            make_config(movement={"fencepost_correct": True}), logging.getLogger("test")
        )
        trajectory = make_trajectory("p", [(float(i), 2.0) for i in range(10)])
        features = client.movement_features(make_session([trajectory]))

        self.assertAlmostEqual(features["walking_speed_mean"], 1.0)

    def test_rotation_invariance(self) -> None:
        """Test that rotating and translating the floor leaves the features unchanged."""
        points = random_walk(5, 300)
        angle = math.radians(37.0)
        rotated = [
            (
                x * math.cos(angle) - y * math.sin(angle) + 100.0,
                x * math.sin(angle) + y * math.cos(angle) - 40.0,
            )
            for x, y in points
        ]

        original = self.client.movement_features(make_session([make_trajectory("p", points)]))
        moved = self.client.movement_features(make_session([make_trajectory("p", rotated)]))

        for name, value in original.items():
            if value is None:
                self.assertIsNone(moved[name])
            else:
                self.assertAlmostEqual(moved[name], value, places=6, msg=name)
