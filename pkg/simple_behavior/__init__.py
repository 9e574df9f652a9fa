#!/usr/bin/env python3

# Copyright (c) Microsoft Corporation.
# Licensed under the MIT license.

"""Behavioral feature pipeline for indoor break-session trajectories."""

import concurrent.futures
import dataclasses
import logging
import os
from typing import Sequence

from simple_behavior.config import RunConfig
from simple_behavior.exceptions import InvariantException, MissingInputException
from simple_behavior.ingest import IngestClient
from simple_behavior.learn import ClassifierReport, FeatureSet, ImportanceEntry, LearnClient
from simple_behavior.models import (
    BreakSession,
    CohortLabel,
    FloorPlan,
    SessionFeatureVector,
    SessionManifest,
    feature_names,
)
from simple_behavior.models.features import GROUP_COUNT, MOVEMENT_QUANTITIES
from simple_behavior.movement import MovementClient
from simple_behavior.simulate import SimulateClient
from simple_behavior.social import SocialClient
from simple_behavior.stats import RankSumRow, StatsClient

# Order of the classification and importance panels
FEATURE_SETS = (FeatureSet.ALL, FeatureSet.SOCIAL, FeatureSet.MOVEMENT)

RAW_FEATURES = (*MOVEMENT_QUANTITIES, GROUP_COUNT)


@dataclasses.dataclass
class StudyInputs:
    """Everything read from the input files of a study."""

    plan: FloorPlan
    manifest: SessionManifest
    sessions: list[BreakSession]
    drops: dict[str, int]


class BehaviorPipeline:
    """Runs the behavioral feature pipeline.

    :param config: The run configuration (the defaults if not supplied)
    :param log: The logger to use (a new one will be used if one is not supplied)
    """

    # pylint: disable=too-many-instance-attributes

    log: logging.Logger

    config: RunConfig

    ingest: IngestClient
    movement: MovementClient
    social: SocialClient
    stats: StatsClient
    learn: LearnClient
    simulate: SimulateClient

    def __init__(self, config: RunConfig | None = None, log: logging.Logger | None = None) -> None:
        """Construct a new pipeline object."""

        if log is None:
            self.log = logging.getLogger("simple_behavior")
        else:
            self.log = log.getChild("simple_behavior")

        self.config = config if config is not None else RunConfig.default()

        self.ingest = IngestClient(self.config, self.log)
        self.movement = MovementClient(self.config, self.log)
        self.social = SocialClient(self.config, self.log)
        self.stats = StatsClient(self.config, self.log)
        self.learn = LearnClient(self.config, self.log)
        self.simulate = SimulateClient(self.config, self.log)

    def load_study(self) -> StudyInputs:
        """Read the floor plan, manifest and tracks named by the configuration.

        :returns: The parsed inputs

        :raises MissingInputException: If an input file does not exist
        :raises ValidationException: If an input is invalid
        """
        paths = self.config.paths

        for path in (paths.floorplan, paths.manifest, paths.tracks):
            if not os.path.isfile(path):
                raise MissingInputException(f"Input file not found: {path}")

        with open(paths.floorplan, encoding="utf-8") as plan_file:
            plan = self.ingest.load_floorplan(plan_file.read())

        with open(paths.manifest, encoding="utf-8") as manifest_file:
            manifest = self.ingest.load_manifest(manifest_file.read())

        with open(paths.tracks, "rb") as tracks_file:
            parsed = self.ingest.parse_tracks(tracks_file, paths.tracks_format, manifest, plan)

        return StudyInputs(plan, manifest, parsed.sessions, dict(parsed.drops))

    def session_features(
        self, session: BreakSession, plan: FloorPlan, label: CohortLabel
    ) -> SessionFeatureVector:
        """Compute the full feature vector of a session.

        :param session: The session
        :param plan: The floor plan
        :param label: The label of the session's cohort

        :returns: The movement features followed by the social features

        :raises InvariantException: If the features do not come out in canonical order
        """
        values = {
            **self.movement.movement_features(session),
            **self.social.social_features(session, plan),
        }
        names = feature_names(plan.region_names)

        if list(values) != names:
            raise InvariantException(
                f"Session {session.session_id} produced {len(values)} features "
                f"out of canonical order (expected {len(names)})"
            )

        return SessionFeatureVector(
            session.session_id, session.cohort_id, tuple(names), tuple(values.values()), label
        )

    def feature_vectors(
        self, sessions: Sequence[BreakSession], plan: FloorPlan, manifest: SessionManifest
    ) -> list[SessionFeatureVector]:
        """Compute the feature vector of every session.

        :param sessions: The sessions
        :param plan: The floor plan
        :param manifest: The manifest holding the cohort labels

        :returns: One vector per session, in input order
        """
        threshold = self.config.labels.moca_threshold

        def compute(session: BreakSession) -> SessionFeatureVector:
            return self.session_features(
                session, plan, manifest.label_of(session.session_id, threshold)
            )

        if self.config.threads <= 1:
            return [compute(session) for session in sessions]

        with concurrent.futures.ThreadPoolExecutor(max_workers=self.config.threads) as executor:
            return list(executor.map(compute, sessions))

    def raw_pools(
        self, sessions: Sequence[BreakSession], plan: FloorPlan, manifest: SessionManifest
    ) -> dict[CohortLabel, dict[str, list[float]]]:
        """Pool the raw per-path, per-trajectory and per-frame values by class.

        :param sessions: The sessions
        :param plan: The floor plan
        :param manifest: The manifest holding the cohort labels

        :returns: For each label, the pooled values of each raw feature
        """
        pools: dict[CohortLabel, dict[str, list[float]]] = {
            label: {feature: [] for feature in RAW_FEATURES} for label in CohortLabel
        }
        threshold = self.config.labels.moca_threshold

        for session in sessions:
            pool = pools[manifest.label_of(session.session_id, threshold)]
            movement = self.movement.movement_raw(session)
            for quantity in MOVEMENT_QUANTITIES:
                pool[quantity].extend(movement.pool(quantity))
            pool[GROUP_COUNT].extend(self.social.social_raw(session, plan).overall)

        return pools

    def rank_sum_table(
        self, sessions: Sequence[BreakSession], plan: FloorPlan, manifest: SessionManifest
    ) -> list[RankSumRow]:
        """Screen every raw feature between the classes.

        :param sessions: The sessions
        :param plan: The floor plan
        :param manifest: The manifest holding the cohort labels

        :returns: One row per raw feature
        """
        pools = self.raw_pools(sessions, plan, manifest)
        return self.stats.rank_sum_table(pools[CohortLabel.HIGH], pools[CohortLabel.LOW])

    def classify(self, vectors: Sequence[SessionFeatureVector]) -> list[ClassifierReport]:
        """Cross-validate every configured model on every feature subset.

        :param vectors: The session feature vectors

        :returns: The reports, subset by subset
        """
        reports = []
        for feature_set in FEATURE_SETS:
            reports.extend(self.learn.classify(vectors, feature_set))
        return reports

    def importance(
        self, vectors: Sequence[SessionFeatureVector]
    ) -> dict[FeatureSet, list[tuple[str, ImportanceEntry]]]:
        """Rank the features of every subset by permutation importance.

        :param vectors: The session feature vectors

        :returns: The ranked features of each subset
        """
        return {
            feature_set: self.learn.importance(vectors, feature_set) for feature_set in FEATURE_SETS
        }
