#!/usr/bin/env python3

# Copyright (c) Microsoft Corporation.
# Licensed under the MIT license.

"""Run configuration.

The configuration is a YAML document. Keys that are not supplied take the
built-in defaults below, then `SIMPLE_BEHAVIOR_<SECTION>__<KEY>` environment
variables apply, then command line overrides. The merged result is decoded
into the typed classes in this module.
"""

import copy
import enum
import os
from typing import Any, Dict, List, Mapping, Optional

import deserialize
import yaml

from simple_behavior.exceptions import MissingInputException, ValidationException
from simple_behavior.utilities import config_hash

ENVIRONMENT_PREFIX = "SIMPLE_BEHAVIOR_"


class ModelKind(enum.Enum):
    """The classifiers the learning component can train."""

    SVM_RBF = "svm_rbf"
    GBT = "gbt"
    LOGISTIC = "logistic"
    LASSO = "lasso"
    NEAREST = "nearest"


class TracksFormat(enum.Enum):
    """The wire formats of track files."""

    JSONL = "jsonl"
    CSV = "csv"


class OutputFormat(enum.Enum):
    """Which table formats the commands write."""

    CSV = "csv"
    JSON = "json"
    BOTH = "both"


class OrientationSource(enum.Enum):
    """Which angle the orientation-change series is built from."""

    HEADING = "heading"
    BODY = "body"


DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "threads": 1,
    "format": OutputFormat.BOTH.value,
    "log_level": "INFO",
    "paths": {
        "tracks": "tracks.jsonl",
        "manifest": "manifest.yaml",
        "floorplan": "floorplan.yaml",
        "output_dir": "output",
        "tracks_format": TracksFormat.JSONL.value,
    },
    "ingest": {
        "gap_split_s": 2,
        "out_of_bounds_margin_m": 1.0,
    },
    "labels": {
        "moca_threshold": 21.0,
    },
    "movement": {
        "split_deg": 20.0,
        "stationary_m": 0.25,
        "entropy_m": 2,
        "entropy_r": 0.2,
        "fencepost_correct": False,
        "orientation_source": OrientationSource.HEADING.value,
        "levy_min_samples": 5,
    },
    "social": {
        "d_max_m": 2.0,
        "facing_deg": 120.0,
        "min_persist_s": 3,
    },
    "stats": {
        "alpha": 0.05,
        "exact_cutoff": 12,
    },
    "learning": {
        "models": [
            ModelKind.SVM_RBF.value,
            ModelKind.GBT.value,
            ModelKind.LOGISTIC.value,
            ModelKind.LASSO.value,
        ],
        "global_scaling": False,
        "importance_model": ModelKind.SVM_RBF.value,
        "importance_repeats": 10,
        "svm": {"c": 1.0, "gamma": None, "tol": 1e-3, "max_passes": 200},
        "logistic": {"learning_rate": 0.1, "iterations": 2000},
        "lasso": {"learning_rate": 0.1, "iterations": 2000, "l1": 0.01},
        "gbt": {"trees": 100, "depth": 3, "learning_rate": 0.1, "subsample": 1.0},
    },
    "simulation": {
        "sessions_high": 80,
        "sessions_low": 80,
        "people_min": 6,
        "people_max": 12,
        "companion_fraction": 0.3,
        "noise": {
            "localization_sigma_m": 1.125,
            "orientation_sigma_deg": 36.0,
            "dropout": 0.01,
            "correlation": 0.9,
        },
    },
}


def _optional_float(value: Any) -> Optional[float]:
    return None if value is None else float(value)


class PathsConfig:
    """Where the inputs and outputs live."""

    tracks: str
    manifest: str
    floorplan: str
    output_dir: str
    tracks_format: TracksFormat


@deserialize.parser("out_of_bounds_margin_m", float)
class IngestConfig:
    """Track ingestion parameters."""

    gap_split_s: int
    out_of_bounds_margin_m: float


@deserialize.parser("moca_threshold", float)
class LabelsConfig:
    """Cohort labelling parameters."""

    moca_threshold: float


@deserialize.parser("split_deg", float)
@deserialize.parser("stationary_m", float)
@deserialize.parser("entropy_r", float)
class MovementConfig:
    """Movement feature parameters."""

    split_deg: float
    stationary_m: float
    entropy_m: int
    entropy_r: float
    fencepost_correct: bool
    orientation_source: OrientationSource
    levy_min_samples: int


@deserialize.parser("d_max_m", float)
@deserialize.parser("facing_deg", float)
class SocialConfig:
    """Group detection parameters."""

    d_max_m: float
    facing_deg: float
    min_persist_s: int


@deserialize.parser("alpha", float)
class StatsConfig:
    """Hypothesis testing parameters."""

    alpha: float
    exact_cutoff: int


@deserialize.parser("c", float)
@deserialize.parser("gamma", _optional_float)
@deserialize.parser("tol", float)
class SvmParameters:
    """RBF support vector machine hyperparameters. A missing gamma means 1/(d * variance)."""

    c: float
    gamma: Optional[float]
    tol: float
    max_passes: int


@deserialize.parser("learning_rate", float)
class LogisticParameters:
    """Logistic regression hyperparameters."""

    learning_rate: float
    iterations: int


@deserialize.parser("learning_rate", float)
@deserialize.parser("l1", float)
class LassoParameters:
    """L1 penalized logistic regression hyperparameters."""

    learning_rate: float
    iterations: int
    l1: float


@deserialize.parser("learning_rate", float)
@deserialize.parser("subsample", float)
class BoostingParameters:
    """Gradient boosted trees hyperparameters."""

    trees: int
    depth: int
    learning_rate: float
    subsample: float


class LearningConfig:
    """Classification parameters."""

    models: List[ModelKind]
    global_scaling: bool
    importance_model: ModelKind
    importance_repeats: int
    svm: SvmParameters
    logistic: LogisticParameters
    lasso: LassoParameters
    gbt: BoostingParameters


@deserialize.parser("localization_sigma_m", float)
@deserialize.parser("orientation_sigma_deg", float)
@deserialize.parser("dropout", float)
@deserialize.parser("correlation", float)
class NoiseConfig:
    """Tracker noise applied by the simulator."""

    localization_sigma_m: float
    orientation_sigma_deg: float
    dropout: float
    correlation: float


@deserialize.parser("companion_fraction", float)
class SimulationConfig:
    """Synthetic study shape."""

    sessions_high: int
    sessions_low: int
    people_min: int
    people_max: int
    companion_fraction: float
    noise: NoiseConfig


@deserialize.ignore("raw")
class RunConfig:
    """The complete configuration of a pipeline run."""

    # pylint: disable=too-many-instance-attributes

    seed: int
    threads: int
    format: OutputFormat
    log_level: str
    paths: PathsConfig
    ingest: IngestConfig
    labels: LabelsConfig
    movement: MovementConfig
    social: SocialConfig
    stats: StatsConfig
    learning: LearningConfig
    simulation: SimulationConfig

    raw: Dict[str, Any]

    @property
    def hash(self) -> str:
        """The hash of the merged configuration this object was decoded from."""
        return config_hash(self.raw)

    def validate(self) -> None:
        """Check every parameter is inside its valid range.

        :raises ValidationException: If a parameter is out of range
        """

        checks = [
            (self.seed >= 0, "seed must not be negative"),
            (self.threads >= 1, "threads must be at least 1"),
            (self.ingest.gap_split_s >= 1, "ingest.gap_split_s must be at least 1"),
            (self.ingest.out_of_bounds_margin_m >= 0, "ingest.out_of_bounds_margin_m must be >= 0"),
            (0 < self.movement.split_deg <= 180, "movement.split_deg must be in (0, 180]"),
            (self.movement.stationary_m >= 0, "movement.stationary_m must be >= 0"),
            (self.movement.entropy_m >= 1, "movement.entropy_m must be at least 1"),
            (self.movement.entropy_r > 0, "movement.entropy_r must be positive"),
            (self.movement.levy_min_samples >= 2, "movement.levy_min_samples must be at least 2"),
            (self.social.d_max_m > 0, "social.d_max_m must be positive"),
            (0 < self.social.facing_deg <= 180, "social.facing_deg must be in (0, 180]"),
            (self.social.min_persist_s >= 1, "social.min_persist_s must be at least 1"),
            (0 < self.stats.alpha < 1, "stats.alpha must be in (0, 1)"),
            (self.stats.exact_cutoff >= 0, "stats.exact_cutoff must be >= 0"),
            (len(self.learning.models) > 0, "learning.models must not be empty"),
            (self.learning.importance_repeats >= 0, "learning.importance_repeats must be >= 0"),
            (self.learning.svm.c > 0, "learning.svm.c must be positive"),
            (
                self.learning.svm.gamma is None or self.learning.svm.gamma > 0,
                "learning.svm.gamma must be positive",
            ),
            (self.learning.svm.tol > 0, "learning.svm.tol must be positive"),
            (self.learning.svm.max_passes >= 1, "learning.svm.max_passes must be at least 1"),
            (
                self.learning.logistic.learning_rate > 0,
                "learning.logistic.learning_rate must be > 0",
            ),
            (self.learning.lasso.learning_rate > 0, "learning.lasso.learning_rate must be > 0"),
            (self.learning.lasso.l1 >= 0, "learning.lasso.l1 must be >= 0"),
            (self.learning.gbt.trees >= 1, "learning.gbt.trees must be at least 1"),
            (self.learning.gbt.depth >= 1, "learning.gbt.depth must be at least 1"),
            (0 < self.learning.gbt.subsample <= 1, "learning.gbt.subsample must be in (0, 1]"),
            (self.simulation.sessions_high >= 0, "simulation.sessions_high must be >= 0"),
            (self.simulation.sessions_low >= 0, "simulation.sessions_low must be >= 0"),
            (
                1 <= self.simulation.people_min <= self.simulation.people_max,
                "simulation.people_min must be in [1, people_max]",
            ),
            (
                0 <= self.simulation.companion_fraction <= 1,
                "simulation.companion_fraction must be in [0, 1]",
            ),
            (self.simulation.noise.localization_sigma_m >= 0, "noise sigma must be >= 0"),
            (self.simulation.noise.orientation_sigma_deg >= 0, "noise sigma must be >= 0"),
            (0 <= self.simulation.noise.dropout < 1, "noise dropout must be in [0, 1)"),
            (0 <= self.simulation.noise.correlation < 1, "noise correlation must be in [0, 1)"),
        ]

        for passed, message in checks:
            if not passed:
                raise ValidationException(message)

    @staticmethod
    def default() -> "RunConfig":
        """Get the built-in configuration.

        :returns: The default configuration
        """
        return build_run_config({})


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    """Merge nested dictionaries, the override winning on conflicts.

    :param base: The base values
    :param override: The values to apply on top

    :returns: A new merged dictionary
    """
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def environment_overrides(
    environ: Mapping[str, str], prefix: str = ENVIRONMENT_PREFIX
) -> dict[str, Any]:
    """Collect configuration overrides from environment variables.

    `SIMPLE_BEHAVIOR_MOVEMENT__SPLIT_DEG=15` sets `movement.split_deg`.

    :param environ: The environment to read
    :param prefix: The variable prefix

    :returns: The overrides as a nested dictionary
    """
    overrides: dict[str, Any] = {}
    for name, value in sorted(environ.items()):
        if not name.startswith(prefix):
            continue

        path = [part.lower() for part in name[len(prefix) :].split("__")]
        target = overrides
        for part in path[:-1]:
            target = target.setdefault(part, {})
        target[path[-1]] = yaml.safe_load(value)

    return overrides


def build_run_config(*layers: Mapping[str, Any]) -> RunConfig:
    """Merge configuration layers over the defaults and decode them.

    :param layers: Plain configuration dictionaries, lowest precedence first

    :returns: The validated configuration

    :raises ValidationException: If the merged configuration is invalid
    """
    merged = copy.deepcopy(DEFAULTS)
    for layer in layers:
        merged = deep_merge(merged, layer)

    try:
        config: RunConfig = deserialize.deserialize(RunConfig, merged)
    except deserialize.DeserializeException as ex:
        raise ValidationException(f"Invalid configuration: {ex}") from ex

    config.raw = merged
    config.validate()
    return config


def load_run_config(
    path: str | None,
    *,
    overrides: Mapping[str, Any] | None = None,
    environ: Mapping[str, str] | None = None,
) -> RunConfig:
    """Load the run configuration.

    :param path: The YAML file to read (None to use the defaults only)
    :param overrides: Values from the command line, highest precedence
    :param environ: The environment to read overrides from (defaults to os.environ)

    :returns: The validated configuration

    :raises MissingInputException: If the file does not exist
    :raises ValidationException: If the configuration is invalid
    """

    from_file: dict[str, Any] = {}

    if path is not None:
        if not os.path.isfile(path):
            raise MissingInputException(f"Configuration file not found: {path}")

        with open(path, encoding="utf-8") as config_file:
            try:
                loaded = yaml.safe_load(config_file)
            except yaml.YAMLError as ex:
                raise ValidationException(f"Configuration file is not valid YAML: {ex}") from ex

        if loaded is not None and not isinstance(loaded, dict):
            raise ValidationException(f"Configuration file must hold a mapping: {path}")
        from_file = loaded or {}

    return build_run_config(
        from_file,
        environment_overrides(os.environ if environ is None else environ),
        overrides or {},
    )
