#!/usr/bin/env python3

# Copyright (c) Microsoft Corporation.
# Licensed under the MIT license.

"""Command line front end.

Every command writes its tables to the configured output directory as CSV,
JSON or both, each file carrying the hash of the configuration it was
produced with.
"""

import argparse
import csv
import io
import json
import logging
import os
import sys
from typing import Any, Callable, Sequence

import yaml
from dotenv import load_dotenv

from simple_behavior import FEATURE_SETS, BehaviorPipeline
from simple_behavior.config import OutputFormat, RunConfig, TracksFormat, load_run_config
from simple_behavior.exceptions import (
    BehaviorException,
    InvariantException,
    MissingInputException,
    ValidationException,
)
from simple_behavior.learn import ClassifierReport, ImportanceEntry
from simple_behavior.learn.evaluation import FeatureSet
from simple_behavior.models import SessionFeatureVector, default_floorplan
from simple_behavior.stats import RankSumRow

OUTPUT_SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_MISSING_INPUT = 2
EXIT_VALIDATION = 3
EXIT_INVARIANT = 4

FEATURES_TABLE = "features"
STATS_TABLE = "stats"
CLASSIFICATION_TABLE = "classification"
IMPORTANCE_TABLE = "importance"

_FEATURE_COLUMNS = ("config_hash", "session_id", "cohort_id", "label")

log = logging.getLogger("simple_behavior.cli")


def _csv_cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return value


def write_table(
    config: RunConfig,
    name: str,
    rows: Sequence[dict[str, Any]],
    document: dict[str, Any],
) -> list[str]:
    """Write one output table in the configured formats.

    :param config: The run configuration
    :param name: The file name without extension
    :param rows: The flat rows of the CSV form, config_hash included
    :param document: The body of the JSON form

    :returns: The written paths
    """
    directory = config.paths.output_dir
    os.makedirs(directory, exist_ok=True)
    written = []

    if config.format in (OutputFormat.CSV, OutputFormat.BOTH):
        output = io.StringIO()
        if rows:
            writer = csv.DictWriter(output, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({key: _csv_cell(value) for key, value in row.items()})

        path = os.path.join(directory, f"{name}.csv")
        with open(path, "w", encoding="utf-8", newline="") as csv_file:
            csv_file.write(output.getvalue())
        written.append(path)

    if config.format in (OutputFormat.JSON, OutputFormat.BOTH):
        path = os.path.join(directory, f"{name}.json")
        body = {"schema_version": OUTPUT_SCHEMA_VERSION, "config_hash": config.hash, **document}
        with open(path, "w", encoding="utf-8", newline="") as json_file:
            json_file.write(json.dumps(body, indent=2, allow_nan=False) + "\n")
        written.append(path)

    for path in written:
        log.info(f"Wrote {path}")

    return written


def feature_rows(
    config: RunConfig, vectors: Sequence[SessionFeatureVector]
) -> list[dict[str, Any]]:
    """Flatten feature vectors into CSV rows, masked values left empty."""
    return [
        {
            "config_hash": config.hash,
            "session_id": vector.session_id,
            "cohort_id": vector.cohort_id,
            "label": vector.label.value,
            **dict(zip(vector.names, vector.values)),
        }
        for vector in vectors
    ]


def load_feature_vectors(config: RunConfig) -> list[SessionFeatureVector]:
    """Read the feature table written by the features command.

    The JSON form is preferred when both exist.

    :param config: The run configuration

    :returns: The feature vectors

    :raises MissingInputException: If no feature table exists
    :raises ValidationException: If the table is malformed
    """
    base = os.path.join(config.paths.output_dir, FEATURES_TABLE)

    if os.path.isfile(base + ".json"):
        path = base + ".json"
    elif os.path.isfile(base + ".csv"):
        path = base + ".csv"
    else:
        raise MissingInputException(
            f"No feature table in {config.paths.output_dir}; run features first"
        )

    try:
        if path.endswith(".json"):
            with open(path, encoding="utf-8") as json_file:
                document = json.load(json_file)
            names = document["feature_names"]
            return [SessionFeatureVector.from_dict(raw, names) for raw in document["sessions"]]

        with open(path, encoding="utf-8", newline="") as csv_file:
            reader = csv.DictReader(csv_file)
            names = [name for name in reader.fieldnames or [] if name not in _FEATURE_COLUMNS]
            vectors = []
            for row in reader:
                values = {name: None if row[name] == "" else float(row[name]) for name in names}
                vectors.append(SessionFeatureVector.from_dict({**row, "values": values}, names))
            return vectors
    except (KeyError, TypeError, ValueError) as ex:
        raise ValidationException(f"The feature table {path} is malformed: {ex!r}") from ex


def cmd_simulate(pipeline: BehaviorPipeline) -> None:
    """Write a synthetic study to the configured input paths."""
    if os.path.isfile(pipeline.config.paths.floorplan):
        with open(pipeline.config.paths.floorplan, encoding="utf-8") as plan_file:
            plan = pipeline.ingest.load_floorplan(plan_file.read())
    else:
        plan = default_floorplan()

    study = pipeline.simulate.simulate_study(plan)
    pipeline.simulate.write_study(study, plan, pipeline.ingest)


def cmd_features(pipeline: BehaviorPipeline) -> list[SessionFeatureVector]:
    """Compute and write the session feature table."""
    inputs = pipeline.load_study()

    if not any(session.trajectories for session in inputs.sessions):
        raise ValidationException("no sessions: no session has a usable trajectory")

    vectors = pipeline.feature_vectors(inputs.sessions, inputs.plan, inputs.manifest)
    names = list(vectors[0].names) if vectors else []

    write_table(
        pipeline.config,
        FEATURES_TABLE,
        feature_rows(pipeline.config, vectors),
        {
            "feature_names": names,
            "drops": dict(sorted(inputs.drops.items())),
            "sessions": [vector.to_dict() for vector in vectors],
        },
    )
    return vectors


def _rank_sum_dict(row: RankSumRow) -> dict[str, Any]:
    return {
        "feature": row.feature,
        "n_high": row.n_high,
        "n_low": row.n_low,
        "median_high": row.median_high,
        "median_low": row.median_low,
        "statistic": row.result.statistic if row.result else None,
        "z": row.result.z if row.result else None,
        "p_value": row.result.p_two_sided if row.result else None,
        "method": row.result.method.value if row.result else None,
        "significant": row.significant,
    }


def cmd_stats(pipeline: BehaviorPipeline) -> list[RankSumRow]:
    """Screen the raw features and write the rank sum table."""
    inputs = pipeline.load_study()
    rows = pipeline.rank_sum_table(inputs.sessions, inputs.plan, inputs.manifest)
    flat = [_rank_sum_dict(row) for row in rows]

    write_table(
        pipeline.config,
        STATS_TABLE,
        [{"config_hash": pipeline.config.hash, **row} for row in flat],
        {"alpha": pipeline.config.stats.alpha, "features": flat},
    )
    return rows


def _report_row(report: ClassifierReport) -> dict[str, Any]:
    row: dict[str, Any] = {"model": report.model, "feature_set": report.feature_set}
    for metric in ("precision", "recall", "f1", "accuracy"):
        value = getattr(report, metric)
        row[metric] = value.value
        row[f"{metric}_ci"] = value.halfwidth
    row.update(
        {
            "true_positive": report.true_positive,
            "false_positive": report.false_positive,
            "false_negative": report.false_negative,
            "true_negative": report.true_negative,
            "abstained": report.abstained,
        }
    )
    return row


def cmd_classify(
    pipeline: BehaviorPipeline, vectors: Sequence[SessionFeatureVector] | None = None
) -> list[ClassifierReport]:
    """Cross-validate the configured models and write the classification table."""
    if vectors is None:
        vectors = load_feature_vectors(pipeline.config)

    if not vectors:
        raise ValidationException("no sessions to classify")

    reports = pipeline.classify(vectors)
    config = pipeline.config

    write_table(
        config,
        CLASSIFICATION_TABLE,
        [{"config_hash": config.hash, **_report_row(report)} for report in reports],
        {
            "positive_class": "low",
            "sessions": len(vectors),
            "models": [
                pipeline.learn.model_spec(kind).to_dict() for kind in config.learning.models
            ],
            "seed": config.seed,
            "reports": [report.to_dict() for report in reports],
        },
    )
    return reports


def cmd_importance(
    pipeline: BehaviorPipeline, vectors: Sequence[SessionFeatureVector] | None = None
) -> dict[FeatureSet, list[tuple[str, ImportanceEntry]]]:
    """Rank the features by permutation importance and write the importance table."""
    if vectors is None:
        vectors = load_feature_vectors(pipeline.config)

    if not vectors:
        raise ValidationException("no sessions to rank features on")

    panels = pipeline.importance(vectors)
    config = pipeline.config

    rows = [
        {
            "config_hash": config.hash,
            "feature_set": feature_set.value,
            "rank": rank,
            "feature": name,
            "mean_drop": entry.mean_drop,
            "std_drop": entry.std_drop,
        }
        for feature_set in FEATURE_SETS
        for rank, (name, entry) in enumerate(panels[feature_set], start=1)
    ]

    write_table(
        config,
        IMPORTANCE_TABLE,
        rows,
        {
            "model": config.learning.importance_model.value,
            "repeats": config.learning.importance_repeats,
            "feature_sets": {
                feature_set.value: [
                    {"feature": name, "mean_drop": entry.mean_drop, "std_drop": entry.std_drop}
                    for name, entry in panels[feature_set]
                ]
                for feature_set in FEATURE_SETS
            },
        },
    )
    return panels


def cmd_report(pipeline: BehaviorPipeline) -> None:
    """Chain features, stats, classify and importance."""
    vectors = cmd_features(pipeline)
    cmd_stats(pipeline)
    cmd_classify(pipeline, vectors)
    cmd_importance(pipeline, vectors)


COMMANDS: dict[str, Callable[[BehaviorPipeline], Any]] = {
    "simulate": cmd_simulate,
    "features": cmd_features,
    "stats": cmd_stats,
    "classify": cmd_classify,
    "importance": cmd_importance,
    "report": cmd_report,
}


def _assignment(text: str) -> tuple[list[str], Any]:
    key, separator, value = text.partition("=")
    if not separator or not key:
        raise argparse.ArgumentTypeError(f"Expected KEY=VALUE, got {text!r}")
    return key.split("."), yaml.safe_load(value)


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser.

    :returns: The parser
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration file")
    common.add_argument("--seed", type=int, help="Root random seed")
    common.add_argument("--threads", type=int, help="Largest number of worker threads")
    common.add_argument(
        "--format", choices=[value.value for value in OutputFormat], help="Output table formats"
    )
    common.add_argument("--tracks", help="Track file")
    common.add_argument(
        "--tracks-format", choices=[value.value for value in TracksFormat], help="Track file format"
    )
    common.add_argument("--manifest", help="Session manifest file")
    common.add_argument("--floorplan", help="Floor plan file")
    common.add_argument("--output-dir", help="Directory the tables are written to")
    common.add_argument(
        "--set",
        dest="assignments",
        action="append",
        type=_assignment,
        default=[],
        metavar="KEY=VALUE",
        help="Override any configuration key, e.g. movement.split_deg=15",
    )
    common.add_argument("-v", "--verbose", action="store_true", help="Log debug messages")

    parser = argparse.ArgumentParser(
        prog="simple-behavior",
        description="Behavioral features and cognitive functioning classification from tracks",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, command in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=(command.__doc__ or "").strip())

    return parser


def overrides_from_arguments(arguments: argparse.Namespace) -> dict[str, Any]:
    """Turn command line flags into a configuration layer.

    :param arguments: The parsed arguments

    :returns: The overrides as a nested dictionary
    """
    overrides: dict[str, Any] = {}

    def assign(path: Sequence[str], value: Any) -> None:
        target = overrides
        for part in path[:-1]:
            target = target.setdefault(part, {})
        target[path[-1]] = value

    flags = {
        ("seed",): arguments.seed,
        ("threads",): arguments.threads,
        ("format",): arguments.format,
        ("paths", "tracks"): arguments.tracks,
        ("paths", "tracks_format"): arguments.tracks_format,
        ("paths", "manifest"): arguments.manifest,
        ("paths", "floorplan"): arguments.floorplan,
        ("paths", "output_dir"): arguments.output_dir,
    }
    for path, value in flags.items():
        if value is not None:
            assign(path, value)

    for path, value in arguments.assignments:
        assign(path, value)

    if arguments.verbose:
        assign(("log_level",), "DEBUG")

    return overrides


def main(argv: Sequence[str] | None = None, environ: dict[str, str] | None = None) -> int:
    """Run a command.

    :param argv: The arguments (defaults to sys.argv)
    :param environ: The environment to read overrides from (defaults to os.environ after .env)

    :returns: The exit code
    """
    arguments = build_parser().parse_args(argv)

    if environ is None:
        load_dotenv()

    try:
        config = load_run_config(
            arguments.config, overrides=overrides_from_arguments(arguments), environ=environ
        )
    except MissingInputException as ex:
        logging.basicConfig(level=logging.INFO)
        log.error(str(ex))
        return EXIT_MISSING_INPUT
    except ValidationException as ex:
        logging.basicConfig(level=logging.INFO)
        log.error(str(ex))
        return EXIT_VALIDATION

    logging.basicConfig(
        level=getattr(logging, config.log_level.upper(), logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )
    log.debug(f"Configuration hash {config.hash}")

    pipeline = BehaviorPipeline(config)

    try:
        COMMANDS[arguments.command](pipeline)
    except MissingInputException as ex:
        log.error(str(ex))
        return EXIT_MISSING_INPUT
    except ValidationException as ex:
        log.error(str(ex))
        return EXIT_VALIDATION
    except InvariantException as ex:
        log.error(str(ex))
        return EXIT_INVARIANT
    except BehaviorException as ex:
        log.error(str(ex))
        return EXIT_INVARIANT

    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
