#!/usr/bin/env python3

# Copyright (c) Microsoft Corporation.
# Licensed under the MIT license.

"""Track, manifest and floor plan ingestion."""

import collections
import csv
import dataclasses
import io
import json
import logging
import math
from typing import IO, Any, Iterator

import deserialize
import yaml

from simple_behavior.base_component import BaseComponent
from simple_behavior.config import RunConfig, TracksFormat
from simple_behavior.exceptions import ValidationException
from simple_behavior.models import (
    PART_SEPARATOR,
    BreakSession,
    FloorPlan,
    FloorPlanDocument,
    ManifestDocument,
    Point2D,
    SessionManifest,
    TrackSample,
    split_on_gaps,
)
from simple_behavior.types import SessionId, TrackId

CSV_COLUMNS = ("session_id", "track_id", "t", "x", "y", "orientation")

DROP_GAP_SINGLETON = "gap_singleton"
DROP_OUT_OF_BOUNDS = "out_of_bounds"
DROP_AFTER_SESSION_END = "after_session_end"


@dataclasses.dataclass(frozen=True)
class TrackRecord:
    """One line of a track file."""

    session_id: SessionId
    track_id: TrackId
    t: int
    x: float
    y: float
    orientation: float | None
    line_number: int


@dataclasses.dataclass
class TrackParseResult:
    """The sessions parsed from a track file and the records that were dropped."""

    sessions: list[BreakSession]
    drops: collections.Counter[str]


def _number(raw: Any, field: str, line_number: int) -> float:
    if isinstance(raw, bool):
        raise ValidationException(f"Field {field} must be a number", line_number)

    try:
        value = float(raw)
    except (TypeError, ValueError) as ex:
        raise ValidationException(f"Field {field} is not a number: {raw!r}", line_number) from ex

    if not math.isfinite(value):
        raise ValidationException(f"Field {field} is not finite: {raw!r}", line_number)

    return value


def _record(raw: dict[str, Any], line_number: int) -> TrackRecord:
    """Validate a decoded record.

    :param raw: The decoded fields
    :param line_number: The line the record came from

    :returns: The record

    :raises ValidationException: If a field is missing or invalid
    """

    for field in CSV_COLUMNS[:5]:
        if raw.get(field) in (None, ""):
            raise ValidationException(f"Missing field: {field}", line_number)

    if PART_SEPARATOR in str(raw["track_id"]):
        raise ValidationException(
            f"Track ids may not contain {PART_SEPARATOR!r}: {raw['track_id']!r}", line_number
        )

    t = _number(raw["t"], "t", line_number)
    if not t.is_integer() or t < 0:
        raise ValidationException(
            f"Field t must be a non-negative integer: {raw['t']!r}", line_number
        )

    orientation = None
    if raw.get("orientation") not in (None, ""):
        orientation = _number(raw["orientation"], "orientation", line_number)
        if not 0.0 <= orientation < 360.0:
            raise ValidationException(f"Orientation out of [0, 360): {orientation}", line_number)

    return TrackRecord(
        session_id=SessionId(str(raw["session_id"])),
        track_id=TrackId(str(raw["track_id"])),
        t=int(t),
        x=_number(raw["x"], "x", line_number),
        y=_number(raw["y"], "y", line_number),
        orientation=orientation,
        line_number=line_number,
    )


def _jsonl_records(text: str) -> Iterator[TrackRecord]:
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue

        try:
            raw = json.loads(line)
        except json.JSONDecodeError as ex:
            raise ValidationException(f"Malformed JSON: {ex.msg}", line_number) from ex

        if not isinstance(raw, dict):
            raise ValidationException("Record is not a JSON object", line_number)

        yield _record(raw, line_number)


def _csv_records(text: str) -> Iterator[TrackRecord]:
    reader = csv.DictReader(io.StringIO(text))

    if reader.fieldnames is None:
        return

    missing = [column for column in CSV_COLUMNS[:5] if column not in reader.fieldnames]
    if missing:
        raise ValidationException(f"CSV header is missing columns: {missing}", 1)

    for row in reader:
        if None in row or any(value is None for value in row.values()):
            raise ValidationException("Row does not match the header", reader.line_num)
        yield _record(row, reader.line_num)


class IngestClient(BaseComponent):
    """Parses track files and configuration documents into validated sessions.

    :param config: The run configuration
    :param log: The logger to use
    """

    def __init__(self, config: RunConfig, log: logging.Logger) -> None:
        super().__init__(config, log.getChild("ingest"))

    def load_floorplan(self, text: str) -> FloorPlan:
        """Load a floor plan document.

        :param text: The YAML text of the document

        :returns: The floor plan, with "other" added if absent

        :raises ValidationException: If the document is invalid
        """
        self.log.debug("Loading floor plan")
        document: FloorPlanDocument = _decode(FloorPlanDocument, text, "floor plan")
        return document.to_floorplan()

    def dump_floorplan(self, plan: FloorPlan, config_hash: str | None = None) -> str:
        """Write a floor plan document.

        :param plan: The floor plan
        :param config_hash: The hash of the configuration that produced the plan, if any

        :returns: The YAML text
        """
        return _dump(FloorPlanDocument.from_floorplan(plan), config_hash)

    def load_manifest(self, text: str) -> SessionManifest:
        """Load a session manifest document.

        :param text: The YAML text of the document

        :returns: The manifest

        :raises ValidationException: If the document is invalid
        """
        self.log.debug("Loading session manifest")
        document: ManifestDocument = _decode(ManifestDocument, text, "manifest")
        return SessionManifest.from_document(document)

    def dump_manifest(self, manifest: SessionManifest, config_hash: str | None = None) -> str:
        """Write a session manifest document.

        :param manifest: The manifest
        :param config_hash: The hash of the configuration that produced the manifest, if any

        :returns: The YAML text
        """
        return _dump(manifest.to_document(), config_hash)

    def parse_tracks(
        self,
        stream: IO[bytes] | bytes,
        tracks_format: TracksFormat,
        manifest: SessionManifest,
        plan: FloorPlan | None = None,
    ) -> TrackParseResult:
        """Parse a track file into break sessions.

        Records are grouped by session then track, sorted by time and split
        wherever the gap exceeds the configured threshold. Every session of the
        manifest is returned, in manifest order, even if it has no tracks.

        :param stream: The raw bytes of the track file (or a binary stream)
        :param tracks_format: The wire format of the file
        :param manifest: The session manifest supplying durations and cohorts
        :param plan: The floor plan; when supplied, positions outside its inflated bounds
                     are dropped

        :returns: The sessions and the drop counts per reason

        :raises ValidationException: On malformed lines, duplicate samples or unknown sessions
        """

        raw_bytes = stream if isinstance(stream, bytes) else stream.read()

        try:
            text = raw_bytes.decode("utf-8")
        except UnicodeDecodeError as ex:
            raise ValidationException(f"Track file is not UTF-8: {ex}") from ex

        if tracks_format == TracksFormat.JSONL:
            records = _jsonl_records(text)
        else:
            records = _csv_records(text)

        grouped: dict[SessionId, dict[TrackId, dict[int, TrackRecord]]] = collections.defaultdict(
            lambda: collections.defaultdict(dict)
        )
        total = 0

        for record in records:
            if record.session_id not in manifest.sessions:
                raise ValidationException(
                    f"Session {record.session_id} is not in the manifest", record.line_number
                )

            track = grouped[record.session_id][record.track_id]
            if record.t in track:
                raise ValidationException(
                    f"Duplicate sample for session {record.session_id} track {record.track_id} "
                    f"at t={record.t} (first on line {track[record.t].line_number})",
                    record.line_number,
                )

            track[record.t] = record
            total += 1

        drops: collections.Counter[str] = collections.Counter()
        bounds = None
        if plan is not None:
            bounds = plan.bounds.inflate(self.config.ingest.out_of_bounds_margin_m)

        sessions = []

        for session_id, entry in manifest.sessions.items():
            trajectories = []

            for track_id in sorted(grouped.get(session_id, {})):
                samples = []

                for t in sorted(grouped[session_id][track_id]):
                    record = grouped[session_id][track_id][t]
                    position = Point2D(record.x, record.y)

                    if t >= entry.duration_s:
                        drops[DROP_AFTER_SESSION_END] += 1
                        continue

                    if bounds is not None and not bounds.contains(position):
                        drops[DROP_OUT_OF_BOUNDS] += 1
                        continue

                    samples.append(TrackSample(t, position, record.orientation))

                split, dropped = split_on_gaps(track_id, samples, self.config.ingest.gap_split_s)
                drops[DROP_GAP_SINGLETON] += dropped
                trajectories.extend(split)

            sessions.append(
                BreakSession(session_id, entry.cohort_id, entry.duration_s, tuple(trajectories))
            )

        for reason, count in sorted(drops.items()):
            if count:
                self.log.warning(f"Dropped {count} of {total} samples: {reason}")

        self.log.info(f"Parsed {total} samples into {len(sessions)} sessions")

        return TrackParseResult(sessions, drops)

    def serialize_tracks(self, sessions: list[BreakSession], tracks_format: TracksFormat) -> str:
        """Write sessions back to a track file.

        :param sessions: The sessions to write
        :param tracks_format: The wire format to use

        :returns: The text of the track file
        """

        rows = [
            {
                "session_id": session.session_id,
                "track_id": trajectory.track_id,
                "t": sample.t,
                "x": sample.position.x,
                "y": sample.position.y,
                "orientation": sample.orientation,
            }
            for session in sessions
            for trajectory in session.trajectories
            for sample in trajectory.samples
        ]

        if tracks_format == TracksFormat.JSONL:
            return "".join(json.dumps(row) + "\n" for row in rows)

        output = io.StringIO()
        writer = csv.DictWriter(output, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            if row["orientation"] is None:
                row["orientation"] = ""
            writer.writerow(row)
        return output.getvalue()


def _dump(document: dict[str, Any], config_hash: str | None) -> str:
    if config_hash is not None:
        document = {"config_hash": config_hash, **document}
    return yaml.safe_dump(document, sort_keys=False)


def _decode(class_reference: Any, text: str, what: str) -> Any:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as ex:
        raise ValidationException(f"The {what} is not valid YAML: {ex}") from ex

    if not isinstance(raw, dict):
        raise ValidationException(f"The {what} must be a mapping")

    try:
        return deserialize.deserialize(class_reference, raw)
    except deserialize.DeserializeException as ex:
        raise ValidationException(f"The {what} does not match its schema: {ex}") from ex
