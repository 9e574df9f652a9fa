"""Schemas of the text documents the pipeline reads and writes.

Floor plans and session manifests are YAML documents carrying a
`schema_version`. They are decoded into these classes with `deserialize`
and converted into the immutable domain types.
"""

from typing import Any, List, Optional

import deserialize

from simple_behavior.exceptions import ValidationException
from simple_behavior.models.cohort import DEFAULT_MOCA_THRESHOLD, Cohort, CohortLabel, label_cohort
from simple_behavior.models.floorplan import Bounds, FloorPlan, Region
from simple_behavior.models.geometry import Point2D
from simple_behavior.types import OTHER_REGION, CohortId, RegionName, SessionId

SCHEMA_VERSION = 1


def _float_points(raw: list[list[Any]]) -> list[list[float]]:
    return [[float(value) for value in point] for point in raw]


@deserialize.parser("min_x", float)
@deserialize.parser("min_y", float)
@deserialize.parser("max_x", float)
@deserialize.parser("max_y", float)
class BoundsDocument:
    """The extent of a facility."""

    min_x: float
    min_y: float
    max_x: float
    max_y: float


@deserialize.parser("polygon", _float_points)
class RegionDocument:
    """A region of a floor plan document."""

    name: str
    polygon: List[List[float]]


@deserialize.default("bounds", None)
@deserialize.default("regions", [])
@deserialize.default("config_hash", None)
class FloorPlanDocument:
    """A floor plan document."""

    schema_version: int
    config_hash: Optional[str]
    bounds: Optional[BoundsDocument]
    regions: List[RegionDocument]

    def to_floorplan(self) -> FloorPlan:
        """Convert to the domain floor plan.

        :returns: The validated floor plan

        :raises ValidationException: If the document is not valid
        """
        _check_version(self.schema_version)

        regions = []
        for region in self.regions:
            for point in region.polygon:
                if len(point) != 2:
                    raise ValidationException(f"Region {region.name} has a vertex without 2 values")
            regions.append(
                Region(RegionName(region.name), tuple(Point2D(x, y) for x, y in region.polygon))
            )

        bounds = None
        if self.bounds is not None:
            box = self.bounds
            bounds = Bounds(box.min_x, box.min_y, box.max_x, box.max_y)

        return FloorPlan.create(regions, bounds)

    @staticmethod
    def from_floorplan(plan: FloorPlan) -> dict[str, Any]:
        """Convert a floor plan to plain document data.

        :param plan: The floor plan

        :returns: The document as plain data
        """
        return {
            "schema_version": SCHEMA_VERSION,
            "bounds": {
                "min_x": plan.bounds.min_x,
                "min_y": plan.bounds.min_y,
                "max_x": plan.bounds.max_x,
                "max_y": plan.bounds.max_y,
            },
            "regions": [
                {"name": region.name, "polygon": [[p.x, p.y] for p in region.polygon]}
                for region in plan.regions
                if region.name != OTHER_REGION
            ],
        }


@deserialize.parser("date", str)
@deserialize.parser("session_id", str)
@deserialize.parser("cohort_id", str)
class SessionDocument:
    """A session entry of a manifest."""

    session_id: str
    cohort_id: str
    date: str
    duration_s: int


@deserialize.parser("cohort_id", str)
class CohortDocument:
    """A cohort entry of a manifest."""

    cohort_id: str
    moca_scores: List[int]


@deserialize.default("cohorts", [])
@deserialize.default("config_hash", None)
class ManifestDocument:
    """A session manifest document."""

    schema_version: int
    config_hash: Optional[str]
    sessions: List[SessionDocument]
    cohorts: List[CohortDocument]


class SessionEntry:
    """What the manifest says about a session.

    :param session_id: The session identifier
    :param cohort_id: The cohort that had the break
    :param date: The date of the break, ISO formatted
    :param duration_s: The nominal duration of the break in seconds
    """

    session_id: SessionId
    cohort_id: CohortId
    date: str
    duration_s: int

    def __init__(self, session_id: SessionId, cohort_id: CohortId, date: str, duration_s: int):
        if duration_s <= 0:
            raise ValidationException(f"Session {session_id} duration must be positive")

        self.session_id = session_id
        self.cohort_id = cohort_id
        self.date = date
        self.duration_s = duration_s


class SessionManifest:
    """The sessions of a study and the cohorts they belong to.

    :param sessions: The sessions, in manifest order
    :param cohorts: The cohorts keyed by identifier
    """

    sessions: dict[SessionId, SessionEntry]
    cohorts: dict[CohortId, Cohort]

    def __init__(self, sessions: list[SessionEntry], cohorts: list[Cohort]) -> None:
        self.sessions = {}
        for entry in sessions:
            if entry.session_id in self.sessions:
                raise ValidationException(f"Duplicate session in manifest: {entry.session_id}")
            self.sessions[entry.session_id] = entry

        self.cohorts = {}
        for cohort in cohorts:
            if cohort.cohort_id in self.cohorts:
                raise ValidationException(f"Duplicate cohort in manifest: {cohort.cohort_id}")
            self.cohorts[cohort.cohort_id] = cohort

    def label_of(
        self, session_id: SessionId, threshold: float = DEFAULT_MOCA_THRESHOLD
    ) -> CohortLabel:
        """Get the label of the cohort a session belongs to.

        :param session_id: The session to label
        :param threshold: The MoCA cut point

        :returns: The cohort label

        :raises ValidationException: If the session or its cohort is unknown
        """
        entry = self.sessions.get(session_id)
        if entry is None:
            raise ValidationException(f"Unknown session: {session_id}")

        cohort = self.cohorts.get(entry.cohort_id)
        if cohort is None:
            raise ValidationException(
                f"Session {session_id} references unknown cohort {entry.cohort_id}"
            )

        return label_cohort(cohort, threshold)

    @staticmethod
    def from_document(document: ManifestDocument) -> "SessionManifest":
        """Convert a decoded document.

        :param document: The decoded manifest document

        :returns: The manifest
        """
        _check_version(document.schema_version)
        return SessionManifest(
            [
                SessionEntry(
                    SessionId(entry.session_id),
                    CohortId(entry.cohort_id),
                    entry.date,
                    entry.duration_s,
                )
                for entry in document.sessions
            ],
            [
                Cohort(CohortId(cohort.cohort_id), tuple(cohort.moca_scores))
                for cohort in document.cohorts
            ],
        )

    def to_document(self) -> dict[str, Any]:
        """Convert to plain document data.

        :returns: The document as plain data
        """
        return {
            "schema_version": SCHEMA_VERSION,
            "sessions": [
                {
                    "session_id": entry.session_id,
                    "cohort_id": entry.cohort_id,
                    "date": entry.date,
                    "duration_s": entry.duration_s,
                }
                for entry in self.sessions.values()
            ],
            "cohorts": [
                {"cohort_id": cohort.cohort_id, "moca_scores": list(cohort.moca_scores)}
                for cohort in self.cohorts.values()
            ],
        }


def _check_version(version: int) -> None:
    if version != SCHEMA_VERSION:
        raise ValidationException(
            f"Unsupported schema_version {version}, expected {SCHEMA_VERSION}"
        )
