"""All models."""

from .cohort import Cohort, CohortLabel, label_cohort, DEFAULT_MOCA_THRESHOLD
from .documents import FloorPlanDocument, ManifestDocument, SessionEntry, SessionManifest
from .features import (
    SessionFeatureVector,
    feature_names,
    movement_feature_names,
    social_feature_names,
)
from .floorplan import Bounds, FloorPlan, Region, default_floorplan
from .geometry import Point2D, angle_difference
from .tracks import PART_SEPARATOR, BreakSession, TrackSample, Trajectory, split_on_gaps
