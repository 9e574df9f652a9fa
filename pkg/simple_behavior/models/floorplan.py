"""Floor plan regions."""

import dataclasses
import functools
import itertools

from shapely.geometry import Point, Polygon

from simple_behavior.exceptions import ValidationException
from simple_behavior.models.geometry import Point2D
from simple_behavior.types import OTHER_REGION, RegionName

# Overlaps smaller than this (m^2) are treated as shared borders
_OVERLAP_TOLERANCE = 1e-9


@dataclasses.dataclass(frozen=True)
class Region:
    """A named area of the floor plan."""

    name: RegionName
    polygon: tuple[Point2D, ...]

    def __post_init__(self) -> None:
        if len(self.polygon) < 3:
            raise ValidationException(f"Region {self.name} needs at least 3 vertices")

        shape = self.shape
        if not shape.is_valid:
            raise ValidationException(f"Region {self.name} polygon is self-intersecting")

        if shape.area <= 0.0:
            raise ValidationException(f"Region {self.name} polygon has no area")

    @functools.cached_property
    def shape(self) -> Polygon:
        """The shapely polygon of the region."""
        return Polygon([point.as_tuple() for point in self.polygon])

    def contains(self, point: Point2D) -> bool:
        """Check whether a point lies in the region (borders included).

        :param point: The point to check

        :returns: True if the region covers the point
        """
        return bool(self.shape.covers(Point(point.x, point.y)))


@dataclasses.dataclass(frozen=True)
class Bounds:
    """An axis aligned box, in meters."""

    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self) -> None:
        if self.max_x <= self.min_x or self.max_y <= self.min_y:
            raise ValidationException(f"Bounds are empty: {self}")

    def inflate(self, margin: float) -> "Bounds":
        """Grow the box on every side.

        :param margin: How far to grow, in meters

        :returns: The grown box
        """
        return Bounds(
            self.min_x - margin, self.min_y - margin, self.max_x + margin, self.max_y + margin
        )

    def contains(self, point: Point2D) -> bool:
        """Check whether a point lies inside the box (borders included).

        :param point: The point to check

        :returns: True if it is inside
        """
        return self.min_x <= point.x <= self.max_x and self.min_y <= point.y <= self.max_y

    def clamp(self, point: Point2D) -> Point2D:
        """Move a point to the nearest location inside the box.

        :param point: The point to clamp

        :returns: The clamped point
        """
        return Point2D(
            min(max(point.x, self.min_x), self.max_x), min(max(point.y, self.min_y), self.max_y)
        )

    def as_region(self, name: RegionName) -> Region:
        """Build a rectangular region covering the box.

        :param name: The name for the region

        :returns: The region
        """
        return Region(
            name,
            (
                Point2D(self.min_x, self.min_y),
                Point2D(self.max_x, self.min_y),
                Point2D(self.max_x, self.max_y),
                Point2D(self.min_x, self.max_y),
            ),
        )


@dataclasses.dataclass(frozen=True)
class FloorPlan:
    """The regions of the facility.

    Build instances with `FloorPlan.create`, which adds the "other" catch-all
    region when it is missing.
    """

    regions: tuple[Region, ...]
    bounds: Bounds

    def __post_init__(self) -> None:
        names = [region.name for region in self.regions]

        if len(set(names)) != len(names):
            raise ValidationException(f"Region names must be unique: {names}")

        if names.count(OTHER_REGION) != 1:
            raise ValidationException('A floor plan needs exactly one "other" region')

        named = [region for region in self.regions if region.name != OTHER_REGION]
        for first, second in itertools.combinations(named, 2):
            if first.shape.intersection(second.shape).area > _OVERLAP_TOLERANCE:
                raise ValidationException(f"Regions overlap: {first.name} and {second.name}")

    @staticmethod
    def create(regions: list[Region], bounds: Bounds | None = None) -> "FloorPlan":
        """Create a floor plan, deriving the bounds and the "other" region when needed.

        :param regions: The regions of the plan
        :param bounds: The extent of the facility; derived from the regions if not supplied

        :returns: The validated floor plan

        :raises ValidationException: If the plan is invalid
        """

        if bounds is None:
            if not regions:
                raise ValidationException("A floor plan without regions needs explicit bounds")
            min_x, min_y, max_x, max_y = (
                min(region.shape.bounds[0] for region in regions),
                min(region.shape.bounds[1] for region in regions),
                max(region.shape.bounds[2] for region in regions),
                max(region.shape.bounds[3] for region in regions),
            )
            bounds = Bounds(min_x, min_y, max_x, max_y)

        if all(region.name != OTHER_REGION for region in regions):
            regions = [*regions, bounds.as_region(OTHER_REGION)]

        return FloorPlan(tuple(regions), bounds)

    @property
    def region_names(self) -> list[RegionName]:
        """The region names in plan order, "other" last."""
        names = [region.name for region in self.regions if region.name != OTHER_REGION]
        return [*names, OTHER_REGION]

    @property
    def area(self) -> float:
        """The area of the bounding box, in square meters."""
        return (self.bounds.max_x - self.bounds.min_x) * (self.bounds.max_y - self.bounds.min_y)

    def region(self, name: RegionName) -> Region:
        """Get a region by name.

        :param name: The name of the region

        :returns: The region

        :raises ValidationException: If there is no such region
        """
        for region in self.regions:
            if region.name == name:
                return region
        raise ValidationException(f"Unknown region: {name}")

    def region_of(self, point: Point2D) -> RegionName:
        """Find the named region containing a point.

        :param point: The point to locate

        :returns: The first named region covering the point, else "other"
        """
        for region in self.regions:
            if region.name != OTHER_REGION and region.contains(point):
                return region.name
        return OTHER_REGION


def _rectangle(name: str, min_x: float, min_y: float, max_x: float, max_y: float) -> Region:
    return Bounds(min_x, min_y, max_x, max_y).as_region(RegionName(name))


def default_floorplan() -> FloorPlan:
    """Get the built-in 50 m x 34 m (1,700 m^2) facility layout.

    The seven functional areas are laid out as rectangles; corridors between
    them belong to "other".

    :returns: The default floor plan
    """
    return FloorPlan.create(
        [
            _rectangle("gym", 0.0, 0.0, 15.0, 12.0),
            _rectangle("dining", 17.0, 0.0, 33.0, 12.0),
            _rectangle("kitchen", 35.0, 0.0, 50.0, 12.0),
            _rectangle("lounge", 0.0, 15.0, 15.0, 34.0),
            _rectangle("activity", 17.0, 15.0, 33.0, 27.0),
            _rectangle("tech_bar", 35.0, 15.0, 50.0, 24.0),
            _rectangle("staff", 35.0, 27.0, 50.0, 34.0),
        ],
        Bounds(0.0, 0.0, 50.0, 34.0),
    )
