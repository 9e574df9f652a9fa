"""Planar geometry values."""

import dataclasses
import math

from simple_behavior.exceptions import ValidationException


@dataclasses.dataclass(frozen=True)
class Point2D:
    """A position on the floor plan, in meters."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValidationException(f"Point coordinates must be finite: ({self.x}, {self.y})")

    def distance_to(self, other: "Point2D") -> float:
        """Get the Euclidean distance to another point.

        :param other: The other point

        :returns: The distance in meters
        """
        return math.hypot(other.x - self.x, other.y - self.y)

    def bearing_to(self, other: "Point2D") -> float:
        """Get the compass-free bearing towards another point.

        :param other: The other point

        :returns: The angle of the vector to the other point, degrees in [0, 360)
        """
        return math.degrees(math.atan2(other.y - self.y, other.x - self.x)) % 360.0

    def as_tuple(self) -> tuple[float, float]:
        """Get the point as a plain tuple.

        :returns: The (x, y) tuple
        """
        return (self.x, self.y)


def angle_difference(first: float, second: float) -> float:
    """Get the signed difference between two angles, wrapped to (-180, 180].

    :param first: The angle to subtract from, in degrees
    :param second: The angle to subtract, in degrees

    :returns: first - second, wrapped
    """
    difference = (first - second + 180.0) % 360.0 - 180.0
    if difference == -180.0:
        return 180.0
    return difference
