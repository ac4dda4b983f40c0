"""
Floor Plan - building geometry for the radio model
Walls are 2D segments; all queries are pure and the plan is immutable once loaded
"""
import math
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_serializer, model_validator
from shapely.geometry import LineString, Point, Polygon

from components.errors import GeometryError


class Point2D(BaseModel):
    """Position in meters; serialized as an [x, y] pair"""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    x: float
    y: float

    @model_validator(mode="before")
    @classmethod
    def _from_pair(cls, value: Any) -> Any:
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError("a point is an [x, y] pair")
            return {"x": value[0], "y": value[1]}
        return value

    @model_serializer
    def _as_pair(self) -> List[float]:
        return [self.x, self.y]

    def as_tuple(self) -> tuple:
        return (self.x, self.y)


class WallMaterial(str, Enum):
    """Obstacle materials found in the test building"""
    REINFORCED_CONCRETE = "ReinforcedConcrete"
    CINDER_BLOCK = "CinderBlock"
    DRYWALL = "Drywall"
    WOOD = "Wood"


class Wall(BaseModel):
    """Attenuating obstacle; attenuation left unset falls back to the material table"""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    a: Point2D
    b: Point2D
    material: WallMaterial
    thickness: float = Field(default=0.2, gt=0)
    attenuation: Optional[float] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _check_endpoints(self) -> "Wall":
        if self.a == self.b:
            raise ValueError("wall endpoints must differ")
        return self

    @property
    def line(self) -> LineString:
        return LineString([self.a.as_tuple(), self.b.as_tuple()])


class Extent(BaseModel):
    """Axis-aligned bounding rectangle"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    min: Point2D
    max: Point2D

    @model_validator(mode="after")
    def _check_order(self) -> "Extent":
        if self.min.x >= self.max.x or self.min.y >= self.max.y:
            raise ValueError("extent min must be strictly below max on both axes")
        return self

    def contains(self, p: Point2D) -> bool:
        return self.min.x <= p.x <= self.max.x and self.min.y <= p.y <= self.max.y


class FloorPlan(BaseModel):
    """Walls, named regions (labs, corridors, auditorium) and the building extent"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    extent: Extent
    walls: List[Wall] = Field(default_factory=list)
    named_regions: Dict[str, List[Point2D]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_inside(self) -> "FloorPlan":
        for index, wall in enumerate(self.walls):
            if not (self.extent.contains(wall.a) and self.extent.contains(wall.b)):
                raise ValueError(f"wall {index} lies outside the extent")
        for name, polygon in self.named_regions.items():
            if len(polygon) < 3:
                raise ValueError(f"region '{name}' needs at least 3 vertices")
        return self

    def region_of(self, p: Point2D) -> Optional[str]:
        """First named region covering p, in file order"""
        point = Point(p.as_tuple())
        for name, polygon in self.named_regions.items():
            if Polygon([v.as_tuple() for v in polygon]).covers(point):
                return name
        return None


def distance(p: Point2D, q: Point2D) -> float:
    """Euclidean distance in meters"""
    return math.hypot(q.x - p.x, q.y - p.y)


def wall_crossings(p: Point2D, q: Point2D, plan: FloorPlan) -> List[Wall]:
    """
    Walls intersected by segment pq, nearest to p first

    Touching a wall endpoint counts; a collinear overlap counts once.
    """
    if p == q:
        raise GeometryError(f"degenerate segment at ({p.x}, {p.y})")

    segment = LineString([p.as_tuple(), q.as_tuple()])
    origin = Point(p.as_tuple())
    hits = []
    for index, wall in enumerate(plan.walls):
        line = wall.line
        if not segment.intersects(line):
            continue
        overlap = segment.intersection(line)
        # distance to the nearest part of the overlap is the entry distance
        entry = origin.distance(overlap) if not overlap.is_empty else origin.distance(line)
        hits.append((entry, index, wall))

    hits.sort(key=lambda hit: (hit[0], hit[1]))
    return [wall for _, _, wall in hits]


def polyline_length(points: List[Point2D]) -> float:
    """Summed length of consecutive segments"""
    return sum(distance(a, b) for a, b in zip(points, points[1:]))
