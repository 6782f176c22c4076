"""Planar geometry and the domain types every other module builds on.

All angles are headings in degrees, measured counter-clockwise from +x and
normalized to [0, 360). Lengths are abstract length-units; the scenario says
what a unit means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "Point2",
    "DisplacementVector",
    "MarkRecord",
    "ApMarkVector",
    "ApToApTrajectory",
    "DisplacementEdge",
    "normalize_heading",
    "heading_diff",
    "sum_displacements",
    "offset_to_vector",
    "polyline_length",
    "point_segment_distance",
    "sector_of_bearing",
]


def normalize_heading(deg: float) -> float:
    """Map any finite angle onto [0, 360)."""
    h = math.fmod(deg, 360.0)
    if h < 0.0:
        h += 360.0
    # fmod can land exactly on 360.0 after the correction for tiny negatives
    return 0.0 if h == 360.0 else h


def heading_diff(a: float, b: float) -> float:
    """Smallest absolute angular separation of two headings, in [0, 180]."""
    d = abs(normalize_heading(a) - normalize_heading(b))
    return 360.0 - d if d > 180.0 else d


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def distance_to(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class DisplacementVector:
    """One planar step: heading in [0, 360) degrees and a non-negative length."""

    heading: float
    length: float

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_heading(self.heading))
        if self.length < 0.0 or not math.isfinite(self.length):
            raise ValueError(f"bad step length {self.length}")

    def offset(self) -> tuple[float, float]:
        rad = math.radians(self.heading)
        return (self.length * math.cos(rad), self.length * math.sin(rad))


def offset_to_vector(dx: float, dy: float) -> DisplacementVector:
    """Inverse of DisplacementVector.offset(); a zero offset gets heading 0."""
    length = math.hypot(dx, dy)
    if length == 0.0:
        return DisplacementVector(0.0, 0.0)
    return DisplacementVector(math.degrees(math.atan2(dy, dx)), length)


def sum_displacements(vectors) -> tuple[float, float]:
    """Component-wise sum of steps; the empty list sums to (0, 0)."""
    dx = 0.0
    dy = 0.0
    for v in vectors:
        ox, oy = v.offset()
        dx += ox
        dy += oy
    return (dx, dy)


def polyline_length(points) -> float:
    """Total Euclidean length along consecutive points (>= 1 point required)."""
    if len(points) < 1:
        raise ValueError("polyline needs at least one point")
    total = 0.0
    for a, b in zip(points, points[1:]):
        total += a.distance_to(b)
    return total


def sector_of_bearing(bearing_deg: float) -> int:
    """Bin a bearing into one of 8 equal sectors.

    Sector k covers (45k - 22.5, 45k + 22.5] degrees, so sector 0 is centered
    on +x and a bearing exactly on a boundary belongs to the lower sector.
    """
    return int(math.ceil((normalize_heading(bearing_deg) - 22.5) / 45.0)) % 8


def point_segment_distance(p: Point2, a: Point2, b: Point2) -> float:
    """Distance from p to the closed segment ab."""
    ax, ay = a.x, a.y
    vx, vy = b.x - ax, b.y - ay
    seg2 = vx * vx + vy * vy
    if seg2 == 0.0:
        return p.distance_to(a)
    t = ((p.x - ax) * vx + (p.y - ay) * vy) / seg2
    t = min(1.0, max(0.0, t))
    return math.hypot(p.x - (ax + t * vx), p.y - (ay + t * vy))


@dataclass(frozen=True)
class MarkRecord:
    """One scan record taken at a walked location.

    `nearby` lists (ap_id, rss) for other APs heard at the same spot and must
    not repeat `ap_id`.
    """

    timestamp: float
    heading: float
    ap_id: str
    rss: float
    nearby: tuple = ()

    def __post_init__(self):
        if any(other == self.ap_id for other, _ in self.nearby):
            raise ValueError(f"nearby list repeats {self.ap_id}")


@dataclass(frozen=True)
class ApMarkVector:
    """Record sequence around the strongest-RSS point of a near-straight pass.

    The mark point is the strongest-RSS record; all retained records deviate
    from its heading by no more than the direction threshold used to build it.
    """

    ap_id: str
    records: tuple
    mark_point_index: int

    def __post_init__(self):
        if not self.records:
            raise ValueError("empty AP-mark record list")
        if not 0 <= self.mark_point_index < len(self.records):
            raise ValueError("mark point index out of range")

    @property
    def mark_point(self) -> MarkRecord:
        return self.records[self.mark_point_index]

    @property
    def mark_heading(self) -> float:
        return self.mark_point.heading

    @property
    def mark_time(self) -> float:
        return self.mark_point.timestamp


@dataclass(frozen=True)
class ApToApTrajectory:
    """Walked steps between two AP marks with no third mark in between."""

    start_mark: ApMarkVector
    end_mark: ApMarkVector
    vectors: tuple
    start_time: float
    end_time: float

    def __post_init__(self):
        if self.start_mark.ap_id == self.end_mark.ap_id:
            raise ValueError("trajectory endpoints must be distinct APs")

    def displacement(self) -> tuple[float, float]:
        return sum_displacements(self.vectors)

    def walked_length(self) -> float:
        return sum(v.length for v in self.vectors)


@dataclass
class DisplacementEdge:
    """Fused planar offset between two APs, with how many observations fed it."""

    ap_a: str
    ap_b: str
    dx: float
    dy: float
    source_count: int = 1
    walked_length: float = field(default=0.0)

    def __post_init__(self):
        if not (math.isfinite(self.dx) and math.isfinite(self.dy)):
            raise ValueError("non-finite edge displacement")
