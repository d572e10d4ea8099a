"""Planar primitives shared by the simulator, perception and risk code."""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi
EPS = 1e-9


@dataclass(frozen=True, slots=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Vec2 components must be finite, got ({self.x}, {self.y})")

    def __add__(self, other: Vec2) -> Vec2:
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Vec2) -> Vec2:
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> Vec2:
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def __neg__(self) -> Vec2:
        return Vec2(-self.x, -self.y)

    def dot(self, other: Vec2) -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: Vec2) -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def angle(self) -> float:
        return math.atan2(self.y, self.x)

    def unit(self) -> Vec2:
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalise the zero vector")
        return Vec2(self.x / n, self.y / n)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)

    @staticmethod
    def polar(r: float, theta: float) -> Vec2:
        return Vec2(r * math.cos(theta), r * math.sin(theta))


ZERO = Vec2(0.0, 0.0)


def wrap_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {a}")
    r = math.remainder(a, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


@dataclass(frozen=True, slots=True)
class Pose:
    position: Vec2
    heading: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    @property
    def x(self) -> float:
        return self.position.x

    @property
    def y(self) -> float:
        return self.position.y

    def forward(self) -> Vec2:
        return Vec2(math.cos(self.heading), math.sin(self.heading))


@dataclass(frozen=True, slots=True)
class Segment:
    a: Vec2
    b: Vec2

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValueError("segment endpoints must differ")

    def length(self) -> float:
        return (self.b - self.a).norm()


def ray_segment_intersect(origin: Vec2, direction: Vec2, seg: Segment) -> float | None:
    """Distance along a unit ray to its first hit on ``seg``, or None.

    Parallel and collinear configurations count as misses.
    """
    if abs(direction.norm() - 1.0) > EPS:
        raise ValueError("ray direction must be a unit vector")
    edge = seg.b - seg.a
    denom = direction.cross(edge)
    if abs(denom) < 1e-12:
        return None
    rel = seg.a - origin
    t = rel.cross(edge) / denom
    s = rel.cross(direction) / denom
    if t < 0.0 or s < -1e-12 or s > 1.0 + 1e-12:
        return None
    return t


def ray_circle_intersect(origin: Vec2, direction: Vec2, center: Vec2, radius: float) -> float | None:
    """Distance along a unit ray to the first boundary crossing of a disk.

    Returns 0.0 when the origin already lies inside the disk.
    """
    rel = center - origin
    b = rel.dot(direction)
    c = rel.dot(rel) - radius * radius
    if c <= 0.0:
        return 0.0
    disc = b * b - c
    if b <= 0.0 or disc < 0.0:
        return None
    return b - math.sqrt(disc)


def point_segment_distance(p: Vec2, seg: Segment) -> float:
    edge = seg.b - seg.a
    s = (p - seg.a).dot(edge) / edge.dot(edge)
    s = min(1.0, max(0.0, s))
    return (p - (seg.a + edge * s)).norm()


def circle_segment_point(center: Vec2, radius: float, target: Vec2) -> Vec2:
    """Point where the segment center->target leaves the circle around ``center``.

    A target already inside the circle is returned unchanged.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    offset = target - center
    d = offset.norm()
    if d == 0.0:
        raise ValueError("target coincides with the circle center")
    if d <= radius:
        return target
    return center + offset * (radius / d)
