"""Collision probability of tracked obstacles and top-K critical selection.

CP blends a time-to-collision term, live only while the relative velocity
points into the collision cone, with a distance term that ramps from 0 at
the lidar's max range to 1 at its min range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Vec2
from .perception import Track
from .world import LIDAR_MAX, LIDAR_MIN, OBSTACLE_RADIUS


@dataclass(frozen=True)
class RiskConfig:
    alpha: float = 0.5
    timestep: float = 0.15
    l_max: float = LIDAR_MAX
    l_min: float = LIDAR_MIN
    k: int = 1
    social_ttc_threshold: float = 0.4
    obstacle_radius: float = OBSTACLE_RADIUS

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.l_max > self.l_min > 0:
            raise ValueError("need l_max > l_min > 0")
        if self.timestep <= 0:
            raise ValueError("timestep must be positive")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.obstacle_radius <= 0:
            raise ValueError("obstacle_radius must be positive")


@dataclass(frozen=True)
class CollisionCone:
    apex: Vec2
    axis: Vec2
    half_angle: float
    dist: float
    combined_radius: float

    def contains(self, v: Vec2) -> bool:
        """Whether a relative velocity ``v`` (robot minus obstacle) points into the cone."""
        speed = v.norm()
        if speed < 1e-9:
            return False
        return abs(math.atan2(self.axis.cross(v), self.axis.dot(v))) <= self.half_angle


@dataclass(frozen=True)
class RiskAssessment:
    track_id: int
    p_ttc: float
    p_dto: float
    cp: float
    ttc: float
    relative_velocity: Vec2
    dist: float


@dataclass(frozen=True)
class CriticalRecord:
    position: Vec2
    velocity: Vec2
    valid: bool
    track_id: int = -1

    def features(self) -> tuple[float, float, float, float]:
        return (self.position.x, self.position.y, self.velocity.x, self.velocity.y)


EMPTY_RECORD = CriticalRecord(Vec2(0.0, 0.0), Vec2(0.0, 0.0), False)


def collision_cone(robot_pos: Vec2, robot_radius: float, track: Track,
                   obstacle_radius: float = OBSTACLE_RADIUS) -> CollisionCone | None:
    """Cone of relative-velocity directions that lead to disk overlap; None if already overlapping."""
    combined = robot_radius + obstacle_radius
    offset = track.position - robot_pos
    dist = offset.norm()
    if dist <= combined:
        return None
    return CollisionCone(robot_pos, offset * (1.0 / dist), math.asin(combined / dist), dist, combined)


def p_ttc(robot_vel: Vec2, track: Track, cone: CollisionCone | None, cfg: RiskConfig) -> tuple[float, float]:
    """Time-to-collision probability and the TTC itself (inf when no collision course)."""
    if cone is None:
        return 1.0, 0.0
    rel = robot_vel - track.velocity
    if not cone.contains(rel):
        return 0.0, math.inf
    t = cone.dist / rel.norm()
    return min(1.0, cfg.timestep / t), t


def p_dto(dist: float, cfg: RiskConfig) -> float:
    if dist < 0:
        raise ValueError("distance must be nonnegative")
    if dist >= cfg.l_max:
        return 0.0
    return min(1.0, max(0.0, (cfg.l_max - dist) / (cfg.l_max - cfg.l_min)))


def collision_probability(pt: float, pd: float, cfg: RiskConfig) -> float:
    return cfg.alpha * pt + (1.0 - cfg.alpha) * pd


def assess(robot_pos: Vec2, robot_vel: Vec2, robot_radius: float, tracks: list[Track],
           cfg: RiskConfig) -> list[RiskAssessment]:
    out = []
    for t in tracks:
        cone = collision_cone(robot_pos, robot_radius, t, cfg.obstacle_radius)
        pt, ttc = p_ttc(robot_vel, t, cone, cfg)
        dist = (t.position - robot_pos).norm()
        pd = p_dto(dist, cfg)
        out.append(RiskAssessment(t.id, pt, pd, collision_probability(pt, pd, cfg), ttc,
                                  robot_vel - t.velocity, dist))
    return out


def select_critical(assessments: list[RiskAssessment], tracks: list[Track], k: int) -> list[CriticalRecord]:
    """The ``k`` highest-CP tracks (ties: nearer first, then lower id), zero-padded to length k."""
    if k < 0:
        raise ValueError("k must be >= 0")
    by_id = {t.id: t for t in tracks}
    ranked = sorted((a for a in assessments if a.track_id in by_id),
                    key=lambda a: (-a.cp, a.dist, a.track_id))
    out = [CriticalRecord(by_id[a.track_id].position, by_id[a.track_id].velocity, True, a.track_id)
           for a in ranked[:k]]
    out.extend(EMPTY_RECORD for _ in range(k - len(out)))
    return out
