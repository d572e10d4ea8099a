"""Ground-truth simulation: arena, unicycle robot, non-cooperative obstacles, lidar."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Pose, Segment, Vec2, point_segment_distance, wrap_angle

DT = 0.15
MAX_LINEAR = 0.22
MAX_ANGULAR = 2.0
ROBOT_RADIUS = 0.089
OBSTACLE_RADIUS = 0.1
MAX_STEPS = 500

N_BEAMS = 360
LIDAR_MIN = 0.105
LIDAR_MAX = 0.6

SPAWN_ATTEMPTS = 2000
SPAWN_CLEARANCE = 0.4  # extra gap between robot start and any obstacle disk
SPAWN_GAP = 0.05  # gap between spawned obstacle disks and walls / each other


class SpawnError(RuntimeError):
    """Raised when a scenario cannot place its obstacles without overlap."""


class Behavior(str, enum.Enum):
    CROSSING = "crossing"
    TOWARDS = "towards"
    AHEAD = "ahead"
    RANDOM = "random"
    TRAINING_RANDOM = "training-random"

    @classmethod
    def parse(cls, name: str) -> Behavior:
        key = name.strip().lower().replace("_", "-")
        for b in cls:
            if b.value == key:
                return b
        raise ValueError(f"unknown behavior {name!r}; expected one of {[b.value for b in cls]}")


TEST_BEHAVIORS = (Behavior.CROSSING, Behavior.TOWARDS, Behavior.AHEAD, Behavior.RANDOM)


@dataclass(frozen=True)
class ArenaSpec:
    half_extent: float
    walls: tuple[Segment, ...] = ()

    def __post_init__(self) -> None:
        if self.half_extent <= 0:
            raise ValueError("arena half_extent must be positive")
        h = self.half_extent
        corners = (Vec2(-h, -h), Vec2(h, -h), Vec2(h, h), Vec2(-h, h))
        walls = tuple(Segment(corners[i], corners[(i + 1) % 4]) for i in range(4))
        object.__setattr__(self, "walls", walls)

    def contains(self, p: Vec2, margin: float = 0.0) -> bool:
        lim = self.half_extent - margin
        return -lim <= p.x <= lim and -lim <= p.y <= lim


@dataclass(frozen=True)
class RobotState:
    pose: Pose
    linear_vel: float = 0.0
    angular_vel: float = 0.0
    radius: float = ROBOT_RADIUS

    def __post_init__(self) -> None:
        if not 0.0 <= self.linear_vel <= MAX_LINEAR:
            raise ValueError(f"linear_vel {self.linear_vel} outside [0, {MAX_LINEAR}]")
        if not -MAX_ANGULAR <= self.angular_vel <= MAX_ANGULAR:
            raise ValueError(f"angular_vel {self.angular_vel} outside [-{MAX_ANGULAR}, {MAX_ANGULAR}]")
        if self.radius <= 0:
            raise ValueError("robot radius must be positive")

    @property
    def position(self) -> Vec2:
        return self.pose.position

    def velocity(self) -> Vec2:
        return self.pose.forward() * self.linear_vel


@dataclass(frozen=True)
class ObstacleState:
    id: int
    position: Vec2
    velocity: Vec2
    radius: float = OBSTACLE_RADIUS

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("obstacle radius must be positive")


@dataclass(frozen=True)
class ScenarioSpec:
    behavior: Behavior
    obstacle_count: int
    obstacle_speed: float
    arena: ArenaSpec
    start: Vec2
    goal: Vec2
    seed: int = 0
    obstacle_radius: float = OBSTACLE_RADIUS
    robot_radius: float = ROBOT_RADIUS

    def __post_init__(self) -> None:
        if isinstance(self.behavior, str) and not isinstance(self.behavior, Behavior):
            object.__setattr__(self, "behavior", Behavior.parse(self.behavior))
        if self.obstacle_count < 0:
            raise ValueError("obstacle_count must be >= 0")
        if self.obstacle_speed < 0:
            raise ValueError("obstacle_speed must be >= 0")
        for name in ("start", "goal"):
            if not self.arena.contains(getattr(self, name)):
                raise ValueError(f"{name} lies outside the arena")


def eval_scenario(behavior: Behavior | str, *, obstacle_count: int = 20,
                  obstacle_speed: float = MAX_LINEAR / 5, seed: int = 0) -> ScenarioSpec:
    """The 4x4 m evaluation layout: start (-1.5, 0), goal (1.5, 0)."""
    return ScenarioSpec(Behavior.parse(behavior) if isinstance(behavior, str) else behavior,
                        obstacle_count, obstacle_speed, ArenaSpec(2.0),
                        Vec2(-1.5, 0.0), Vec2(1.5, 0.0), seed)


def training_scenario(*, obstacle_count: int = 4, obstacle_speed: float = 0.2, seed: int = 0) -> ScenarioSpec:
    """The 2x2 m training layout; start/goal get re-drawn per episode by the trainer."""
    return ScenarioSpec(Behavior.TRAINING_RANDOM, obstacle_count, obstacle_speed, ArenaSpec(1.0),
                        Vec2(-0.6, -0.6), Vec2(0.6, 0.6), seed)


@dataclass
class WorldState:
    robot: RobotState
    obstacles: list[ObstacleState]
    goal: Vec2
    arena: ArenaSpec
    step_count: int = 0
    rng: np.random.Generator | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ScanFrame:
    """360 ranges; beam i points i degrees counter-clockwise from the robot heading."""

    ranges: np.ndarray
    min_range: float = LIDAR_MIN
    max_range: float = LIDAR_MAX

    def __post_init__(self) -> None:
        if self.ranges.shape != (N_BEAMS,):
            raise ValueError(f"expected {N_BEAMS} ranges, got shape {self.ranges.shape}")


# --------------------------------------------------------------------------- spawning


def _spawn_velocity(behavior: Behavior, i: int, pos: Vec2, spec: ScenarioSpec,
                    along: Vec2, lateral: Vec2, rng: np.random.Generator) -> Vec2:
    speed = spec.obstacle_speed
    if behavior is Behavior.CROSSING:
        side = 1.0 if i % 2 == 0 else -1.0
        return lateral * (-side * speed)
    if behavior is Behavior.TOWARDS:
        heading = (spec.start - pos).angle() + rng.uniform(-math.radians(5), math.radians(5))
        return Vec2.polar(speed, heading)
    if behavior is Behavior.AHEAD:
        return along * speed
    heading = rng.uniform(-math.pi, math.pi)
    if behavior is Behavior.TRAINING_RANDOM:
        speed = speed * (1.0 - rng.random())  # uniform on (0, max]
    return Vec2.polar(speed, heading)


def _spawn_allowed(behavior: Behavior, i: int, rel_along: float, rel_lat: float, path_len: float) -> bool:
    if behavior is Behavior.CROSSING:
        side = 1.0 if i % 2 == 0 else -1.0
        return 0.3 <= rel_along <= path_len - 0.3 and side * rel_lat >= 0.1
    if behavior is Behavior.TOWARDS:
        return rel_along >= min(1.0, path_len / 2)
    if behavior is Behavior.AHEAD:
        return rel_along >= 0.5
    return True


def reset_scenario(spec: ScenarioSpec) -> WorldState:
    """Build the initial world for ``spec``; deterministic in ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    offset = spec.goal - spec.start
    path_len = offset.norm()
    along = offset.unit() if path_len > 0 else Vec2(1.0, 0.0)
    lateral = Vec2(-along.y, along.x)
    robot = RobotState(Pose(spec.start, along.angle()), radius=spec.robot_radius)

    r = spec.obstacle_radius
    lim = spec.arena.half_extent - r - SPAWN_GAP
    if lim <= 0:
        raise SpawnError("arena too small for a single obstacle")
    obstacles: list[ObstacleState] = []
    for i in range(spec.obstacle_count):
        for _ in range(SPAWN_ATTEMPTS):
            p = Vec2(float(rng.uniform(-lim, lim)), float(rng.uniform(-lim, lim)))
            rel = p - spec.start
            if rel.norm() < spec.robot_radius + r + SPAWN_CLEARANCE:
                continue
            if not _spawn_allowed(spec.behavior, i, rel.dot(along), rel.dot(lateral), path_len):
                continue
            if any((p - o.position).norm() < r + o.radius + SPAWN_GAP for o in obstacles):
                continue
            v = _spawn_velocity(spec.behavior, i, p, spec, along, lateral, rng)
            obstacles.append(ObstacleState(i, p, v, r))
            break
        else:
            raise SpawnError(
                f"could not place obstacle {i} of {spec.obstacle_count} for {spec.behavior.value} "
                f"after {SPAWN_ATTEMPTS} attempts (arena too dense)")
    return WorldState(robot, obstacles, spec.goal, spec.arena, 0, rng)


# --------------------------------------------------------------------------- dynamics


def clamp_action(linear: float, angular: float) -> tuple[float, float, bool]:
    if not (math.isfinite(linear) and math.isfinite(angular)):
        raise ValueError(f"non-finite action ({linear}, {angular})")
    v = min(MAX_LINEAR, max(0.0, linear))
    w = min(MAX_ANGULAR, max(-MAX_ANGULAR, angular))
    return v, w, (v != linear or w != angular)


def step_robot(robot: RobotState, action: tuple[float, float], dt: float = DT) -> RobotState:
    """Exact unicycle integration over ``dt`` with the (clamped) action held constant.

    The returned state carries the clamped velocities.
    """
    v, w, _ = clamp_action(float(action[0]), float(action[1]))
    x, y, th = robot.pose.x, robot.pose.y, robot.pose.heading
    if abs(w) < 1e-6:
        x += v * dt * math.cos(th)
        y += v * dt * math.sin(th)
        th_new = th + w * dt
    else:
        th_new = th + w * dt
        x += (v / w) * (math.sin(th_new) - math.sin(th))
        y -= (v / w) * (math.cos(th_new) - math.cos(th))
    return RobotState(Pose(Vec2(x, y), wrap_angle(th_new)), v, w, robot.radius)


def step_obstacles(world: WorldState, dt: float = DT) -> WorldState:
    """Constant-velocity motion; the normal velocity component flips on wall penetration."""
    h = world.arena.half_extent
    moved = []
    for o in world.obstacles:
        x = o.position.x + o.velocity.x * dt
        y = o.position.y + o.velocity.y * dt
        vx, vy = o.velocity.x, o.velocity.y
        if (x + o.radius > h and vx > 0) or (x - o.radius < -h and vx < 0):
            vx = -vx
        if (y + o.radius > h and vy > 0) or (y - o.radius < -h and vy < 0):
            vy = -vy
        moved.append(ObstacleState(o.id, Vec2(x, y), Vec2(vx, vy), o.radius))
    return replace(world, obstacles=moved)


@dataclass(frozen=True)
class CollisionEvent:
    kind: str  # "obstacle" or "wall"
    index: int
    distance: float


def detect_collision(world: WorldState) -> CollisionEvent | None:
    p = world.robot.position
    rr = world.robot.radius
    for o in world.obstacles:
        d = (o.position - p).norm()
        if d < rr + o.radius:
            return CollisionEvent("obstacle", o.id, d)
    for i, wall in enumerate(world.arena.walls):
        d = point_segment_distance(p, wall)
        if d < rr:
            return CollisionEvent("wall", i, d)
    return None


def min_obstacle_surface_distance(world: WorldState) -> float:
    p = world.robot.position
    return min(((o.position - p).norm() - o.radius for o in world.obstacles), default=math.inf)


# --------------------------------------------------------------------------- lidar

_BEAM_OFFSETS = np.deg2rad(np.arange(N_BEAMS, dtype=np.float64))


def beam_angles(heading: float) -> np.ndarray:
    return heading + _BEAM_OFFSETS


def simulate_lidar(world: WorldState, min_range: float = LIDAR_MIN, max_range: float = LIDAR_MAX) -> ScanFrame:
    """Cast 360 beams against the walls and obstacle disks.

    Readings outside [min_range, max_range] (including the dead zone below
    min_range) come back as the max_range sentinel.
    """
    ox, oy = world.robot.pose.x, world.robot.pose.y
    ang = beam_angles(world.robot.pose.heading)
    dx, dy = np.cos(ang), np.sin(ang)
    best = np.full(N_BEAMS, np.inf)

    for wall in world.arena.walls:
        ex, ey = wall.b.x - wall.a.x, wall.b.y - wall.a.y
        rx, ry = wall.a.x - ox, wall.a.y - oy
        denom = dx * ey - dy * ex
        ok = np.abs(denom) >= 1e-12
        safe = np.where(ok, denom, 1.0)
        t = (rx * ey - ry * ex) / safe
        s = (rx * dy - ry * dx) / safe
        hit = ok & (t >= 0.0) & (s >= -1e-12) & (s <= 1.0 + 1e-12)
        best = np.where(hit & (t < best), t, best)

    for o in world.obstacles:
        rx, ry = o.position.x - ox, o.position.y - oy
        c = rx * rx + ry * ry - o.radius * o.radius
        if c <= 0.0:
            best[:] = 0.0
            continue
        b = rx * dx + ry * dy
        disc = b * b - c
        hit = (b > 0.0) & (disc >= 0.0)
        t = np.where(hit, b - np.sqrt(np.maximum(disc, 0.0)), np.inf)
        best = np.minimum(best, t)

    ranges = np.where((best > max_range) | (best < min_range), max_range, best)
    return ScanFrame(ranges, min_range, max_range)
