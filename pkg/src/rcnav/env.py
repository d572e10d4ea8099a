"""Episodic navigation environment: observation assembly, waypoints, rewards."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Vec2, circle_segment_point, wrap_angle
from .perception import Tracker, detect_obstacles
from .risk import CriticalRecord, RiskAssessment, RiskConfig, assess, select_critical
from .world import (
    DT,
    MAX_ANGULAR,
    MAX_LINEAR,
    MAX_STEPS,
    RobotState,
    ScanFrame,
    ScenarioSpec,
    WorldState,
    clamp_action,
    detect_collision,
    min_obstacle_surface_distance,
    reset_scenario,
    simulate_lidar,
    step_obstacles,
    step_robot,
)

R_STEP = -2.0
R_PROGRESS = 1.0
R_GOAL = 200.0
R_COLLISION = -200.0
R_WAYPOINT = 200.0

ACTION_LOW = np.array([0.0, -MAX_ANGULAR])
ACTION_HIGH = np.array([MAX_LINEAR, MAX_ANGULAR])


class Terminal(str, enum.Enum):
    RUNNING = "running"
    GOAL = "goal"
    COLLISION = "collision"
    TIMEOUT = "timeout"


class EpisodeOver(RuntimeError):
    """Raised when stepping an episode that already terminated."""


@dataclass(frozen=True)
class EnvConfig:
    laser_sectors: int = 36
    waypoint_radius: float = 0.6
    waypoint_tolerance: float = 0.05
    goal_tolerance: float = 0.1
    max_steps: int = MAX_STEPS
    dt: float = DT
    association_gate: float = 0.3
    debug_perception: bool = False

    def __post_init__(self) -> None:
        if self.laser_sectors <= 0 or 360 % self.laser_sectors:
            raise ValueError("laser_sectors must divide 360")


def observation_length(k: int, laser_sectors: int = 36) -> int:
    return laser_sectors + 2 + 4 + 4 * k


@dataclass(frozen=True)
class ObservationVector:
    laser: np.ndarray  # sector minima / l_max
    dtg: float
    htg: float
    agent: tuple[float, float, float, float]  # R_x, R_y, V_l, V_w
    critical: np.ndarray  # (K, 4): obs_x, obs_y, obs_vx, obs_vy

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.laser, [self.dtg, self.htg], self.agent,
                               self.critical.reshape(-1)]).astype(np.float64)

    def __len__(self) -> int:
        return len(self.laser) + 6 + self.critical.size


@dataclass(frozen=True)
class RewardBreakdown:
    r_step: float
    r_dtg: float
    r_htg: float
    r_goal: float
    r_col: float
    r_wp: float

    @property
    def total(self) -> float:
        return self.r_step + self.r_dtg + self.r_htg + self.r_goal + self.r_col + self.r_wp

    def as_dict(self) -> dict[str, float]:
        return {"r_step": self.r_step, "r_dtg": self.r_dtg, "r_htg": self.r_htg, "r_goal": self.r_goal,
                "r_col": self.r_col, "r_wp": self.r_wp, "total": self.total}


@dataclass
class WaypointState:
    current: Vec2
    reached_count: int = 0
    reach_tolerance: float = 0.05


@dataclass(frozen=True)
class StepResult:
    observation: ObservationVector
    reward: RewardBreakdown
    terminal: Terminal
    record: dict = field(default_factory=dict, compare=False)


def compute_waypoint(robot_pos: Vec2, goal: Vec2, radius: float = 0.6) -> Vec2:
    if robot_pos == goal:
        return goal
    return circle_segment_point(robot_pos, radius, goal)


def goal_relation(robot: RobotState, goal: Vec2) -> tuple[float, float]:
    """(distance to goal, heading error to goal in (-pi, pi])."""
    offset = goal - robot.position
    dtg = offset.norm()
    htg = wrap_angle(offset.angle() - robot.pose.heading) if dtg > 0 else 0.0
    return dtg, htg


def laser_features(scan: ScanFrame, sectors: int = 36) -> np.ndarray:
    return scan.ranges.reshape(sectors, -1).min(axis=1) / scan.max_range


def build_observation(scan: ScanFrame, robot: RobotState, goal: Vec2, critical: list[CriticalRecord],
                      sectors: int = 36) -> ObservationVector:
    dtg, htg = goal_relation(robot, goal)
    crit = np.array([c.features() for c in critical], dtype=np.float64).reshape(len(critical), 4)
    agent = (robot.position.x, robot.position.y, robot.linear_vel, robot.angular_vel)
    return ObservationVector(laser_features(scan, sectors), dtg, htg, agent, crit)


def compute_reward(prev: tuple[float, float], curr: tuple[float, float], *, goal: bool = False,
                   collision: bool = False, waypoint_reached: bool = False) -> RewardBreakdown:
    """Six-term reward from consecutive (dtg, htg) pairs and this step's events.

    Heading progress compares the magnitude of the heading error.
    """
    return RewardBreakdown(
        r_step=R_STEP,
        r_dtg=R_PROGRESS if curr[0] < prev[0] else 0.0,
        r_htg=R_PROGRESS if abs(curr[1]) < abs(prev[1]) else 0.0,
        r_goal=R_GOAL if goal else 0.0,
        r_col=R_COLLISION if collision else 0.0,
        r_wp=R_WAYPOINT if waypoint_reached else 0.0,
    )


def _finite(x: float) -> float | None:
    return x if math.isfinite(x) else None


class NavEnv:
    """One navigation episode at a time over a fixed scenario template.

    ``reset(seed)`` rebuilds the world from the template with the given seed;
    ``step`` follows robot -> obstacles -> collision -> lidar -> perception ->
    risk -> waypoint -> goal -> reward -> observation.
    """

    def __init__(self, scenario: ScenarioSpec, risk: RiskConfig | None = None, config: EnvConfig | None = None):
        self.scenario = scenario
        self.risk = risk or RiskConfig()
        self.config = config or EnvConfig()
        self.world: WorldState | None = None
        self.tracker = Tracker(self.config.dt, self.config.association_gate, self.risk.obstacle_radius)
        self.assessments: list[RiskAssessment] = []
        self.critical: list[CriticalRecord] = []
        self.scan: ScanFrame | None = None
        self.waypoint: WaypointState | None = None
        self.terminal = Terminal.RUNNING
        self._clusters = []

    @property
    def observation_dim(self) -> int:
        return observation_length(self.risk.k, self.config.laser_sectors)

    @property
    def steps(self) -> int:
        return self.world.step_count if self.world else 0

    def reset(self, seed: int | None = None, scenario: ScenarioSpec | None = None) -> ObservationVector:
        if scenario is not None:
            self.scenario = scenario
        spec = self.scenario if seed is None else replace(self.scenario, seed=seed)
        self.scenario = spec
        self.world = reset_scenario(spec)
        self.tracker.reset()
        self.terminal = Terminal.RUNNING
        self.waypoint = WaypointState(compute_waypoint(spec.start, spec.goal, self.config.waypoint_radius),
                                      0, self.config.waypoint_tolerance)
        self._sense()
        return self._observe()

    def _sense(self) -> None:
        w = self.world
        self.scan = simulate_lidar(w, self.risk.l_min, self.risk.l_max)
        clusters, detections = detect_obstacles(self.scan, w.robot.pose)
        self._clusters = clusters
        tracks = self.tracker.update(detections, w.robot.position)
        self.assessments = assess(w.robot.position, w.robot.velocity(), w.robot.radius, tracks, self.risk)
        self.critical = select_critical(self.assessments, tracks, self.risk.k)

    def _observe(self) -> ObservationVector:
        return build_observation(self.scan, self.world.robot, self.world.goal, self.critical,
                                 self.config.laser_sectors)

    def max_p_ttc(self) -> float:
        return max((a.p_ttc for a in self.assessments), default=0.0)

    def max_cp(self) -> float:
        return max((a.cp for a in self.assessments), default=0.0)

    def step(self, action) -> StepResult:
        if self.world is None:
            raise EpisodeOver("call reset() before step()")
        if self.terminal is not Terminal.RUNNING:
            raise EpisodeOver(f"episode already ended ({self.terminal.value})")
        cfg = self.config
        w = self.world
        prev = goal_relation(w.robot, w.goal)
        v, om, clamped = clamp_action(float(action[0]), float(action[1]))

        robot = step_robot(w.robot, (v, om), cfg.dt)
        w = step_obstacles(replace(w, robot=robot), cfg.dt)
        w.step_count += 1
        self.world = w
        collision = detect_collision(w)
        self._sense()

        wp_reached = (robot.position - self.waypoint.current).norm() <= self.waypoint.reach_tolerance
        if wp_reached:
            self.waypoint.reached_count += 1
            reached_at = self.waypoint.current
            self.waypoint.current = compute_waypoint(robot.position, w.goal, cfg.waypoint_radius)
        goal = (robot.position - w.goal).norm() <= cfg.goal_tolerance

        if collision is not None:
            self.terminal = Terminal.COLLISION
        elif goal:
            self.terminal = Terminal.GOAL
        elif w.step_count >= cfg.max_steps:
            self.terminal = Terminal.TIMEOUT

        curr = goal_relation(robot, w.goal)
        reward = compute_reward(prev, curr, goal=self.terminal is Terminal.GOAL,
                                collision=self.terminal is Terminal.COLLISION, waypoint_reached=wp_reached)
        obs = self._observe()

        record = {
            "type": "step",
            "step": w.step_count,
            "robot": [robot.pose.x, robot.pose.y, robot.pose.heading],
            "action": [v, om],
            "clamped": clamped,
            "reward": reward.as_dict(),
            "terminal": self.terminal.value,
            "waypoint": list(self.waypoint.current.as_tuple()),
            "waypoint_reached": list(reached_at.as_tuple()) if wp_reached else None,
            "risk": [{"track": a.track_id, "p_ttc": a.p_ttc, "p_dto": a.p_dto, "cp": a.cp,
                      "ttc": _finite(a.ttc)} for a in self.assessments],
            "max_p_ttc": self.max_p_ttc(),
            "min_obstacle_distance": _finite(min_obstacle_surface_distance(w)),
            "obstacles": [[o.position.x, o.position.y] for o in w.obstacles],
            "collision": None if collision is None else {"kind": collision.kind, "index": collision.index},
        }
        if cfg.debug_perception:
            record["clusters"] = [{"kind": c.kind.value, "n": len(c), "center": list(c.center_scan.as_tuple())}
                                  for c in self._clusters]
            record["tracks"] = [{"id": t.id, "position": list(t.position.as_tuple()),
                                 "velocity": list(t.velocity.as_tuple()), "age": t.age}
                                for t in self.tracker.tracks]
        return StepResult(obs, reward, self.terminal, record)

    def header_record(self) -> dict:
        s = self.scenario
        w = self.world
        return {
            "type": "episode",
            "behavior": s.behavior.value,
            "seed": s.seed,
            "obstacle_count": s.obstacle_count,
            "obstacle_speed": s.obstacle_speed,
            "arena_half_extent": s.arena.half_extent,
            "start": list(s.start.as_tuple()),
            "goal": list(s.goal.as_tuple()),
            "robot_radius": w.robot.radius,
            "robot": [w.robot.pose.x, w.robot.pose.y, w.robot.pose.heading],
            "obstacle_radius": s.obstacle_radius,
            "obstacles": [[o.position.x, o.position.y] for o in w.obstacles],
            "waypoint": list(self.waypoint.current.as_tuple()),
            "k": self.risk.k,
            "alpha": self.risk.alpha,
        }


class GymNavEnv:
    """Array-in/array-out adapter used by the TD3 trainer.

    Actions are physical (V_l, V_w); observations are float64 vectors.
    """

    def __init__(self, env: NavEnv):
        self.env = env
        self.action_low = ACTION_LOW.copy()
        self.action_high = ACTION_HIGH.copy()
        self.last: StepResult | None = None

    @property
    def observation_dim(self) -> int:
        return self.env.observation_dim

    def reset(self, seed: int | None = None, scenario: ScenarioSpec | None = None) -> np.ndarray:
        return self.env.reset(seed, scenario).as_array()

    def step(self, action) -> tuple[np.ndarray, float, bool, bool, dict]:
        res = self.env.step(action)
        self.last = res
        terminated = res.terminal in (Terminal.GOAL, Terminal.COLLISION)
        truncated = res.terminal is Terminal.TIMEOUT
        return res.observation.as_array(), res.reward.total, terminated, truncated, {"terminal": res.terminal}
