"""Policies usable by the evaluation harness.

A policy maps (env, observation) to an environment-scale action (V_l, V_w).
It may look at the env's perceived state (waypoint, risk assessments) but
never at ground-truth obstacles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .env import ACTION_HIGH, ACTION_LOW, NavEnv, ObservationVector
from .geometry import wrap_angle
from .td3 import checkpoint
from .td3.nn import Mlp
from .world import MAX_ANGULAR, MAX_LINEAR


@dataclass
class ScriptedPolicy:
    """Steer at the current waypoint; when the riskiest track's CP exceeds
    ``cp_threshold``, turn away from it instead.
    """

    cp_threshold: float = 0.5
    heading_gain: float = 3.0
    slow_angle: float = 0.6  # heading error above which the robot stops to turn
    evade_speed: float = 0.0  # fraction of max speed while evading an obstacle in front
    obs_dim = None

    def act(self, env: NavEnv, obs: ObservationVector) -> tuple[float, float]:
        robot = env.world.robot
        pos, heading = robot.position, robot.pose.heading
        risky = max(env.assessments, key=lambda a: (a.cp, -a.dist), default=None)
        if risky is not None and risky.cp > self.cp_threshold:
            track = next(t for t in env.tracker.tracks if t.id == risky.track_id)
            bearing = wrap_angle((track.position - pos).angle() - heading)
            turn = -math.copysign(MAX_ANGULAR, bearing if bearing != 0 else 1.0)
            ahead = abs(bearing) < math.pi / 2
            v = MAX_LINEAR * (self.evade_speed if ahead else 1.0)
            if abs(bearing) < 0.35:
                v = 0.0
            return v, turn
        err = wrap_angle((env.waypoint.current - pos).angle() - heading)
        w = max(-MAX_ANGULAR, min(MAX_ANGULAR, self.heading_gain * err))
        v = MAX_LINEAR * max(0.0, 1.0 - abs(err) / self.slow_angle)
        return v, w


class ActorPolicy:
    """Deterministic TD3 actor (no exploration noise)."""

    def __init__(self, actor: Mlp, low=ACTION_LOW, high=ACTION_HIGH):
        if actor.output != "tanh":
            raise ValueError("actor network must have a tanh output")
        self.actor = actor
        self.low = np.asarray(low, dtype=np.float64)
        self.high = np.asarray(high, dtype=np.float64)

    @classmethod
    def from_checkpoint(cls, path: str | Path) -> ActorPolicy:
        nets = checkpoint.load(path)
        if "actor" not in nets:
            raise checkpoint.CheckpointError(f"{path} holds no actor network")
        return cls(nets["actor"])

    @property
    def obs_dim(self) -> int:
        return self.actor.dims[0]

    def act(self, env: NavEnv, obs: ObservationVector) -> tuple[float, float]:
        a = np.clip(self.actor(obs.as_array()).astype(np.float64), -1.0, 1.0)
        out = np.clip(self.low + (a + 1.0) * 0.5 * (self.high - self.low), self.low, self.high)
        return float(out[0]), float(out[1])
