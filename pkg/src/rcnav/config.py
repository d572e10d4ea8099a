"""Run configuration: a flat set of typed keys grouped into ``[section]`` blocks.

File format, one entry per line::

    # comment
    [risk]
    alpha = 0.5
    k = 1

Section headers are optional, but a key under a header must belong to that
section. Every key has a default; unknown keys, malformed lines and out of
range values are rejected with the line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Any, Callable

from .env import EnvConfig
from .geometry import Vec2
from .risk import RiskConfig
from .td3.agent import Td3Config
from .world import TEST_BEHAVIORS, ArenaSpec, Behavior, ScenarioSpec


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _positive(x) -> str | None:
    return None if x > 0 else "must be positive"


def _nonneg(x) -> str | None:
    return None if x >= 0 else "must be >= 0"


def _unit(x) -> str | None:
    return None if 0 <= x <= 1 else "must lie in [0, 1]"


def _behavior(x) -> str | None:
    try:
        Behavior.parse(x)
    except ValueError as e:
        return str(e)
    return None


def _behaviors(xs) -> str | None:
    if not xs:
        return "needs at least one behavior"
    for x in xs:
        err = _behavior(x)
        if err:
            return err
    return None


def _sectors(x) -> str | None:
    return None if x > 0 and 360 % x == 0 else "must divide 360"


def _hidden(xs) -> str | None:
    return None if xs and all(h > 0 for h in xs) else "needs one or more positive layer widths"


def _opt(section: str, check: Callable | None = None):
    return {"section": section, "check": check}


@dataclass(frozen=True)
class RunConfig:
    # evaluation scenario
    behavior: str = Behavior.RANDOM.value
    obstacles: int = 20
    obstacle_speed: float = 0.044
    arena_half_extent: float = 2.0
    start_x: float = -1.5
    start_y: float = 0.0
    goal_x: float = 1.5
    goal_y: float = 0.0
    obstacle_radius: float = 0.1
    robot_radius: float = 0.089
    # risk
    alpha: float = 0.5
    k: int = 1
    l_max: float = 0.6
    l_min: float = 0.105
    timestep: float = 0.15
    social_ttc_threshold: float = 0.4
    # environment
    laser_sectors: int = 36
    waypoint_radius: float = 0.6
    waypoint_tolerance: float = 0.05
    goal_tolerance: float = 0.1
    max_steps: int = 500
    debug_perception: bool = False
    # td3
    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    target_noise: float = 0.2
    noise_clip: float = 0.5
    exploration_noise: float = 0.1
    batch_size: int = 100
    lr: float = 3e-4
    warmup_steps: int = 1000
    episodes: int = 3000
    hidden: tuple[int, ...] = (256, 256)
    buffer_capacity: int = 1_000_000
    checkpoint_every: int = 100
    # training arena
    train_obstacles: int = 4
    train_obstacle_speed: float = 0.2
    train_half_extent: float = 1.0
    # evaluation suite
    behaviors: tuple[str, ...] = tuple(b.value for b in TEST_BEHAVIORS)
    runs: int = 10
    workers: int = 1
    alternative_n: bool = False
    # run
    seed: int = 0
    output_dir: str = "runs"

    # ----------------------------------------------------------------- derived configs

    def scenario(self, behavior: str | None = None, seed: int | None = None) -> ScenarioSpec:
        return ScenarioSpec(Behavior.parse(behavior or self.behavior), self.obstacles, self.obstacle_speed,
                            ArenaSpec(self.arena_half_extent), Vec2(self.start_x, self.start_y),
                            Vec2(self.goal_x, self.goal_y), self.seed if seed is None else seed,
                            self.obstacle_radius, self.robot_radius)

    def eval_scenarios(self) -> list[ScenarioSpec]:
        return [self.scenario(b) for b in self.behaviors]

    def training_scenario(self) -> ScenarioSpec:
        h = self.train_half_extent
        return ScenarioSpec(Behavior.TRAINING_RANDOM, self.train_obstacles, self.train_obstacle_speed,
                            ArenaSpec(h), Vec2(-0.6 * h, -0.6 * h), Vec2(0.6 * h, 0.6 * h), self.seed,
                            self.obstacle_radius, self.robot_radius)

    def risk_config(self) -> RiskConfig:
        return RiskConfig(self.alpha, self.timestep, self.l_max, self.l_min, self.k, self.social_ttc_threshold,
                          self.obstacle_radius)

    def env_config(self) -> EnvConfig:
        return EnvConfig(self.laser_sectors, self.waypoint_radius, self.waypoint_tolerance, self.goal_tolerance,
                         self.max_steps, self.timestep, debug_perception=self.debug_perception)

    def td3_config(self) -> Td3Config:
        return Td3Config(self.gamma, self.tau, self.policy_delay, self.target_noise, self.noise_clip,
                         self.exploration_noise, self.batch_size, self.lr, self.warmup_steps, self.episodes,
                         self.seed, self.hidden, self.buffer_capacity, self.checkpoint_every)

    def validate(self) -> RunConfig:
        """Cross-field checks by building every derived config."""
        try:
            self.risk_config()
            self.env_config()
            self.td3_config()
            self.scenario()
            self.training_scenario()
        except ValueError as e:
            raise ConfigError(str(e)) from None
        return self


SECTION = {
    "scenario": ["behavior", "obstacles", "obstacle_speed", "arena_half_extent", "start_x", "start_y", "goal_x",
                 "goal_y", "obstacle_radius", "robot_radius"],
    "risk": ["alpha", "k", "l_max", "l_min", "timestep", "social_ttc_threshold"],
    "env": ["laser_sectors", "waypoint_radius", "waypoint_tolerance", "goal_tolerance", "max_steps",
            "debug_perception"],
    "td3": ["gamma", "tau", "policy_delay", "target_noise", "noise_clip", "exploration_noise", "batch_size", "lr",
            "warmup_steps", "episodes", "hidden", "buffer_capacity", "checkpoint_every"],
    "training": ["train_obstacles", "train_obstacle_speed", "train_half_extent"],
    "eval": ["behaviors", "runs", "workers", "alternative_n"],
    "run": ["seed", "output_dir"],
}
SECTION_OF = {key: sec for sec, keys in SECTION.items() for key in keys}

CHECKS: dict[str, Callable[[Any], str | None]] = {
    "behavior": _behavior, "obstacles": _nonneg, "obstacle_speed": _nonneg, "arena_half_extent": _positive,
    "obstacle_radius": _positive, "robot_radius": _positive,
    "alpha": _unit, "k": _nonneg, "l_max": _positive, "l_min": _positive, "timestep": _positive,
    "social_ttc_threshold": _unit,
    "laser_sectors": _sectors, "waypoint_radius": _positive, "waypoint_tolerance": _positive,
    "goal_tolerance": _positive, "max_steps": _positive,
    "gamma": _unit, "tau": lambda x: None if 0 < x <= 1 else "must lie in (0, 1]",
    "policy_delay": _positive, "target_noise": _nonneg, "noise_clip": _nonneg, "exploration_noise": _nonneg,
    "batch_size": _positive, "lr": _positive, "warmup_steps": _nonneg, "episodes": _nonneg, "hidden": _hidden,
    "buffer_capacity": _positive, "checkpoint_every": _positive,
    "train_obstacles": _nonneg, "train_obstacle_speed": _nonneg, "train_half_extent": _positive,
    "behaviors": _behaviors, "runs": _positive, "workers": _positive,
}
TYPES = {f.name: f.type for f in fields(RunConfig)}
assert set(SECTION_OF) == set(TYPES)


def _parse_value(key: str, text: str):
    kind = TYPES[key]
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if kind == "int":
        return int(text)
    if kind == "float":
        v = float(text)
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v
    if kind == "str":
        if not text:
            raise ValueError("empty value")
        return text
    items = [t.strip() for t in text.split(",") if t.strip()]
    if kind == "tuple[int, ...]":
        return tuple(int(t) for t in items)
    return tuple(items)


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def _set(values: dict, key: str, text: str, line: int | None) -> None:
    if key not in TYPES:
        raise ConfigError(f"unknown key {key!r}", line)
    try:
        value = _parse_value(key, text)
    except ValueError as e:
        raise ConfigError(f"{key}: {e}", line) from None
    check = CHECKS.get(key)
    err = check(value) if check else None
    if err:
        raise ConfigError(f"{key} = {text}: {err}", line)
    values[key] = value


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    values: dict[str, Any] = {}
    section = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", n)
            section = line[1:-1].strip()
            if section not in SECTION:
                raise ConfigError(f"unknown section [{section}]", n)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", n)
        key, _, value = (s.strip() for s in line.partition("="))
        if key in TYPES and section is not None and SECTION_OF[key] != section:
            raise ConfigError(f"key {key!r} belongs in [{SECTION_OF[key]}], not [{section}]", n)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", n)
        _set(values, key, value, n)
    return replace(base or RunConfig(), **values).validate()


def apply_overrides(cfg: RunConfig, overrides: list[str] | dict[str, str]) -> RunConfig:
    """Apply ``key=value`` overrides (e.g. from the command line) on top of ``cfg``."""
    items = overrides.items() if isinstance(overrides, dict) else [_split_override(o) for o in overrides]
    values: dict[str, Any] = {}
    for key, text in items:
        try:
            _set(values, key, str(text), None)
        except ConfigError as e:
            raise ConfigError(f"override {key}={text}: {str(e)}") from None
    return replace(cfg, **values).validate()


def _split_override(item: str) -> tuple[str, str]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, _, value = item.partition("=")
    return key.strip(), value.strip()


def dump_config(cfg: RunConfig) -> str:
    out = []
    for sec, keys in SECTION.items():
        out.append(f"[{sec}]")
        out += [f"{k} = {_format_value(getattr(cfg, k))}" for k in keys]
        out.append("")
    return "\n".join(out)


def load_config(path) -> RunConfig:
    with open(path) as f:
        return parse_config(f.read())
