"""Training loops: a generic one over any reset/step environment, and the navigation trainer."""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path
from typing import Callable

import numpy as np

from ..env import EnvConfig, GymNavEnv, NavEnv
from ..geometry import Vec2
from ..risk import RiskConfig
from ..world import Behavior, ScenarioSpec
from . import checkpoint
from .agent import Td3Agent, Td3Config
from .buffer import ReplayBuffer

START_GOAL_MARGIN = 0.25
MIN_START_GOAL = 0.8


def _outcome(info: dict, terminated: bool, truncated: bool) -> str:
    t = info.get("terminal")
    if t is not None:
        return getattr(t, "value", str(t))
    return "terminated" if terminated else "timeout" if truncated else "running"


def run_training(env, agent: Td3Agent, *, episodes: int | None = None, total_steps: int | None = None,
                 buffer: ReplayBuffer | None = None, reset: Callable | None = None,
                 on_episode: Callable[[dict], None] | None = None,
                 on_action: Callable[[np.ndarray], None] | None = None) -> list[dict]:
    """Collect experience and learn until ``episodes`` or ``total_steps`` runs out.

    Warmup steps take uniform random actions; afterwards every environment
    step is followed by one gradient update. Truncations (time limits) are
    stored with done = False so they still bootstrap.
    """
    if episodes is None and total_steps is None:
        raise ValueError("need episodes or total_steps")
    cfg = agent.cfg
    rng = agent.rng
    if buffer is None:
        buffer = ReplayBuffer(agent.obs_dim, agent.action_dim, cfg.buffer_capacity)
    reset = reset or (lambda: env.reset())
    log: list[dict] = []
    steps = 0
    ep = 0
    while (episodes is None or ep < episodes) and (total_steps is None or steps < total_steps):
        obs = reset()
        ret, length = 0.0, 0
        last_loss = None
        while True:
            if steps < cfg.warmup_steps:
                a_norm = rng.uniform(-1.0, 1.0, agent.action_dim)
            else:
                a_norm = agent.act_norm(obs, cfg.exploration_noise)
            a_env = agent.to_env(a_norm)
            if on_action is not None:
                on_action(a_env)
            next_obs, reward, terminated, truncated, info = env.step(a_env)
            buffer.add(obs, a_norm, reward, next_obs, terminated)
            obs = next_obs
            ret += reward
            length += 1
            steps += 1
            if steps >= cfg.warmup_steps and len(buffer) >= cfg.batch_size:
                last_loss = agent.update(buffer.sample(cfg.batch_size, rng))
            if terminated or truncated or (total_steps is not None and steps >= total_steps):
                break
        ep += 1
        rec = {"type": "episode", "episode": ep, "return": ret, "length": length,
               "outcome": _outcome(info, terminated, truncated), "total_steps": steps,
               "critic_loss": None if last_loss is None else last_loss["critic_loss"]}
        log.append(rec)
        if on_episode is not None:
            on_episode(rec)
    return log


def random_start_goal(spec: ScenarioSpec, rng: np.random.Generator) -> tuple[Vec2, Vec2]:
    lim = spec.arena.half_extent - START_GOAL_MARGIN
    while True:
        s = Vec2(*rng.uniform(-lim, lim, 2))
        g = Vec2(*rng.uniform(-lim, lim, 2))
        if (g - s).norm() >= MIN_START_GOAL:
            return s, g


def train(cfg: Td3Config, scenario: ScenarioSpec, out_dir, *, risk: RiskConfig | None = None,
          env_config: EnvConfig | None = None,
          on_episode: Callable[[dict], None] | None = None) -> tuple[Td3Agent, list[dict]]:
    """Train a navigation policy; writes ``train_log.jsonl`` and checkpoints under ``out_dir``.

    For the TrainingRandom behavior, start and goal are re-drawn every
    episode. Every episode also gets a fresh obstacle seed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    env = GymNavEnv(NavEnv(scenario, risk or RiskConfig(), env_config or EnvConfig()))
    agent = Td3Agent(env.observation_dim, env.action_low, env.action_high, cfg, rng)
    checkpoint.save(out / "checkpoint_00000.bin", agent.networks)
    log_path = out / "train_log.jsonl"
    log_file = log_path.open("w")

    def reset():
        seed = int(rng.integers(0, 2**63 - 1))
        spec = replace(scenario, seed=seed)
        if scenario.behavior is Behavior.TRAINING_RANDOM:
            s, g = random_start_goal(scenario, rng)
            spec = replace(spec, start=s, goal=g)
        return env.reset(scenario=spec)

    def check_action(a):
        if np.any(a < env.action_low) or np.any(a > env.action_high):
            raise AssertionError(f"infeasible action {a}")

    def episode_done(rec):
        log_file.write(json.dumps(rec) + "\n")
        if rec["episode"] % cfg.checkpoint_every == 0:
            checkpoint.save(out / f"checkpoint_{rec['episode']:05d}.bin", agent.networks)
        if on_episode is not None:
            on_episode(rec)

    try:
        log = run_training(env, agent, episodes=cfg.episodes, reset=reset, on_episode=episode_done,
                           on_action=check_action)
    finally:
        log_file.close()
    checkpoint.save(out / "checkpoint.bin", agent.networks)
    return agent, log
