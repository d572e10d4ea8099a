"""Episode scoring (success, arrival time, ego and social scores) and suite evaluation."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .env import EnvConfig, NavEnv, Terminal, observation_length
from .risk import RiskConfig
from .world import ScenarioSpec

ROBOT_WIDTH = 0.178
EGO_RATIO = 0.787
EGO_RADIUS = EGO_RATIO * ROBOT_WIDTH

CSV_COLUMNS = ["behavior", "obstacles", "runs", "success_rate", "mean_arrival_s", "ego", "social", "overall"]
ALT_COLUMNS = ["ego_alt_n", "social_alt_n"]


class PolicyMismatch(ValueError):
    pass


@dataclass
class EpisodeLog:
    header: dict
    steps: list[dict]
    outcome: str
    dt: float = 0.15

    @property
    def arrival_time(self) -> float | None:
        return len(self.steps) * self.dt if self.outcome == Terminal.GOAL.value else None


@dataclass(frozen=True)
class ScoreReport:
    behavior: str
    obstacles: int
    runs: int
    success_rate: float
    mean_arrival_time: float  # over successful runs; nan when there are none
    ego_score: float
    social_score: float
    ego_alt: float | None = None
    social_alt: float | None = None
    episodes: tuple = field(default=(), compare=False, repr=False)

    @property
    def overall(self) -> float:
        return (self.ego_score + self.social_score) / 2

    def csv_row(self) -> list[str]:
        row = [self.behavior, str(self.obstacles), str(self.runs), _fmt(self.success_rate),
               _fmt(self.mean_arrival_time), _fmt(self.ego_score), _fmt(self.social_score), _fmt(self.overall)]
        if self.ego_alt is not None:
            row += [_fmt(self.ego_alt), _fmt(self.social_alt)]
        return row


def _fmt(x: float) -> str:
    return "nan" if x is None or math.isnan(x) else f"{x:.6f}"


# --------------------------------------------------------------------------- per-step / per-episode


def ego_violation(record: dict, ego_radius: float = EGO_RADIUS) -> bool:
    d = record.get("min_obstacle_distance")
    return d is not None and d < ego_radius


def social_violation(record: dict, cfg: RiskConfig | None = None) -> bool:
    threshold = (cfg or RiskConfig()).social_ttc_threshold
    return record.get("max_p_ttc", 0.0) > threshold


def _in_detection_range(record: dict, detection_range: float) -> bool:
    d = record.get("min_obstacle_distance")
    return d is not None and d <= detection_range


def score_episode(log: EpisodeLog, ego_radius: float = EGO_RADIUS, cfg: RiskConfig | None = None,
                  alternative_n: bool = False) -> tuple[float, float]:
    """(ego, social) with N = all steps, or with N = steps that had an obstacle in
    detection range when ``alternative_n`` (violations are counted on those steps only;
    an episode with no such step scores 100).
    """
    cfg = cfg or RiskConfig()
    steps = log.steps
    if alternative_n:
        steps = [r for r in steps if _in_detection_range(r, cfg.l_max)]
        if not steps:
            return 100.0, 100.0
    n = len(steps)
    if n == 0:
        raise ValueError("cannot score an episode with zero steps")
    k = sum(ego_violation(r, ego_radius) for r in steps)
    m = sum(social_violation(r, cfg) for r in steps)
    return (1 - k / n) * 100, (1 - m / n) * 100


def run_episode(env: NavEnv, policy, seed: int, log_path: str | Path | None = None) -> EpisodeLog:
    """Play one episode; optionally write header / step / outcome JSONL records."""
    obs = env.reset(seed=seed)
    header = env.header_record()
    steps = []
    while True:
        res = env.step(policy.act(env, obs))
        obs = res.observation
        steps.append(res.record)
        if res.terminal is not Terminal.RUNNING:
            break
    log = EpisodeLog(header, steps, res.terminal.value, env.config.dt)
    if log_path is not None:
        ego, social = score_episode(log, cfg=env.risk)
        outcome = {"type": "outcome", "outcome": log.outcome, "steps": len(steps),
                   "arrival_time": log.arrival_time, "ego": ego, "social": social}
        with open(log_path, "w") as f:
            for rec in (header, *steps, outcome):
                f.write(json.dumps(rec) + "\n")
    return log


def read_episode_log(path: str | Path) -> EpisodeLog:
    header, steps, outcome, dt = None, [], None, 0.15
    with open(path) as f:
        for n, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{n}: bad JSON ({e.msg})") from None
            kind = rec.get("type")
            if kind == "episode":
                header = rec
            elif kind == "step":
                steps.append(rec)
            elif kind == "outcome":
                outcome = rec["outcome"]
    if header is None:
        raise ValueError(f"{path}: no episode header record")
    if outcome is None:
        outcome = steps[-1]["terminal"] if steps else Terminal.RUNNING.value
    return EpisodeLog(header, steps, outcome, dt)


# --------------------------------------------------------------------------- suites


def check_compatible(policy, risk: RiskConfig, env_config: EnvConfig) -> None:
    want = getattr(policy, "obs_dim", None)
    have = observation_length(risk.k, env_config.laser_sectors)
    if want is None or want == have:
        return
    base = env_config.laser_sectors + 6
    k_policy = (want - base) / 4
    k_text = str(int(k_policy)) if k_policy == int(k_policy) else f"non-integer ({k_policy})"
    raise PolicyMismatch(f"checkpoint was trained with K={k_text} (observation length {want}) "
                         f"but the scenario is configured with K={risk.k} (observation length {have})")


def run_seeds(suite_seed: int, n_scenarios: int, runs: int) -> list[list[int]]:
    """Per-scenario, per-run episode seeds derived from one suite seed."""
    children = np.random.SeedSequence(suite_seed).spawn(n_scenarios)
    return [[int(s) for s in c.generate_state(runs, np.uint64)] for c in children]


def _episode_job(args):
    policy, spec, risk, env_config, seed, log_path = args
    env = NavEnv(spec, risk, env_config)
    log = run_episode(env, policy, seed, log_path)
    return log.outcome, len(log.steps), log.arrival_time, score_episode(log, cfg=risk), \
        score_episode(log, cfg=risk, alternative_n=True)


def evaluate_suite(policy, scenarios: list[ScenarioSpec], runs: int = 10, seed: int = 0, *,
                   risk: RiskConfig | None = None, env_config: EnvConfig | None = None,
                   log_dir: str | Path | None = None, csv_path: str | Path | None = None,
                   workers: int = 1, alternative_n: bool = False) -> list[ScoreReport]:
    """Run ``runs`` episodes per scenario and reduce them in scenario order.

    Results never depend on ``workers``: seeds are fixed up front and
    reduction follows scenario/run order, not completion order.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    risk = risk or RiskConfig()
    env_config = env_config or EnvConfig()
    check_compatible(policy, risk, env_config)
    seeds = run_seeds(seed, len(scenarios), runs)
    jobs = []
    for si, spec in enumerate(scenarios):
        for r in range(runs):
            path = None
            if log_dir is not None:
                path = Path(log_dir) / f"{si:02d}_{spec.behavior.value}_run{r:02d}.jsonl"
            jobs.append((policy, spec, risk, env_config, seeds[si][r], path))
    if log_dir is not None:
        Path(log_dir).mkdir(parents=True, exist_ok=True)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_episode_job, jobs))
    else:
        results = [_episode_job(j) for j in jobs]

    reports = []
    for si, spec in enumerate(scenarios):
        eps = results[si * runs:(si + 1) * runs]
        goals = [e for e in eps if e[0] == Terminal.GOAL.value]
        reports.append(ScoreReport(
            behavior=spec.behavior.value,
            obstacles=spec.obstacle_count,
            runs=runs,
            success_rate=len(goals) / runs * 100,
            mean_arrival_time=float(np.mean([e[2] for e in goals])) if goals else math.nan,
            ego_score=float(np.mean([e[3][0] for e in eps])),
            social_score=float(np.mean([e[3][1] for e in eps])),
            ego_alt=float(np.mean([e[4][0] for e in eps])) if alternative_n else None,
            social_alt=float(np.mean([e[4][1] for e in eps])) if alternative_n else None,
            episodes=tuple(e[:3] for e in eps),
        ))
    if csv_path is not None:
        Path(csv_path).write_text(reports_to_csv(reports))
    return reports


def reports_to_csv(reports: list[ScoreReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    alt = any(r.ego_alt is not None for r in reports)
    w.writerow(CSV_COLUMNS + (ALT_COLUMNS if alt else []))
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()
