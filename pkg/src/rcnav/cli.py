"""Command line entry point: ``rcnav {train,eval,replay,scenarios}``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import re
import subprocess
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, apply_overrides, dump_config, parse_config
from .metrics import PolicyMismatch, evaluate_suite, read_episode_log, reports_to_csv
from .policies import ActorPolicy, ScriptedPolicy
from .render import render_svg
from .td3.checkpoint import CheckpointError
from .td3.train import train
from .world import Behavior, SpawnError

log = logging.getLogger("rcnav")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

BEHAVIOR_HELP = {
    Behavior.CROSSING: "obstacles cross the start-goal line from alternating sides",
    Behavior.TOWARDS: "obstacles head for the robot's start region",
    Behavior.AHEAD: "obstacles move along the path ahead of the robot",
    Behavior.RANDOM: "obstacles move in uniformly random directions",
    Behavior.TRAINING_RANDOM: "random directions and speeds in (0, max]; training arena",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_id() -> str:
    here = Path(__file__).resolve().parent
    try:
        res = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if res.returncode == 0 and res.stdout.strip():
            return res.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{__version__}-unknown"


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rcnav", description="Risk-aware crowd navigation: training, evaluation, replay.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", type=Path, help="config file (key = value, [section] headers)")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key; repeatable")
        sp.add_argument("--seed", type=int, help="run seed (falls back to RCNAV_SEED, then the config)")
        sp.add_argument("--k", type=int, help="number of critical obstacles in the observation")
        sp.add_argument("--alpha", type=float, help="weight of the time-to-collision term")
        sp.add_argument("--output-dir", type=Path, help="parent directory for run directories")
        sp.add_argument("--run-dir", type=Path, help="exact run directory (skips the timestamp naming)")

    t = sub.add_parser("train", help="train a TD3 navigation policy")
    common(t)
    t.add_argument("--episodes", type=int)

    e = sub.add_parser("eval", help="evaluate a policy over the behavior suite")
    common(e)
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--checkpoint", type=Path, help="trained checkpoint to evaluate")
    src.add_argument("--scripted", action="store_true", help="use the hand-coded waypoint policy")
    e.add_argument("--runs", type=int)
    e.add_argument("--workers", type=int)
    e.add_argument("--behaviors", help="comma-separated behaviors")

    r = sub.add_parser("replay", help="render a logged episode to SVG")
    r.add_argument("--log", type=Path, required=True, help="episode JSONL log")
    r.add_argument("--out", type=Path, help="output SVG (default: next to the log)")

    sub.add_parser("scenarios", help="list crowd behaviors")
    return p


def _load_config(args) -> RunConfig:
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {args.config}: {e.strerror}") from None
    cfg = parse_config(text)
    overrides: dict[str, str] = {}
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    seed = args.seed
    if seed is None and "seed" not in overrides and not re.search(r"(?m)^\s*seed\s*=", text):
        env_seed = os.environ.get("RCNAV_SEED")
        if env_seed is not None:
            seed = env_seed
    flags = {"seed": seed, "k": args.k, "alpha": args.alpha, "output_dir": args.output_dir,
             "episodes": getattr(args, "episodes", None), "runs": getattr(args, "runs", None),
             "workers": getattr(args, "workers", None), "behaviors": getattr(args, "behaviors", None)}
    overrides.update({k: str(v) for k, v in flags.items() if v is not None})
    return apply_overrides(cfg, overrides)


def _run_dir(args, cfg: RunConfig) -> Path:
    if args.run_dir is not None:
        path = args.run_dir
    else:
        stamp = _dt.datetime.now().strftime("%Y%m%dT%H%M%S")
        base = Path(cfg.output_dir) / f"{stamp}_seed{cfg.seed}"
        path, n = base, 1
        while path.exists():
            path = base.with_name(f"{base.name}-{n}")
            n += 1
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(run: Path, cfg: RunConfig, args, argv: list[str]) -> None:
    (run / "config.ini").write_text(dump_config(cfg))
    manifest = {"command": args.command, "argv": argv, "seed": cfg.seed, "build": build_id(),
                "version": __version__}
    (run / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def cmd_scenarios(args, argv) -> int:
    for b in Behavior:
        print(f"{b.value:16s} {BEHAVIOR_HELP[b]}")
    return EXIT_OK


def cmd_train(args, argv) -> int:
    cfg = _load_config(args)
    run = _run_dir(args, cfg)
    _write_manifest(run, cfg, args, argv)

    def progress(rec):
        log.info("episode %d: return %.1f, %d steps, %s", rec["episode"], rec["return"], rec["length"],
                 rec["outcome"])

    train(cfg.td3_config(), cfg.training_scenario(), run, risk=cfg.risk_config(), env_config=cfg.env_config(),
          on_episode=progress)
    print(run)
    return EXIT_OK


def cmd_eval(args, argv) -> int:
    cfg = _load_config(args)
    policy = ScriptedPolicy() if args.scripted else ActorPolicy.from_checkpoint(args.checkpoint)
    run = _run_dir(args, cfg)
    _write_manifest(run, cfg, args, argv)
    reports = evaluate_suite(policy, cfg.eval_scenarios(), cfg.runs, cfg.seed, risk=cfg.risk_config(),
                             env_config=cfg.env_config(), log_dir=run / "episodes", csv_path=run / "scores.csv",
                             workers=cfg.workers, alternative_n=cfg.alternative_n)
    sys.stdout.write(reports_to_csv(reports))
    print(run)
    return EXIT_OK


def cmd_replay(args, argv) -> int:
    ep = read_episode_log(args.log)
    out = args.out if args.out is not None else args.log.with_suffix(".svg")
    out.write_text(render_svg(ep))
    print(out)
    return EXIT_OK


COMMANDS = {"scenarios": cmd_scenarios, "train": cmd_train, "eval": cmd_eval, "replay": cmd_replay}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parser().parse_args(argv)
        if args.command is None:
            raise UsageError("rcnav: a subcommand is required (train, eval, replay, scenarios)")
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args, argv)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, CheckpointError, PolicyMismatch, SpawnError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
