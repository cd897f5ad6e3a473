"""Command-line interface.

Subcommands: train, evaluate, baseline-cccv, gp-check. Every command prints
a one-line summary and writes CSV logs / JSON checkpoints under --out.
Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags or
unreadable input files).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .config import ConfigError, ExperimentConfig, load_config
from .diagnostics import run_gp_check
from .harness import (MODES, load_checkpoint, summarize, train,
                      write_run_outputs)
from .protocols import evaluate, make_cccv_policy


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of calling sys.exit on errors."""

    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _build_parser() -> _Parser:
    parser = _Parser(prog="safecharge",
                     description="Safe TD3 battery fast-charging experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run a training study")
    p_train.add_argument("--mode", required=True, choices=MODES)
    p_train.add_argument("--config", help="JSON config (defaults to the fixed study)")
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--episodes", type=int, help="override config.episodes")
    p_train.add_argument("--seed", type=int, help="override config.seed")

    p_eval = sub.add_parser("evaluate", help="roll out a trained checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--config", help="JSON config (defaults to the fixed study)")
    p_eval.add_argument("--episodes", type=int, default=1)
    p_eval.add_argument("--out", required=True)

    p_cccv = sub.add_parser("baseline-cccv", help="run the CCCV baseline")
    p_cccv.add_argument("--config", help="JSON config (defaults to the fixed study)")
    p_cccv.add_argument("--episodes", type=int, default=1)
    p_cccv.add_argument("--out", required=True)

    p_check = sub.add_parser("gp-check", help="run GP-oracle and gradient-check suites")
    p_check.add_argument("--out", required=True)
    return parser


def _load_config_arg(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return load_config(path)


def _cmd_train(args) -> int:
    config = _load_config_arg(args.config)
    overrides = {}
    if args.episodes is not None:
        overrides["episodes"] = args.episodes
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = dataclasses.replace(config, **overrides)
    result = train(config, args.mode)
    write_run_outputs(args.out, result.logs, result.agent, result.safety, result.mode)
    print(f"train mode={args.mode} {summarize(result.logs)}")
    return 0


def _cmd_evaluate(args) -> int:
    config = _load_config_arg(args.config)
    # Validate inputs before creating any output files.
    agent, safety, mode = load_checkpoint(args.checkpoint, config)
    adaptive = mode == "adaptive-safe"

    def policy(battery_state, agent_state):
        return agent.select_action(agent_state, rng=None, explore=False)

    _, logs = evaluate(config, policy, safety=safety, adaptive=adaptive,
                       episodes=args.episodes)
    write_run_outputs(args.out, logs)
    print(f"evaluate mode={mode} {summarize(logs)}")
    return 0


def _cmd_cccv(args) -> int:
    config = _load_config_arg(args.config)
    _, logs = evaluate(config, make_cccv_policy(config), episodes=args.episodes)
    write_run_outputs(args.out, logs)
    print(f"baseline-cccv {summarize(logs)}")
    return 0


def _cmd_gp_check(args) -> int:
    ok, results = run_gp_check()
    os.makedirs(args.out, exist_ok=True)
    for r in results:
        print(r.line())
    with open(os.path.join(args.out, "gp_check_report.json"), "w") as fh:
        json.dump({"passed": ok,
                   "suites": [{"name": r.name, "passed": r.passed,
                               "detail": r.detail} for r in results]}, fh, indent=2)
    print(f"gp-check {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cli(argv) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        if args.command == "baseline-cccv":
            return _cmd_cccv(args)
        if args.command == "gp-check":
            return _cmd_gp_check(args)
        return 2
    except (FileNotFoundError, ConfigError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
