"""Command-line workflow: train, eval, replay, emulate, plot.

Every command is a deterministic function of (config file, flags,
seed); artifacts embed the merged config digest. Exit codes: 0 success,
1 validation error, 2 I/O error, 3 numerical failure. LOADER_RL_LOG
selects the log level (error, info, debug).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .checkpoint import CheckpointFormatError, PolicyCheckpoint, read_checkpoint
from .config import ConfigError, RunConfig, load_run_config
from .emulator import EmulationConfig, run_emulated_episode
from .env import ApproachEnv
from .evaluate import evaluate_policy, greedy_policy_fn, run_episode
from .oracle import LatchedBrakePolicy, OracleConfig, scripted_policy
from .plot import MetricsFormatError, read_metrics_csv, render_reward_curve_svg
from .trace import write_trace_csv
from .train import train

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


def _setup_logging() -> None:
    level_name = os.environ.get("LOADER_RL_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        raise ConfigError(f"LOADER_RL_LOG must be one of {sorted(levels)}, got {level_name!r}")
    logging.basicConfig(level=levels[level_name], format="%(levelname)s %(name)s: %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loader-rl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a policy and write metrics + checkpoints")
    p_train.add_argument("config", help="key=value config file")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--out", default="runs/latest", help="output directory")
    p_train.add_argument("--total-timesteps", type=int, default=None)

    p_eval = sub.add_parser("eval", help="greedy evaluation of a checkpoint")
    _policy_args(p_eval)
    p_eval.add_argument("--episodes", type=int, default=100)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--report", default=None, help="write the report to this file")

    p_replay = sub.add_parser("replay", help="write one greedy episode trace CSV")
    _policy_args(p_replay)
    p_replay.add_argument("--seed", type=int, default=0)
    p_replay.add_argument("--trace", required=True, help="output CSV path")
    p_replay.add_argument("--normalized", action="store_true",
                          help="min-max scale numeric columns to [0, 1]")
    p_replay.add_argument("--heading", type=float, default=None)

    p_emu = sub.add_parser("emulate", help="run a deployment-emulation episode")
    _policy_args(p_emu)
    p_emu.add_argument("--seed", type=int, default=0)
    p_emu.add_argument("--trace", required=True)
    p_emu.add_argument("--delay", type=float, default=None, help="position sensing delay, s")
    p_emu.add_argument("--rate-scale", type=float, default=None,
                       help="control rate as a fraction of the plant rate")
    p_emu.add_argument("--brake-model", choices=["ideal", "tapered"], default=None)
    p_emu.add_argument("--standstill", dest="standstill", action="store_true", default=None,
                       help="start from zero speed (deployment-like)")
    p_emu.add_argument("--no-standstill", dest="standstill", action="store_false")
    p_emu.add_argument("--heading", type=float, default=None)

    p_plot = sub.add_parser("plot", help="render the reward curve SVG from metrics.csv")
    p_plot.add_argument("--metrics", required=True)
    p_plot.add_argument("--out", required=True)
    return parser


def _policy_args(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--checkpoint", default=None, help="policy checkpoint file")
    group.add_argument("--scripted", action="store_true",
                       help="use the scripted reference policy instead of a checkpoint")
    p.add_argument("--config", default=None, help="key=value config file")


def _resolve_policy_and_config(args) -> tuple[RunConfig, PolicyCheckpoint | None]:
    """Environment settings come from --config when given, otherwise from
    the checkpoint; an explicit config must match the checkpoint's."""
    ckpt = None
    if args.checkpoint is not None:
        ckpt = read_checkpoint(args.checkpoint)
    overrides = {"seed": str(args.seed)} if args.seed is not None else {}
    if args.config is not None:
        run = load_run_config(args.config, overrides, require_seed=args.seed is None)
        if ckpt is not None and ckpt.env_digest != run.env_digest:
            raise ConfigError(
                f"checkpoint env digest {ckpt.env_digest} does not match the "
                f"config's {run.env_digest}; refusing to evaluate across environments"
            )
    else:
        run = load_run_config(None, overrides, require_seed=False)
        if ckpt is not None:
            run = RunConfig(
                env=ckpt.env_config, vehicle=ckpt.vehicle_params,
                train=ckpt.train_config, emulation=run.emulation, seed=run.seed,
            )
    return run, ckpt


def _decide_fn(run: RunConfig, ckpt: PolicyCheckpoint | None, scripted: bool, latched: bool = False):
    if scripted:
        oracle = OracleConfig(env=run.env, vehicle=run.vehicle)
        if latched:
            return LatchedBrakePolicy(oracle)
        return lambda obs: scripted_policy(obs, oracle)
    return greedy_policy_fn(ckpt.params)


def cmd_train(args) -> int:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.total_timesteps is not None:
        overrides["train.total_timesteps"] = str(args.total_timesteps)
    run = load_run_config(args.config, overrides)
    train_config = run.train
    if run.seed != train_config.seed:
        import dataclasses

        train_config = dataclasses.replace(train_config, seed=run.seed)
    out_dir = Path(args.out)
    result = train(
        lambda: ApproachEnv(run.env, run.vehicle),
        train_config,
        out_dir=out_dir,
        config_digest=run.digest,
    )
    print(f"trained {result.last.timesteps} timesteps, {len(result.metrics)} updates")
    if result.best_eval is not None:
        print(f"best eval success rate {result.best_eval[0]:.2f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    run, ckpt = _resolve_policy_and_config(args)
    decide = _decide_fn(run, ckpt, args.scripted)
    env = ApproachEnv(run.env, run.vehicle)
    # replay a trained policy at its training-time control rate
    interval = run.train.control_interval if ckpt is not None else 1
    report = evaluate_policy(
        env, decide, args.episodes, args.seed,
        config_digest=run.digest,
        notes={
            "learning_rate": run.train.learning_rate,
            "seed": args.seed,
            "control_interval": interval,
            "exploration_mode": run.train.exploration_mode.value,
        },
        decision_interval=interval,
    )
    text = report.to_text()
    if args.report:
        with open(args.report, "w") as f:
            f.write(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_replay(args) -> int:
    run, ckpt = _resolve_policy_and_config(args)
    decide = _decide_fn(run, ckpt, args.scripted)
    env = ApproachEnv(run.env, run.vehicle)
    interval = run.train.control_interval if ckpt is not None else 1
    _, trace = run_episode(
        env, decide, args.seed, heading=args.heading,
        collect_trace=True, config_digest=run.digest,
        decision_interval=interval,
    )
    write_trace_csv(trace, args.trace, normalized=args.normalized)
    print(f"wrote {len(trace.rows)}-step trace ({trace.outcome.value}) to {args.trace}")
    return EXIT_OK


def cmd_emulate(args) -> int:
    run, ckpt = _resolve_policy_and_config(args)
    import dataclasses

    emu = run.emulation
    if args.delay is not None:
        emu = dataclasses.replace(emu, position_delay=args.delay)
    if args.rate_scale is not None:
        emu = dataclasses.replace(emu, rate_scale=args.rate_scale)
    if args.brake_model is not None:
        from .sim import BrakeModel

        emu = dataclasses.replace(emu, brake_model=BrakeModel(args.brake_model))
    if args.standstill is not None:
        emu = dataclasses.replace(emu, start_from_standstill=args.standstill)
    policy = ckpt if ckpt is not None else _decide_fn(run, None, True, latched=True)
    trace = run_emulated_episode(
        policy, emu, args.seed, run.env, run.vehicle,
        heading=args.heading, config_digest=run.digest,
    )
    write_trace_csv(trace, args.trace)
    print(f"wrote {len(trace.rows)}-step emulation trace ({trace.outcome.value}) to {args.trace}")
    return EXIT_OK


def cmd_plot(args) -> int:
    rows, digest = read_metrics_csv(args.metrics)
    svg = render_reward_curve_svg(rows, digest)
    with open(args.out, "w") as f:
        f.write(svg)
    print(f"wrote {args.out}")
    return EXIT_OK


_COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "replay": cmd_replay,
    "emulate": cmd_emulate,
    "plot": cmd_plot,
}


def main(argv: list[str] | None = None) -> int:
    try:
        _setup_logging()
        parser = _build_parser()
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (ConfigError, ValueError, MetricsFormatError, CheckpointFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
