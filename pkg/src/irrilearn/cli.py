"""Command-line entry point.

Four commands: ``train`` fits a decision rule and writes the best
checkpoint plus a per-episode log; ``evaluate`` replays a checkpoint
over held-out years and writes the results table and daily traces;
``benchmark`` searches each year individually for an upper-bound
profit and its schedule; ``inspect`` describes a checkpoint file.

Exit codes: 0 success, 2 configuration error, 3 runtime/numeric error.
Errors are a single machine-parsable line on stderr:
``error: <category>: <message>``.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from typing import Optional

import numpy as np

from . import cropsim, learner, reports
from .config import ConfigError, RunConfig, load_config, write_resolved_config
from .core import DomainError, NumericError, ParseError, UsageError
from .learner import TrainConfig, benchmark_search, evaluate, train
from .policy import (
    CheckpointError,
    checkpoint_header_size,
    load_checkpoint,
    param_count,
    save_checkpoint,
)
from .weather import load_weather_dir


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--seed", type=int, help="override the run seed")
    p.add_argument("--out", help="override the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irrilearn",
        description="Learn, evaluate, and benchmark daily irrigation decision rules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the training loop")
    _add_common(p_train)
    p_train.add_argument("--episodes", type=int, help="override training episode count")
    p_train.add_argument("--weather-dir", help="override the training weather directory")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="test a checkpoint on held-out years")
    _add_common(p_eval)
    p_eval.add_argument("--checkpoint", help="checkpoint file to evaluate")
    p_eval.add_argument("--weather-dir", help="override the test weather directory")
    p_eval.add_argument("--replicates", type=int, help="replicate episodes per year")
    p_eval.add_argument(
        "--benchmarks", help="benchmark CSV supplying the per-year upper bounds"
    )
    p_eval.add_argument(
        "--paper-format",
        action="store_true",
        help="round trace columns to survey precision",
    )
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser("benchmark", help="per-year best-schedule search")
    _add_common(p_bench)
    p_bench.add_argument("--weather-dir", help="override the test weather directory")
    p_bench.add_argument("--budget", type=int, help="search episodes per year")
    p_bench.add_argument(
        "--years", help="comma-separated year ids to search (default: all)"
    )
    p_bench.set_defaults(func=cmd_benchmark)

    p_inspect = sub.add_parser("inspect", help="describe a checkpoint file")
    p_inspect.add_argument("--checkpoint", required=True)
    p_inspect.set_defaults(func=cmd_inspect)

    return parser


def _load(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "seed": getattr(args, "seed", None),
        "out": getattr(args, "out", None),
        "episodes": getattr(args, "episodes", None),
        "replicates": getattr(args, "replicates", None),
    }
    return load_config(getattr(args, "config", None), overrides)


def _require_weather_dir(path: Optional[str], role: str) -> str:
    if path is None:
        raise ConfigError(f"no {role} weather directory configured")
    if not os.path.isdir(path):
        raise ConfigError(f"{role} weather directory not found: {path}")
    return path


def _train_config(cfg: RunConfig, pool) -> TrainConfig:
    offset, scale = cfg.input_normalization()
    return TrainConfig(
        pool=pool,
        env=cfg.env_config(),
        arch=cfg.arch_config(),
        episodes=cfg.training.episodes,
        alpha=cfg.training.alpha,
        ma_order=cfg.training.ma_order,
        seed=cfg.training.seed,
        checkpoint_every=cfg.training.checkpoint_every,
        init_scale=cfg.architecture.init_scale,
        frozen_theta_gradients=cfg.training.frozen_theta_gradients,
        input_offset=offset,
        input_scale=scale,
    )


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _load(args)
    weather_dir = getattr(args, "weather_dir", None) or cfg.paths.train_weather_dir
    weather_dir = _require_weather_dir(weather_dir, "training")
    pool = load_weather_dir(weather_dir)
    out = cfg.paths.out_dir
    os.makedirs(out, exist_ok=True)
    write_resolved_config(cfg, out)
    tc = _train_config(cfg, pool)
    checkpoint_path = os.path.join(out, "checkpoint.bin")
    log_path = os.path.join(out, "trainlog.csv")
    started = time.monotonic()
    with open(log_path, "w", encoding="utf-8", newline="") as log_stream:
        params, log = train(tc, log_stream=log_stream, checkpoint_path=checkpoint_path)
    elapsed = time.monotonic() - started
    save_checkpoint(params, checkpoint_path)
    summary = (
        f"episodes: {tc.episodes}\n"
        f"best_moving_average: {log.best_ma!r}\n"
        f"best_episode: {log.best_episode}\n"
        f"wall_time_s: {elapsed:.3f}\n"
    )
    with open(os.path.join(out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(summary)
    print(
        f"trained {tc.episodes} episodes; best moving average "
        f"{log.best_ma:.2f} at episode {log.best_episode}; wrote {checkpoint_path}"
    )
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    checkpoint = args.checkpoint or cfg.paths.checkpoint
    if checkpoint is None:
        raise ConfigError("no checkpoint given (--checkpoint or [paths] checkpoint)")
    params = load_checkpoint(checkpoint)
    arch = cfg.arch_config()
    if params.arch != arch:
        raise ConfigError(
            f"checkpoint architecture {params.arch.dims} does not match "
            f"configured architecture {arch.dims}"
        )
    params.input_offset, params.input_scale = cfg.input_normalization()
    weather_dir = getattr(args, "weather_dir", None) or cfg.paths.test_weather_dir
    weather_dir = _require_weather_dir(weather_dir, "test")
    pool = load_weather_dir(weather_dir)
    benchmarks = (
        reports.read_benchmarks_csv(args.benchmarks) if args.benchmarks else {}
    )
    env = cfg.env_config()
    out = cfg.paths.out_dir
    traces_dir = os.path.join(out, "traces")
    os.makedirs(traces_dir, exist_ok=True)
    write_resolved_config(cfg, out)
    rows = []
    for year in pool.years:
        result = evaluate(
            params, year, env, replicates=cfg.replicates, base_seed=cfg.training.seed
        )
        for r, trace in enumerate(result.traces):
            reports.write_trace_csv(
                trace,
                env.actions,
                os.path.join(traces_dir, f"trace_{year.year_id}_r{r:02d}.csv"),
                paper_format=args.paper_format,
            )
        row = {
            "year": year.year_id,
            "test_profit_mean": result.mean_profit,
            "test_profit_sd": result.sd_profit,
        }
        bench = benchmarks.get(year.year_id)
        if bench is not None:
            row["benchmark"] = bench
            if result.mean_profit > bench:
                # Possible through stochastic-policy luck; flagged, not fatal.
                print(
                    f"note: {year.year_id} test profit {result.mean_profit:.2f} "
                    f"exceeds benchmark {bench:.2f}",
                    file=sys.stderr,
                )
        rows.append(row)
    reports.write_results_csv(rows, os.path.join(out, "results.csv"))
    print(
        f"evaluated {len(pool.years)} year(s) x {cfg.replicates} replicates; "
        f"wrote {os.path.join(out, 'results.csv')}"
    )
    return 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    cfg = _load(args)
    weather_dir = getattr(args, "weather_dir", None) or cfg.paths.test_weather_dir
    weather_dir = _require_weather_dir(weather_dir, "test")
    pool = load_weather_dir(weather_dir)
    years = pool.years
    if args.years:
        wanted = {int(y) for y in args.years.split(",")}
        years = tuple(y for y in pool.years if y.year_id in wanted)
        if not years:
            raise ConfigError(f"no configured weather for years {sorted(wanted)}")
    budget = args.budget if args.budget is not None else cfg.training.episodes
    out = cfg.paths.out_dir
    os.makedirs(out, exist_ok=True)
    write_resolved_config(cfg, out)
    rows = []
    for year in years:
        tc = _train_config(cfg, pool)
        result = benchmark_search(year, budget, tc)
        reports.write_schedule_csv(
            result.schedule, os.path.join(out, f"schedule_{year.year_id}.csv")
        )
        rows.append(
            {
                "year": year.year_id,
                "benchmark_profit": result.best_profit,
                "episodes_used": result.episodes_used,
            }
        )
    reports.write_benchmarks_csv(rows, os.path.join(out, "benchmarks.csv"))
    with open(os.path.join(out, "benchmark_meta.toml"), "w", encoding="utf-8") as fh:
        fh.write(
            "# search settings behind benchmarks.csv\n"
            f"budget_episodes = {budget}\n"
            f"alpha = {cfg.training.alpha!r}\n"
            f"seed = {cfg.training.seed}\n"
            "uniform_exploration_every = 10\n"
            "zero_schedule_seeds_maximum = true\n"
        )
    print(f"benchmarked {len(years)} year(s); wrote {os.path.join(out, 'benchmarks.csv')}")
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    params = load_checkpoint(args.checkpoint)
    arch = params.arch
    theta = params.theta
    print(f"checkpoint: {args.checkpoint}")
    print("format_version: 1")
    print(f"architecture: {' -> '.join(str(d) for d in arch.dims)}")
    print(f"bias_on_first_hidden: {str(arch.bias_on_first_hidden).lower()}")
    print(f"parameters: {param_count(arch)}")
    print(f"l2_norm: {np.linalg.norm(theta)!r}")
    print(f"mean: {theta.mean()!r}")
    print(f"min: {theta.min()!r}")
    print(f"max: {theta.max()!r}")
    print(f"file_bytes: {os.path.getsize(args.checkpoint)}")
    print(f"header_bytes: {checkpoint_header_size(arch)}")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except (ParseError, DomainError, UsageError, NumericError, CheckpointError) as exc:
        print(f"error: runtime: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
