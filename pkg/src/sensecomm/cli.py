"""Command-line entry point.

Subcommands: train, eval, sweep-comm-snr, sweep-sensing-snr,
sweep-output-size, gradcheck. Exit codes: 0 success, 2 usage or data
errors, 1 runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import harness
from .dataset import load_cifar10
from .errors import ConfigError, CorruptDatasetError
from .harness import (
    DEFAULT_COMM_SNR_POINTS,
    DEFAULT_OUTPUT_SIZES,
    DEFAULT_SENSING_SNR_POINTS,
    ExperimentConfig,
    emit_report,
    evaluate,
    run_experiment,
    summary_line,
)
from .models import load_checkpoint, save_checkpoint
from .selfcheck import run_gradient_checks


def _add_common_flags(p: argparse.ArgumentParser, data: bool = True):
    if data:
        p.add_argument("--data-dir", required=True,
                       help="directory with the CIFAR-10 binary batch files")
    p.add_argument("--channel", choices=["awgn", "rayleigh"], default="awgn")
    p.add_argument("--comm-snr-db", type=float, default=3.0)
    p.add_argument("--sensing-snr-db", type=float, default=-3.0,
                   help="vehicle-class sensing SNR in dB")
    p.add_argument("--offset-db", type=float, default=6.0,
                   help="how many dB below vehicles animals reflect")
    p.add_argument("--output-size", type=int, default=20,
                   help="encoder output size n_c for both encoders")
    p.add_argument("--mode", choices=["joint", "sensing-only"], default="joint")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval-seed", type=int, default=1234)
    p.add_argument("--out", default="runs", help="output directory")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--config", help="JSON or key=value file; flags override it")
    p.add_argument("--limit-train", type=int, default=None,
                   help="truncate the training split (smoke runs)")
    p.add_argument("--limit-test", type=int, default=None,
                   help="truncate the test split (smoke runs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensecomm",
        description="Joint sensing and task-oriented communications simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one model and report metrics")
    _add_common_flags(p_train)

    p_eval = sub.add_parser("eval", help="evaluate a saved checkpoint")
    _add_common_flags(p_eval)
    p_eval.add_argument("--checkpoint", required=True)

    for name, flag in [("sweep-comm-snr", "communication SNR points (dB)"),
                       ("sweep-sensing-snr", "vehicle sensing SNR points (dB)"),
                       ("sweep-output-size", "encoder output sizes")]:
        p_sweep = sub.add_parser(name, help=f"sweep over {flag}")
        _add_common_flags(p_sweep)
        p_sweep.add_argument("--points", help=f"comma-separated {flag}")

    p_check = sub.add_parser("gradcheck",
                             help="finite-difference checks per layer and end to end")
    p_check.add_argument("--tolerance", type=float, default=None,
                         help="override the per-check pass thresholds")

    return parser


# config-file keys map onto flag destinations; a file sets new parser
# defaults, so explicit flags always win
CONFIG_KEYS = {
    "channel": ("channel", str),
    "comm_snr_db": ("comm_snr_db", float),
    "sensing_snr_db": ("sensing_snr_db", float),
    "offset_db": ("offset_db", float),
    "output_size": ("output_size", int),
    "mode": ("mode", str),
    "epochs": ("epochs", int),
    "batch_size": ("batch_size", int),
    "seed": ("seed", int),
    "eval_seed": ("eval_seed", int),
    "out": ("out", str),
    "format": ("format", str),
    "data_dir": ("data_dir", str),
}


def _load_config_file(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        out = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
        return out


def _apply_config_file(parser: argparse.ArgumentParser, argv) -> None:
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    found, _ = probe.parse_known_args(argv)
    if not found.config:
        return
    values = _load_config_file(found.config)
    defaults = {}
    for key, raw in values.items():
        if key not in CONFIG_KEYS:
            parser.error(f"unknown config key {key!r}")
        dest, cast = CONFIG_KEYS[key]
        defaults[dest] = cast(raw)
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                known = {a.dest for a in sub._actions}
                sub.set_defaults(**{k: v for k, v in defaults.items() if k in known})


def _experiment_config(args) -> ExperimentConfig:
    return ExperimentConfig(
        channel_kind=args.channel,
        comm_snr_db=args.comm_snr_db,
        vehicle_sensing_snr_db=args.sensing_snr_db,
        animal_offset_db=args.offset_db,
        n_c=args.output_size,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        eval_seed=args.eval_seed,
        mode=args.mode.replace("-", "_"),
    )


def _load_data(args, parser):
    if not os.path.isdir(args.data_dir):
        parser.error(f"data directory not found: {args.data_dir}")
    try:
        dataset = load_cifar10(args.data_dir)
    except CorruptDatasetError as exc:
        parser.error(str(exc))
    dataset.train = dataset.train.subset(args.limit_train)
    dataset.test = dataset.test.subset(args.limit_test)
    return dataset


def _parse_points(raw: str | None, default, cast):
    if raw is None:
        return list(default)
    try:
        return [cast(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --points value: {exc}") from None


def _cmd_train(args, parser) -> int:
    cfg = _experiment_config(args)
    dataset = _load_data(args, parser)
    os.makedirs(args.out, exist_ok=True)
    started = time.monotonic()
    pipeline, result = run_experiment(cfg, dataset, log_fn=print)
    runtime = time.monotonic() - started
    ckpt = os.path.join(args.out, "checkpoint.bin")
    save_checkpoint(pipeline, ckpt, seed=cfg.seed)
    report = os.path.join(args.out, f"metrics.{args.format}")
    emit_report(result, report, args.format)
    metrics = harness.Metrics.from_dict(result["metrics"])
    print(summary_line(metrics, runtime))
    print(f"wrote {ckpt} and {report}")
    return 0


def _cmd_eval(args, parser) -> int:
    cfg = _experiment_config(args)
    dataset = _load_data(args, parser)
    started = time.monotonic()
    pipeline, header = load_checkpoint(args.checkpoint)
    cfg.n_c = pipeline.cfg.n_c1
    cfg.mode = pipeline.cfg.mode
    metrics = evaluate(pipeline, dataset.test, cfg)
    runtime = time.monotonic() - started
    os.makedirs(args.out, exist_ok=True)
    report = os.path.join(args.out, f"metrics.{args.format}")
    result = {"config": cfg.__dict__, "metrics": metrics.to_dict(),
              "checkpoint": {"path": args.checkpoint, "seed": header.get("seed")},
              "seeds": {"eval": cfg.eval_seed}}
    emit_report(result, report, args.format)
    print(summary_line(metrics, runtime))
    return 0


def _cmd_sweep(args, parser, which: str) -> int:
    cfg = _experiment_config(args)
    dataset = _load_data(args, parser)
    os.makedirs(args.out, exist_ok=True)
    started = time.monotonic()
    if which == "comm":
        points = _parse_points(args.points, DEFAULT_COMM_SNR_POINTS, float)
        sweep = harness.sweep_comm_snr(points, cfg, dataset, log_fn=print)
    elif which == "sensing":
        points = _parse_points(args.points, DEFAULT_SENSING_SNR_POINTS, float)
        sweep = harness.sweep_sensing_snr(points, cfg, dataset, log_fn=print)
    else:
        points = _parse_points(args.points, DEFAULT_OUTPUT_SIZES, int)
        sweep = harness.sweep_output_size(points, cfg, dataset, log_fn=print)
    runtime = time.monotonic() - started
    base = os.path.join(args.out, f"sweep_{which}")
    emit_report(sweep, base + ".json", "json")
    emit_report(sweep, base + ".csv", "csv")
    print(f"{len(points)} points  joint={['%.4f' % a for a in sweep.joint_accuracy]}  "
          f"sensing={['%.4f' % a for a in sweep.sensing_accuracy]}  "
          f"runtime={runtime:.1f}s")
    print(f"wrote {base}.json and {base}.csv")
    return 0


def _cmd_gradcheck(args) -> int:
    reports = run_gradient_checks(tolerance=args.tolerance)
    failed = False
    for name, report in reports:
        status = "PASS" if report.passed else "FAIL"
        print(f"{name:32s} max_rel_err={report.max_rel_error:.3e}  {status}")
        failed = failed or not report.passed
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = build_parser()
    _apply_config_file(parser, sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            return _cmd_train(args, parser)
        if args.command == "eval":
            return _cmd_eval(args, parser)
        if args.command == "sweep-comm-snr":
            return _cmd_sweep(args, parser, "comm")
        if args.command == "sweep-sensing-snr":
            return _cmd_sweep(args, parser, "sensing")
        if args.command == "sweep-output-size":
            return _cmd_sweep(args, parser, "size")
        if args.command == "gradcheck":
            return _cmd_gradcheck(args)
    except (ConfigError, CorruptDatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    parser.error(f"unknown command {args.command}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
