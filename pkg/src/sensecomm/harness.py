"""Experiment orchestration: evaluation metrics, parameter sweeps, reports.

A sweep retrains a fresh joint model and a fresh sensing-only benchmark at
every grid point, evaluates both on the identical test set under the same
evaluation-seed policy, and emits JSON (full config, metrics, history,
seeds) plus CSV (one row per point) for external plotting.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .channel import ChannelConfig, SensingConfig
from .dataset import Dataset, SOURCE_DIM, Split
from .errors import ConfigError
from .models import (
    ModelConfig,
    Pipeline,
    TrainConfig,
    predict_split,
    train,
)

ANIMAL_NAME, VEHICLE_NAME = "animal", "vehicle"

# Default sweep grids, overridable from the CLI; they span the ranges the
# accuracy curves are reported over.
DEFAULT_COMM_SNR_POINTS = [-5.0, 0.0, 5.0, 10.0]
DEFAULT_SENSING_SNR_POINTS = [-9.0, -6.0, -3.0, 0.0]
DEFAULT_OUTPUT_SIZES = [4, 8, 16, 20]


@dataclass
class ExperimentConfig:
    """One experiment's knobs. Defaults are the reference operating point:
    3 dB communication SNR, -3 dB vehicle sensing SNR with animals 6 dB
    lower, encoder outputs of 20, 5 epochs of batches of 64."""
    channel_kind: str = "awgn"
    comm_snr_db: float = 3.0
    vehicle_sensing_snr_db: float = -3.0
    animal_offset_db: float = 6.0
    n_c: int = 20
    epochs: int = 5
    batch_size: int = 64
    seed: int = 0
    eval_seed: int = 1234
    mode: str = "joint"
    dtype: str = "float32"

    def channel(self) -> ChannelConfig:
        return ChannelConfig(kind=self.channel_kind, snr_db=self.comm_snr_db)

    def sensing(self) -> SensingConfig:
        return SensingConfig(vehicle_snr_db=self.vehicle_sensing_snr_db,
                             animal_offset_db=self.animal_offset_db)

    def model(self, mode: str | None = None) -> ModelConfig:
        return ModelConfig(n_c1=self.n_c, n_c2=self.n_c,
                           mode=self.mode if mode is None else mode)

    def trainer(self) -> TrainConfig:
        return TrainConfig(channel=self.channel(), sensing=self.sensing(),
                           epochs=self.epochs, batch_size=self.batch_size,
                           seed=self.seed, eval_seed=self.eval_seed,
                           dtype=self.dtype)


@dataclass
class Metrics:
    """Test-set metrics. The confusion matrix is rows=true, cols=predicted,
    ordered [animal, vehicle]; vehicle (transmitter present) is the positive
    class, so misdetection is a true vehicle predicted animal and a false
    alarm is a true animal predicted vehicle."""
    accuracy: float
    confusion: list[list[int]]
    misdetection_rate: float
    false_alarm_rate: float
    compression_rate_pct: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Metrics":
        return cls(**d)


def confusion_matrix(true2: np.ndarray, pred2: np.ndarray) -> list[list[int]]:
    m = np.zeros((2, 2), dtype=np.int64)
    np.add.at(m, (true2, pred2), 1)
    return m.tolist()


def metrics_from_predictions(true2: np.ndarray, pred2: np.ndarray,
                             n_c1: int) -> Metrics:
    conf = confusion_matrix(true2, pred2)
    (tn, fp), (fn, tp) = conf
    total = tn + fp + fn + tp
    return Metrics(
        accuracy=float((tn + tp) / total),
        confusion=conf,
        misdetection_rate=float(fn / max(tp + fn, 1)),
        false_alarm_rate=float(fp / max(tn + fp, 1)),
        compression_rate_pct=100.0 * n_c1 / SOURCE_DIM,
    )


def evaluate(pipeline: Pipeline, test: Split, cfg: ExperimentConfig) -> Metrics:
    """One pass over the test split under the fixed evaluation seed."""
    preds = predict_split(pipeline, test, cfg.channel(), cfg.sensing(),
                          cfg.eval_seed)
    return metrics_from_predictions(test.label2, preds, pipeline.cfg.n_c1)


def run_experiment(cfg: ExperimentConfig, dataset: Dataset, log_fn=None
                   ) -> tuple[Pipeline, dict]:
    """Train one model per ``cfg`` and package config, metrics, history and
    seeds into a JSON-ready result dict."""
    pipeline, history = train(dataset, cfg.model(), cfg.trainer(), log_fn=log_fn)
    metrics = evaluate(pipeline, dataset.test, cfg)
    result = {
        "config": asdict(cfg),
        "metrics": metrics.to_dict(),
        "history": history,
        "seeds": {"train": cfg.seed, "eval": cfg.eval_seed},
    }
    return pipeline, result


@dataclass
class SweepResult:
    param_name: str
    points: list
    joint_accuracy: list[float] = field(default_factory=list)
    sensing_accuracy: list[float] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)
    per_point: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "param_name": self.param_name,
            "points": self.points,
            "joint_accuracy": self.joint_accuracy,
            "sensing_accuracy": self.sensing_accuracy,
            "seeds": self.seeds,
            "per_point": self.per_point,
        }


def _run_sweep(param_name: str, configs: list[ExperimentConfig], points: list,
               dataset: Dataset, log_fn=None) -> SweepResult:
    """Train joint and sensing-only models per point; same test set and
    eval-seed policy everywhere."""
    out = SweepResult(param_name=param_name, points=list(points))
    for value, cfg in zip(points, configs):
        point = {"value": value, "seed": cfg.seed}
        for mode in ("joint", "sensing_only"):
            mode_cfg = replace(cfg, mode=mode)
            if log_fn is not None:
                log_fn(f"[{param_name}={value}] training {mode}")
            _, result = run_experiment(mode_cfg, dataset, log_fn=log_fn)
            point[mode] = {"metrics": result["metrics"],
                           "history": result["history"]}
        out.joint_accuracy.append(point["joint"]["metrics"]["accuracy"])
        out.sensing_accuracy.append(point["sensing_only"]["metrics"]["accuracy"])
        out.seeds.append(cfg.seed)
        out.per_point.append(point)
    return out


def sweep_comm_snr(points: list[float], cfg: ExperimentConfig, dataset: Dataset,
                   log_fn=None) -> SweepResult:
    """Vary communication SNR; the vehicle sensing SNR tracks 6 dB below it
    (animals a further offset lower)."""
    configs = [replace(cfg, comm_snr_db=p, vehicle_sensing_snr_db=p - 6.0)
               for p in points]
    return _run_sweep("comm_snr_db", configs, points, dataset, log_fn)


def sweep_sensing_snr(points: list[float], cfg: ExperimentConfig,
                      dataset: Dataset, log_fn=None) -> SweepResult:
    """Vary the vehicle sensing SNR at fixed communication SNR."""
    configs = [replace(cfg, vehicle_sensing_snr_db=p) for p in points]
    return _run_sweep("vehicle_sensing_snr_db", configs, points, dataset, log_fn)


def sweep_output_size(sizes: list[int], cfg: ExperimentConfig, dataset: Dataset,
                      log_fn=None) -> SweepResult:
    """Vary both encoder output sizes together; reports the compression rate
    per point via the metrics."""
    for s in sizes:
        if s < 1:
            raise ConfigError(f"output size {s} must be >= 1")
    configs = [replace(cfg, n_c=int(s)) for s in sizes]
    return _run_sweep("n_c", configs, [int(s) for s in sizes], dataset, log_fn)


def to_json(obj) -> str:
    """Canonical JSON: sorted keys, fixed separators, trailing newline.
    Identical inputs serialize byte-for-byte identically."""
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def sweep_csv(sweep: SweepResult) -> str:
    """One row per sweep point: param, joint_acc, sensing_acc, seed."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["param", "joint_acc", "sensing_acc", "seed"])
    for p, j, s, seed in zip(sweep.points, sweep.joint_accuracy,
                             sweep.sensing_accuracy, sweep.seeds):
        writer.writerow([p, repr(j), repr(s), seed])
    return buf.getvalue()


def emit_report(result, path: str, fmt: str = "json"):
    """Write a result (experiment dict or SweepResult) as JSON or CSV."""
    if fmt == "json":
        payload = to_json(result)
    elif fmt == "csv":
        if isinstance(result, SweepResult):
            payload = sweep_csv(result)
        else:
            metrics = result["metrics"]
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            keys = sorted(k for k in metrics if k != "confusion")
            writer.writerow(keys)
            writer.writerow([repr(metrics[k]) for k in keys])
            payload = buf.getvalue()
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(payload)


def summary_line(metrics: Metrics, runtime_s: float) -> str:
    return (f"accuracy={metrics.accuracy:.4f}  "
            f"compression={metrics.compression_rate_pct:.2f}%  "
            f"runtime={runtime_s:.1f}s")
