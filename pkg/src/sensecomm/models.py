"""Transmit encoders, fusion decoder, and the end-to-end trained pipeline.

The transmitter runs two encoders: a convolutional image encoder that
compresses a 32x32x3 image to ``n_c1`` channel symbols, and a dense echo
encoder that compresses the reflected probe signal to ``n_c2`` symbols.
The receiver's decoder classifies from the concatenation of both received
vectors (joint mode) or from the second-round vector alone (sensing-only
benchmark). All three networks are trained jointly by backpropagating the
classification loss through both channels; channel realizations act as
fixed multipliers during the backward pass.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import (
    ChannelConfig,
    ChannelRealization,
    PowerNormalize,
    SensingConfig,
    Transmission,
    sample_realization,
)
from .dataset import Dataset, Split, batch_indices
from .errors import ConfigError, DivergenceError
from .nn import (
    Adam,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    MaxPool2D,
    Param,
    ReLU,
    Sequential,
    cross_entropy,
    cross_entropy_logit_grad,
    one_hot,
    softmax,
)
from .rng import Rng

MODES = ("joint", "sensing_only")

EVAL_BATCH = 256  # fixed so the eval-seed noise stream is reproducible


@dataclass
class ModelConfig:
    n_c1: int = 20
    n_c2: int = 20
    mode: str = "joint"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.n_c1 < 1 or self.n_c2 < 1:
            raise ConfigError("encoder output sizes must be >= 1")

    @property
    def decoder_in(self) -> int:
        return self.n_c1 + self.n_c2 if self.mode == "joint" else self.n_c2


@dataclass
class TrainConfig:
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    sensing: SensingConfig = field(default_factory=SensingConfig)
    epochs: int = 5
    batch_size: int = 64
    seed: int = 0
    eval_seed: int = 1234
    dtype: str = "float32"

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError(f"unknown dtype {self.dtype!r}")

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64


def build_image_encoder(n_c1: int, rng: Rng, dtype=np.float32) -> Sequential:
    """Convolutional encoder 32x32x3 -> n_c1 (final activation linear)."""
    return Sequential([
        Conv2D(3, 8, (3, 3), rng, dtype, name="image_encoder.conv1"),
        ReLU(),
        Conv2D(8, 4, (3, 3), rng, dtype, name="image_encoder.conv2"),
        ReLU(),
        MaxPool2D(2),
        Dropout(0.1),
        Conv2D(4, 4, (3, 3), rng, dtype, name="image_encoder.conv3"),
        ReLU(),
        MaxPool2D(2),
        Dropout(0.1),
        Flatten(),
        Dense(144, 128, rng, dtype, name="image_encoder.dense1"),
        ReLU(),
        Dense(128, n_c1, rng, dtype, name="image_encoder.dense2"),
    ], name="image_encoder")


def build_echo_encoder(n_c1: int, n_c2: int, rng: Rng, dtype=np.float32) -> Sequential:
    """Dense encoder for the reflected signal: n_c1 -> n_c2, hidden width
    is the floored half-sum of the two output sizes."""
    hidden = (n_c1 + n_c2) // 2
    return Sequential([
        Dense(n_c1, n_c1, rng, dtype, name="echo_encoder.dense1"),
        ReLU(),
        Dense(n_c1, hidden, rng, dtype, name="echo_encoder.dense2"),
        ReLU(),
        Dense(hidden, n_c2, rng, dtype, name="echo_encoder.dense3"),
    ], name="echo_encoder")


def build_decoder(d_in: int, rng: Rng, dtype=np.float32) -> Sequential:
    """Receiver-side classifier d_in -> 2 logits (softmax applied by caller)."""
    if d_in < 2:
        raise ConfigError("decoder input must be >= 2")
    return Sequential([
        Dense(d_in, d_in, rng, dtype, name="decoder.dense1"),
        ReLU(),
        Dense(d_in, d_in // 2, rng, dtype, name="decoder.dense2"),
        ReLU(),
        Dense(d_in // 2, 2, rng, dtype, name="decoder.dense3"),
    ], name="decoder")


@dataclass
class PipelineRealizations:
    """Channel draws used by one forward pass, kept so a pass can be replayed."""
    comm1: Optional[ChannelRealization]
    sensing: ChannelRealization
    comm2: ChannelRealization


class Pipeline:
    """The full transmitter/receiver stack for one mode.

    Networks are built in a fixed order from one seeded stream, so two
    pipelines built with the same seed share identical encoder weights even
    when their decoders differ in shape.
    """

    def __init__(self, cfg: ModelConfig, rng: Rng, dtype=np.float32):
        self.cfg = cfg
        self.dtype = dtype
        self.image_encoder = build_image_encoder(cfg.n_c1, rng, dtype)
        self.echo_encoder = build_echo_encoder(cfg.n_c1, cfg.n_c2, rng, dtype)
        self.decoder = build_decoder(cfg.decoder_in, rng, dtype)
        self._norm1 = PowerNormalize()
        self._norm2 = PowerNormalize()
        self._tx_comm1: Transmission | None = None
        self._tx_sense: Transmission | None = None
        self._tx_comm2: Transmission | None = None

    def params(self) -> list[Param]:
        return (self.image_encoder.params() + self.echo_encoder.params()
                + self.decoder.params())

    def param_count(self) -> int:
        return sum(p.value.size for p in self.params())

    def forward(self, x: np.ndarray, label2: np.ndarray,
                channel_cfg: ChannelConfig, sensing_cfg: SensingConfig,
                rng: Rng | None = None, training: bool = False,
                realizations: PipelineRealizations | None = None,
                ) -> tuple[np.ndarray, PipelineRealizations]:
        """Run one batch through encode / transmit / reflect / re-encode /
        transmit / decode and return class probabilities.

        The true label feeds only the sensing reflection, where it selects
        the class-dependent SNR; fresh realizations are drawn unless a
        replay is supplied.
        """
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 3:
            x = x[None]
        label2 = np.atleast_1d(label2)
        joint = self.cfg.mode == "joint"

        feat1 = self.image_encoder.forward(x, training=training, rng=rng)
        s1 = self._norm1.forward(feat1)

        if realizations is None:
            comm1 = sample_realization(channel_cfg.kind, channel_cfg.snr_db,
                                       s1.shape[0], s1.shape[1], rng,
                                       self.dtype) if joint else None
            snr = sensing_cfg.snr_for_labels(label2)
            sense = sample_realization(channel_cfg.kind, snr, s1.shape[0],
                                       s1.shape[1], rng, self.dtype)
        else:
            comm1, sense = realizations.comm1, realizations.sensing
            if joint and comm1 is None:
                raise ConfigError("joint replay needs a first-round realization")

        y_r1 = None
        self._tx_comm1 = Transmission(comm1) if comm1 is not None else None
        if self._tx_comm1 is not None:
            y_r1 = self._tx_comm1.forward(s1)
        self._tx_sense = Transmission(sense)
        y_t1 = self._tx_sense.forward(s1)

        feat2 = self.echo_encoder.forward(y_t1, training=training, rng=rng)
        s2 = self._norm2.forward(feat2)

        if realizations is None:
            comm2 = sample_realization(channel_cfg.kind, channel_cfg.snr_db,
                                       s2.shape[0], s2.shape[1], rng, self.dtype)
        else:
            comm2 = realizations.comm2
        self._tx_comm2 = Transmission(comm2)
        y_r2 = self._tx_comm2.forward(s2)

        fused = np.concatenate([y_r1, y_r2], axis=1) if joint else y_r2
        logits = self.decoder.forward(fused, training=training, rng=rng)
        probs = softmax(logits)
        return probs, PipelineRealizations(comm1=comm1, sensing=sense, comm2=comm2)

    def backward(self, grad_logits: np.ndarray) -> np.ndarray:
        """Backpropagate from decoder logits to the input image, filling
        parameter gradients along the way. Returns the input gradient."""
        g_fused = self.decoder.backward(grad_logits)
        if self.cfg.mode == "joint":
            n1 = self.cfg.n_c1
            g_yr1, g_yr2 = g_fused[:, :n1], g_fused[:, n1:]
        else:
            g_yr1, g_yr2 = None, g_fused

        g_s2 = self._tx_comm2.backward(g_yr2)
        g_feat2 = self._norm2.backward(g_s2)
        g_yt1 = self.echo_encoder.backward(g_feat2)

        g_s1 = self._tx_sense.backward(g_yt1)
        if g_yr1 is not None:
            g_s1 = g_s1 + self._tx_comm1.backward(g_yr1)
        g_feat1 = self._norm1.backward(g_s1)
        return self.image_encoder.backward(g_feat1)

    def predict(self, x: np.ndarray, label2: np.ndarray,
                channel_cfg: ChannelConfig, sensing_cfg: SensingConfig,
                rng: Rng) -> tuple[np.ndarray, np.ndarray]:
        """Inference pass: dropout disabled, one sampled realization per call.
        Returns (probs, predicted labels)."""
        probs, _ = self.forward(x, label2, channel_cfg, sensing_cfg,
                                rng=rng, training=False)
        return probs, probs.argmax(axis=1)


def predict_split(pipeline: Pipeline, split: Split, channel_cfg: ChannelConfig,
                  sensing_cfg: SensingConfig, eval_seed: int,
                  batch_size: int = EVAL_BATCH) -> np.ndarray:
    """Predicted labels for a whole split under a fixed evaluation seed,
    one fresh channel realization per sample."""
    rng = Rng(eval_seed)
    out = np.empty(split.n, dtype=np.int64)
    for idx in batch_indices(split.n, batch_size, shuffle=False):
        _, labels_hat = pipeline.predict(split.pixels[idx], split.label2[idx],
                                         channel_cfg, sensing_cfg, rng)
        out[idx] = labels_hat
    return out


def accuracy_on(pipeline: Pipeline, split: Split, channel_cfg: ChannelConfig,
                sensing_cfg: SensingConfig, eval_seed: int) -> float:
    preds = predict_split(pipeline, split, channel_cfg, sensing_cfg, eval_seed)
    return float((preds == split.label2).mean())


def train(dataset: Dataset, model_cfg: ModelConfig, train_cfg: TrainConfig,
          log_fn=None) -> tuple[Pipeline, list[dict]]:
    """Train all three networks jointly.

    Each batch draws fresh channel and sensing realizations, runs the full
    forward pass, and applies one Adam step to every parameter. History
    records per-epoch mean training loss and test accuracy.
    """
    init_rng, shuffle_rng, noise_rng = Rng(train_cfg.seed).split(3)
    dtype = train_cfg.np_dtype
    pipeline = Pipeline(model_cfg, init_rng, dtype)
    adam = Adam(pipeline.params())

    history: list[dict] = []
    for epoch in range(1, train_cfg.epochs + 1):
        losses = []
        for idx in batch_indices(dataset.train.n, train_cfg.batch_size,
                                 shuffle=True, rng=shuffle_rng):
            x = dataset.train.pixels[idx]
            y = dataset.train.label2[idx]
            probs, _ = pipeline.forward(x, y, train_cfg.channel,
                                        train_cfg.sensing, rng=noise_rng,
                                        training=True)
            onehot = one_hot(y, 2, dtype=dtype)
            loss = cross_entropy(probs, onehot)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, step {adam.t}")
            pipeline.backward(cross_entropy_logit_grad(probs, onehot).astype(dtype))
            adam.step()
            losses.append(loss)
        test_acc = accuracy_on(pipeline, dataset.test, train_cfg.channel,
                               train_cfg.sensing, train_cfg.eval_seed)
        record = {"epoch": epoch,
                  "train_loss": float(np.mean(losses)),
                  "test_accuracy": test_acc}
        history.append(record)
        if log_fn is not None:
            log_fn(f"epoch {epoch}/{train_cfg.epochs}  "
                   f"loss={record['train_loss']:.4f}  test_acc={test_acc:.4f}")
    return pipeline, history


# --- checkpoint format ------------------------------------------------------
#
# magic "SCM1", u32 header length, UTF-8 JSON header, then each parameter
# tensor as little-endian float32 in declaration order. The header carries
# the model config, tensor names/shapes, and the training seed.

CHECKPOINT_MAGIC = b"SCM1"


def save_checkpoint(pipeline: Pipeline, path: str, seed: int | None = None):
    params = pipeline.params()
    header = {
        "model": {"n_c1": pipeline.cfg.n_c1, "n_c2": pipeline.cfg.n_c2,
                  "mode": pipeline.cfg.mode},
        "seed": seed,
        "tensors": [{"name": p.name, "shape": list(p.value.shape)} for p in params],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for p in params:
            fh.write(np.ascontiguousarray(p.value, dtype="<f4").tobytes())


def load_checkpoint(path: str, dtype=np.float32) -> tuple[Pipeline, dict]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ConfigError(f"{path}: not a checkpoint file")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        cfg = ModelConfig(**header["model"])
        pipeline = Pipeline(cfg, Rng(0), dtype)
        for p, meta in zip(pipeline.params(), header["tensors"]):
            if list(p.value.shape) != meta["shape"]:
                raise ConfigError(
                    f"{path}: tensor {meta['name']} shape mismatch")
            n = int(np.prod(meta["shape"])) if meta["shape"] else 1
            buf = fh.read(4 * n)
            if len(buf) != 4 * n:
                raise ConfigError(f"{path}: truncated tensor data")
            p.value = np.frombuffer(buf, dtype="<f4").reshape(meta["shape"]).astype(dtype)
    return pipeline, header
