"""Finite-difference verification suite for every layer and the full pipeline.

All checks run in 64-bit with dropout disabled and channel realizations
frozen, so the difference quotients are meaningful. Layer checks are
exhaustive over every coordinate; the end-to-end check samples a fixed
random subset of coordinates per tensor to stay fast.
"""

from __future__ import annotations

import numpy as np

from .channel import (
    ChannelConfig,
    PowerNormalize,
    SensingConfig,
    Transmission,
    sample_realization,
)
from .models import ModelConfig, Pipeline, PipelineRealizations
from .nn import (
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    MaxPool2D,
    ReLU,
    check_gradients,
    cross_entropy,
    cross_entropy_logit_grad,
    one_hot,
    softmax,
)
from .nn.gradcheck import GradCheckReport
from .rng import Rng

LAYER_TOL = 1e-6
PIPELINE_TOL = 1e-4


def _projection_check(layer, x: np.ndarray, name: str, tol: float,
                      rng_seed: int = 0, forward_kwargs: dict | None = None
                      ) -> tuple[str, GradCheckReport]:
    """Check d(sum(C * layer(x)))/d{params, x} against finite differences."""
    kwargs = forward_kwargs or {}
    proj = Rng(rng_seed + 1).standard_normal(layer.forward(x, **kwargs).shape)

    def loss():
        return float((proj * layer.forward(x, **kwargs)).sum())

    loss()  # refresh caches at the unperturbed point
    grad_x = layer.backward(proj)
    tensors = {"x": x}
    analytic = {"x": grad_x}
    for p in layer.params():
        tensors[p.name] = p.value
        analytic[p.name] = p.grad
    report = check_gradients(loss, tensors, analytic, tolerance=tol)
    return name, report


def check_dense(tol: float = LAYER_TOL) -> tuple[str, GradCheckReport]:
    rng = Rng(11)
    layer = Dense(4, 3, rng, dtype=np.float64)
    x = rng.standard_normal((2, 4))
    return _projection_check(layer, x, "dense_4_to_3", tol, rng_seed=11)


def check_conv2d(tol: float = LAYER_TOL) -> tuple[str, GradCheckReport]:
    rng = Rng(12)
    layer = Conv2D(2, 3, (3, 3), rng, dtype=np.float64)
    x = rng.standard_normal((2, 6, 6, 2))
    return _projection_check(layer, x, "conv2d_6x6x2", tol, rng_seed=12)


def check_maxpool(tol: float = LAYER_TOL) -> tuple[str, GradCheckReport]:
    rng = Rng(13)
    layer = MaxPool2D(2)
    x = rng.standard_normal((2, 4, 4, 2))
    return _projection_check(layer, x, "maxpool_2x2", tol, rng_seed=13)


def check_relu(tol: float = LAYER_TOL) -> tuple[str, GradCheckReport]:
    rng = Rng(14)
    layer = ReLU()
    x = rng.standard_normal((2, 12))
    return _projection_check(layer, x, "relu", tol, rng_seed=14)


def check_flatten(tol: float = LAYER_TOL) -> tuple[str, GradCheckReport]:
    rng = Rng(15)
    layer = Flatten()
    x = rng.standard_normal((2, 3, 4, 2))
    return _projection_check(layer, x, "flatten", tol, rng_seed=15)


def check_dropout(tol: float = LAYER_TOL) -> tuple[str, GradCheckReport]:
    # reseeding inside the closure freezes the mask across FD evaluations
    rng = Rng(16)
    layer = Dropout(0.3)
    x = rng.standard_normal((2, 20))
    proj = rng.standard_normal((2, 20))

    def loss():
        return float((proj * layer.forward(x, training=True, rng=Rng(99))).sum())

    loss()
    grad_x = layer.backward(proj)
    report = check_gradients(loss, {"x": x}, {"x": grad_x}, tolerance=tol)
    return "dropout_frozen_mask", report


def check_softmax_cross_entropy(tol: float = LAYER_TOL) -> tuple[str, GradCheckReport]:
    rng = Rng(17)
    logits = rng.standard_normal((4, 2))
    onehot = one_hot(np.array([0, 1, 1, 0]), 2)

    def loss():
        return cross_entropy(softmax(logits), onehot)

    analytic = cross_entropy_logit_grad(softmax(logits), onehot)
    report = check_gradients(loss, {"logits": logits}, {"logits": analytic},
                             tolerance=tol)
    return "softmax_cross_entropy", report


def check_power_normalize(tol: float = LAYER_TOL) -> tuple[str, GradCheckReport]:
    rng = Rng(18)
    layer = PowerNormalize()
    x = rng.standard_normal((3, 8))
    proj = rng.standard_normal((3, 8))

    def loss():
        return float((proj * layer.forward(x)).sum())

    loss()
    grad_x = layer.backward(proj)
    report = check_gradients(loss, {"x": x}, {"x": grad_x}, tolerance=tol)
    return "power_normalize", report


def check_channel(kind: str, tol: float = LAYER_TOL) -> tuple[str, GradCheckReport]:
    rng = Rng(19)
    x = rng.standard_normal((3, 6))
    proj = rng.standard_normal((3, 6))
    real = sample_realization(kind, 0.0, 3, 6, Rng(20), dtype=np.float64)
    tx = Transmission(real)

    def loss():
        return float((proj * tx.forward(x)).sum())

    grad_x = tx.backward(proj)
    report = check_gradients(loss, {"x": x}, {"x": grad_x}, tolerance=tol)
    return f"channel_{kind}", report


def check_pipeline(tol: float = PIPELINE_TOL, mode: str = "joint",
                   kind: str = "rayleigh", seed: int = 101
                   ) -> tuple[str, GradCheckReport]:
    """End-to-end check at batch 2 and n_c 4: frozen realizations, dropout
    off, sampled coordinates per parameter tensor.

    The seed pins an operating point where no relu or pooling unit sits
    within the finite-difference step of its kink; central differences are
    meaningless where the function is non-differentiable.
    """
    rng = Rng(seed)
    cfg = ModelConfig(n_c1=4, n_c2=4, mode=mode)
    pipeline = Pipeline(cfg, rng, dtype=np.float64)
    x = rng.uniform(0.0, 1.0, size=(2, 32, 32, 3))
    labels = np.array([0, 1])
    channel_cfg = ChannelConfig(kind=kind, snr_db=3.0)
    sensing_cfg = SensingConfig(vehicle_snr_db=-3.0, animal_offset_db=6.0)

    sample_rng = Rng(seed + 10_000)
    comm1 = sample_realization(kind, channel_cfg.snr_db, 2, 4, sample_rng,
                               np.float64) if mode == "joint" else None
    sense = sample_realization(kind, sensing_cfg.snr_for_labels(labels), 2, 4,
                               sample_rng, np.float64)
    comm2 = sample_realization(kind, channel_cfg.snr_db, 2, 4, sample_rng,
                               np.float64)
    frozen = PipelineRealizations(comm1=comm1, sensing=sense, comm2=comm2)
    onehot = one_hot(labels, 2)

    def loss():
        probs, _ = pipeline.forward(x, labels, channel_cfg, sensing_cfg,
                                    training=False, realizations=frozen)
        return cross_entropy(probs, onehot)

    probs, _ = pipeline.forward(x, labels, channel_cfg, sensing_cfg,
                                training=False, realizations=frozen)
    grad_x = pipeline.backward(cross_entropy_logit_grad(probs, onehot))
    tensors = {"input": x}
    analytic = {"input": grad_x}
    for p in pipeline.params():
        tensors[p.name] = p.value
        analytic[p.name] = p.grad
    report = check_gradients(loss, tensors, analytic, tolerance=tol,
                             max_coords=40, rng=Rng(seed + 20_000))
    return f"pipeline_{mode}_{kind}", report


def run_gradient_checks(tolerance: float | None = None
                        ) -> list[tuple[str, GradCheckReport]]:
    """The full verification suite, as surfaced by the CLI."""
    layer_tol = tolerance if tolerance is not None else LAYER_TOL
    pipe_tol = tolerance if tolerance is not None else PIPELINE_TOL
    return [
        check_dense(layer_tol),
        check_conv2d(layer_tol),
        check_maxpool(layer_tol),
        check_relu(layer_tol),
        check_flatten(layer_tol),
        check_dropout(layer_tol),
        check_softmax_cross_entropy(layer_tol),
        check_power_normalize(layer_tol),
        check_channel("awgn", layer_tol),
        check_channel("rayleigh", layer_tol),
        check_pipeline(pipe_tol, mode="joint", kind="rayleigh"),
        check_pipeline(pipe_tol, mode="sensing_only", kind="awgn"),
    ]
