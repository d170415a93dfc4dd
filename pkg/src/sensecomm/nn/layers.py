"""Differentiable layers: forward passes plus exact analytic backward passes.

All layers operate on batched arrays with the sample axis first. Images are
channels-last ``(N, H, W, C)``. Each layer caches what its backward pass
needs during ``forward`` and exposes trainable parameters as :class:`Param`
objects whose ``grad`` is filled in by ``backward``.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError, ShapeError
from ..rng import Rng


def compute_fans(shape: tuple[int, ...]) -> tuple[int, int]:
    """Fan-in/fan-out for a weight shape. Convolution kernels are
    ``(kh, kw, in_channels, filters)`` so the receptive field multiplies
    both fans; dense weights are ``(in, out)``."""
    if len(shape) == 1:
        return shape[0], shape[0]
    if len(shape) == 2:
        return shape[0], shape[1]
    receptive = int(np.prod(shape[:-2]))
    return shape[-2] * receptive, shape[-1] * receptive


def glorot_uniform(shape, rng: Rng, dtype=np.float32) -> np.ndarray:
    """Weights drawn uniform on [-L, L] with L = sqrt(6 / (fan_in + fan_out))."""
    shape = tuple(int(d) for d in shape)
    if len(shape) == 0 or any(d < 1 for d in shape):
        raise ShapeError(f"invalid weight shape {shape}")
    fan_in, fan_out = compute_fans(shape)
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Param:
    """A trainable array plus the gradient from the latest backward pass."""

    def __init__(self, value: np.ndarray, name: str = ""):
        self.value = value
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self) -> str:
        return f"Param({self.name}, shape={self.value.shape})"


class Layer:
    """Base layer. Subclasses override forward/backward; params() lists
    trainable parameters in declaration order."""

    def forward(self, x: np.ndarray, training: bool = False, rng: Rng | None = None) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> list[Param]:
        return []


class Dense(Layer):
    """Fully connected layer: y = x @ W + b with W of shape (in, out)."""

    def __init__(self, in_dim: int, out_dim: int, rng: Rng, dtype=np.float32, name: str = "dense"):
        self.w = Param(glorot_uniform((in_dim, out_dim), rng, dtype), f"{name}.w")
        self.b = Param(np.zeros(out_dim, dtype=dtype), f"{name}.b")
        self._x: np.ndarray | None = None

    def forward(self, x, training=False, rng=None):
        if x.ndim != 2 or x.shape[1] != self.w.value.shape[0]:
            raise ShapeError(
                f"dense expects (N, {self.w.value.shape[0]}), got {x.shape}")
        self._x = x
        return x @ self.w.value + self.b.value

    def backward(self, grad_out):
        x = self._x
        self.w.grad = x.T @ grad_out
        self.b.grad = grad_out.sum(axis=0)
        return grad_out @ self.w.value.T

    def params(self):
        return [self.w, self.b]


class Conv2D(Layer):
    """2-D cross-correlation, stride 1, no padding ("valid").

    Kernel shape is (kh, kw, in_channels, filters); output spatial dims
    shrink by kernel-1. Implemented as im2col + matmul; the column matrix
    is cached for the weight-gradient matmul in backward.
    """

    def __init__(self, in_channels: int, filters: int, kernel: tuple[int, int] = (3, 3),
                 rng: Rng | None = None, dtype=np.float32, name: str = "conv"):
        kh, kw = kernel
        self.w = Param(glorot_uniform((kh, kw, in_channels, filters), rng, dtype), f"{name}.w")
        self.b = Param(np.zeros(filters, dtype=dtype), f"{name}.b")
        self._cols: np.ndarray | None = None
        self._x_shape: tuple | None = None

    def forward(self, x, training=False, rng=None):
        kh, kw, cin, filters = self.w.value.shape
        if x.ndim != 4 or x.shape[3] != cin:
            raise ShapeError(f"conv2d expects (N, H, W, {cin}), got {x.shape}")
        n, h, w_in, _ = x.shape
        if h < kh or w_in < kw:
            raise ShapeError(f"kernel ({kh},{kw}) larger than input ({h},{w_in})")
        ho, wo = h - kh + 1, w_in - kw + 1
        # windows: (N, Ho, Wo, C, kh, kw) -> (N*Ho*Wo, kh*kw*C) matching
        # the (kh, kw, C) ordering of the flattened kernel
        win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
        cols = np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3)).reshape(n * ho * wo, kh * kw * cin)
        self._cols = cols
        self._x_shape = x.shape
        out = cols @ self.w.value.reshape(kh * kw * cin, filters) + self.b.value
        return out.reshape(n, ho, wo, filters)

    def backward(self, grad_out):
        kh, kw, cin, filters = self.w.value.shape
        n, h, w_in, _ = self._x_shape
        ho, wo = h - kh + 1, w_in - kw + 1
        g = grad_out.reshape(n * ho * wo, filters)
        self.w.grad = (self._cols.T @ g).reshape(kh, kw, cin, filters)
        self.b.grad = g.sum(axis=0)
        # scatter column gradients back onto the input: one shifted
        # accumulation per kernel offset
        gcols = (g @ self.w.value.reshape(kh * kw * cin, filters).T).reshape(n, ho, wo, kh, kw, cin)
        grad_x = np.zeros(self._x_shape, dtype=grad_out.dtype)
        for i in range(kh):
            for j in range(kw):
                grad_x[:, i:i + ho, j:j + wo, :] += gcols[:, :, :, i, j, :]
        return grad_x

    def params(self):
        return [self.w, self.b]


class MaxPool2D(Layer):
    """Non-overlapping 2x2 max pooling; odd trailing rows/cols are dropped.

    Backward routes each window's gradient to the argmax position, first in
    row-major order on ties, so the pass is deterministic.
    """

    def __init__(self, pool: int = 2):
        self.pool = pool
        self._idx: np.ndarray | None = None
        self._x_shape: tuple | None = None

    def forward(self, x, training=False, rng=None):
        if x.ndim != 4:
            raise ShapeError(f"maxpool expects (N, H, W, C), got {x.shape}")
        p = self.pool
        n, h, w, c = x.shape
        ho, wo = h // p, w // p
        self._x_shape = x.shape
        xt = x[:, :ho * p, :wo * p, :]
        # windows flattened row-major: (r0c0, r0c1, r1c0, r1c1)
        wins = xt.reshape(n, ho, p, wo, p, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, ho, wo, c, p * p)
        self._idx = wins.argmax(axis=4)
        return np.take_along_axis(wins, self._idx[..., None], axis=4)[..., 0]

    def backward(self, grad_out):
        p = self.pool
        n, h, w, c = self._x_shape
        ho, wo = h // p, w // p
        gwins = np.zeros((n, ho, wo, c, p * p), dtype=grad_out.dtype)
        np.put_along_axis(gwins, self._idx[..., None], grad_out[..., None], axis=4)
        grad_x = np.zeros(self._x_shape, dtype=grad_out.dtype)
        grad_x[:, :ho * p, :wo * p, :] = (
            gwins.reshape(n, ho, wo, c, p, p).transpose(0, 1, 4, 2, 5, 3).reshape(n, ho * p, wo * p, c))
        return grad_x


class ReLU(Layer):
    """Elementwise max(x, 0); subgradient at 0 is taken as 0."""

    def __init__(self):
        self._mask: np.ndarray | None = None

    def forward(self, x, training=False, rng=None):
        self._mask = x > 0
        return np.where(self._mask, x, 0)

    def backward(self, grad_out):
        return np.where(self._mask, grad_out, 0)


class Dropout(Layer):
    """Inverted dropout: zero with probability ``rate`` during training and
    scale survivors by 1/(1-rate); identity at inference."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self._mask: np.ndarray | None = None

    def forward(self, x, training=False, rng=None):
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ConfigError("dropout in training mode needs an rng")
        keep = (rng.uniform(size=x.shape) >= self.rate)
        self._mask = keep.astype(x.dtype) / (1.0 - self.rate)
        return x * self._mask

    def backward(self, grad_out):
        if self._mask is None:
            return grad_out
        return grad_out * self._mask


class Flatten(Layer):
    """Row-major reshape (N, H, W, C) -> (N, H*W*C); backward is the inverse."""

    def __init__(self):
        self._x_shape: tuple | None = None

    def forward(self, x, training=False, rng=None):
        self._x_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out):
        return grad_out.reshape(self._x_shape)


class Sequential:
    """Straight-line stack of layers sharing one forward/backward interface."""

    def __init__(self, layers: list[Layer], name: str = ""):
        self.layers = layers
        self.name = name

    def forward(self, x, training=False, rng=None):
        for layer in self.layers:
            x = layer.forward(x, training=training, rng=rng)
        return x

    def backward(self, grad_out):
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out

    def params(self) -> list[Param]:
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def param_count(self) -> int:
        return sum(p.value.size for p in self.params())


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-shift for overflow safety."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)
