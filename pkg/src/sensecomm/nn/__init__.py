from .layers import (
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    Layer,
    MaxPool2D,
    Param,
    ReLU,
    Sequential,
    compute_fans,
    glorot_uniform,
    softmax,
)
from .losses import LOG_CLAMP, cross_entropy, cross_entropy_logit_grad, one_hot
from .optim import Adam
from .gradcheck import GradCheckReport, check_gradients

__all__ = [
    "Adam",
    "Conv2D",
    "Dense",
    "Dropout",
    "Flatten",
    "GradCheckReport",
    "LOG_CLAMP",
    "Layer",
    "MaxPool2D",
    "Param",
    "ReLU",
    "Sequential",
    "check_gradients",
    "compute_fans",
    "cross_entropy",
    "cross_entropy_logit_grad",
    "glorot_uniform",
    "one_hot",
    "softmax",
]
