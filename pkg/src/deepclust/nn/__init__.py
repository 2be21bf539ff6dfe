from .layers import (
    AdaptiveAvgPool2d,
    BatchNorm2d,
    Conv2d,
    Flatten,
    Linear,
    MaxPool2d,
    ReLU,
)
from .losses import cross_entropy_loss, softmax
from .network import ARCHITECTURES, Network
from .optim import SgdConfig, sgd_step

__all__ = [
    "ARCHITECTURES",
    "AdaptiveAvgPool2d",
    "BatchNorm2d",
    "Conv2d",
    "Flatten",
    "Linear",
    "MaxPool2d",
    "Network",
    "ReLU",
    "SgdConfig",
    "cross_entropy_loss",
    "sgd_step",
    "softmax",
]
