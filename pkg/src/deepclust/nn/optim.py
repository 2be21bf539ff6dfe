"""SGD with momentum and decoupled-from-nothing classic weight decay."""

from dataclasses import dataclass

import numpy as np


@dataclass
class SgdConfig:
    learning_rate: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 1e-5

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")


def sgd_step(net, grads, cfg):
    """One update: g += wd*p; m = mom*m + g; p -= lr*m. Mutates ``net`` in place."""
    for path, p in net.named_parameters():
        if path not in grads:
            raise KeyError(f"missing gradient for parameter '{path}'")
        g = grads[path]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for '{path}'")
        if not np.isfinite(g).all():
            raise FloatingPointError(f"non-finite gradient in '{path}'")
        if cfg.weight_decay:
            g = g + cfg.weight_decay * p
        buf = net.momentum[path]
        np.multiply(buf, cfg.momentum, out=buf)
        buf += g
        p -= cfg.learning_rate * buf
    return net
