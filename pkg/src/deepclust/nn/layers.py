"""Feed-forward layers with hand-derived backward passes.

Every layer follows the same contract: ``forward(x, train)`` returns the
output plus an opaque cache, ``backward(dy, cache)`` returns the input
gradient plus a dict of parameter gradients keyed like ``params``.
Convolutions are lowered to GEMM via window gathering, so the heavy math
runs inside BLAS.
"""

import numpy as np


class Layer:
    """Base layer: stateless unless a subclass declares params/state."""

    kind = "layer"

    def __init__(self):
        self.params = {}
        self.state = {}

    def init_params(self, rng, dtype):
        pass

    def forward(self, x, train):
        raise NotImplementedError

    def backward(self, dy, cache):
        raise NotImplementedError

    def hyperparams(self):
        return {}

    def __repr__(self):
        hp = ", ".join(f"{k}={v}" for k, v in self.hyperparams().items())
        return f"{type(self).__name__}({hp})"


def _kaiming_uniform(rng, shape, fan_in, dtype):
    # He init for ReLU stacks: U(-b, b) with b = sqrt(6 / fan_in)
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Conv2d(Layer):
    kind = "conv2d"

    def __init__(self, in_channels, out_channels, kernel_size, stride=1, padding=0, bias=True):
        super().__init__()
        if kernel_size < 1 or stride < 1 or padding < 0:
            raise ValueError("conv2d requires kernel_size >= 1, stride >= 1, padding >= 0")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding
        self.bias = bias

    def init_params(self, rng, dtype):
        k = self.kernel_size
        fan_in = self.in_channels * k * k
        self.params = {
            "weight": _kaiming_uniform(rng, (self.out_channels, self.in_channels, k, k), fan_in, dtype),
        }
        if self.bias:
            self.params["bias"] = np.zeros(self.out_channels, dtype=dtype)

    def hyperparams(self):
        return {
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel_size": self.kernel_size,
            "stride": self.stride,
            "padding": self.padding,
            "bias": self.bias,
        }

    def _out_hw(self, h, w):
        k, s, p = self.kernel_size, self.stride, self.padding
        oh = (h + 2 * p - k) // s + 1
        ow = (w + 2 * p - k) // s + 1
        if oh < 1 or ow < 1:
            raise ValueError(
                f"conv2d: input {h}x{w} too small for kernel {k}, stride {s}, padding {p}"
            )
        return oh, ow

    def forward(self, x, train):
        b, c, h, w = x.shape
        if c != self.in_channels:
            raise ValueError(f"conv2d expects {self.in_channels} input channels, got {c}")
        k, s, p = self.kernel_size, self.stride, self.padding
        oh, ow = self._out_hw(h, w)
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        # im2col straight into GEMM layout: (B*oh*ow, C*k*k)
        cols = np.empty((b, oh, ow, c, k, k), dtype=x.dtype)
        for i in range(k):
            for j in range(k):
                cols[:, :, :, :, i, j] = xp[:, :, i : i + s * oh : s, j : j + s * ow : s].transpose(0, 2, 3, 1)
        cols_mat = cols.reshape(b * oh * ow, -1)
        w_mat = self.params["weight"].reshape(self.out_channels, -1)
        y = cols_mat @ w_mat.T
        if self.bias:
            y += self.params["bias"]
        y = y.reshape(b, oh, ow, self.out_channels).transpose(0, 3, 1, 2)
        return y, (cols_mat, xp.shape, (b, h, w, oh, ow))

    def backward(self, dy, cache):
        cols_mat, xp_shape, (b, h, w, oh, ow) = cache
        k, s, p = self.kernel_size, self.stride, self.padding
        dy_mat = dy.transpose(0, 2, 3, 1).reshape(b * oh * ow, -1)
        w_mat = self.params["weight"].reshape(self.out_channels, -1)
        grads = {"weight": (dy_mat.T @ cols_mat).reshape(self.params["weight"].shape)}
        if self.bias:
            grads["bias"] = dy_mat.sum(axis=0)
        dcols = (dy_mat @ w_mat).reshape(b, oh, ow, self.in_channels, k, k)
        dxp = np.zeros(xp_shape, dtype=dy.dtype)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i : i + s * oh : s, j : j + s * ow : s] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        dx = dxp[:, :, p : p + h, p : p + w] if p else dxp
        return dx, grads


class BatchNorm2d(Layer):
    kind = "batchnorm2d"

    def __init__(self, num_features, eps=1e-5, momentum=0.1):
        super().__init__()
        self.num_features = num_features
        self.eps = eps
        self.momentum = momentum

    def init_params(self, rng, dtype):
        c = self.num_features
        self.params = {"gamma": np.ones(c, dtype=dtype), "beta": np.zeros(c, dtype=dtype)}
        self.state = {"running_mean": np.zeros(c, dtype=dtype), "running_var": np.ones(c, dtype=dtype)}

    def hyperparams(self):
        return {"num_features": self.num_features, "eps": self.eps, "momentum": self.momentum}

    def forward(self, x, train):
        if x.shape[1] != self.num_features:
            raise ValueError(f"batchnorm2d expects {self.num_features} channels, got {x.shape[1]}")
        gamma = self.params["gamma"][None, :, None, None]
        beta = self.params["beta"][None, :, None, None]
        if train:
            mean = x.mean(axis=(0, 2, 3))
            centered = x - mean[None, :, None, None]
            var = np.mean(centered * centered, axis=(0, 2, 3))  # population variance
            m = self.momentum
            self.state["running_mean"] = ((1 - m) * self.state["running_mean"] + m * mean).astype(x.dtype)
            self.state["running_var"] = ((1 - m) * self.state["running_var"] + m * var).astype(x.dtype)
        else:
            mean = self.state["running_mean"]
            var = self.state["running_var"]
            centered = x - mean[None, :, None, None]
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = centered
        xhat *= inv_std[None, :, None, None]
        y = gamma * xhat + beta
        return y, (xhat, inv_std, train)

    def backward(self, dy, cache):
        xhat, inv_std, train = cache
        gamma = self.params["gamma"][None, :, None, None]
        grads = {
            "gamma": (dy * xhat).sum(axis=(0, 2, 3)),
            "beta": dy.sum(axis=(0, 2, 3)),
        }
        if not train:
            return dy * gamma * inv_std[None, :, None, None], grads
        b, c, h, w = dy.shape
        m = b * h * w
        dxhat = dy * gamma
        sum_d = dxhat.sum(axis=(0, 2, 3), keepdims=True)
        sum_dx = (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
        dx = (inv_std[None, :, None, None] / m) * (m * dxhat - sum_d - xhat * sum_dx)
        return dx, grads


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, train):
        mask = x > 0
        return x * mask, mask

    def backward(self, dy, cache):
        return dy * cache, {}


class MaxPool2d(Layer):
    kind = "maxpool2d"

    def __init__(self, kernel_size, stride=None):
        super().__init__()
        self.kernel_size = kernel_size
        self.stride = stride if stride is not None else kernel_size

    def hyperparams(self):
        return {"kernel_size": self.kernel_size, "stride": self.stride}

    def forward(self, x, train):
        k, s = self.kernel_size, self.stride
        h, w = x.shape[2:]
        oh = (h - k) // s + 1
        ow = (w - k) // s + 1
        if oh < 1 or ow < 1:
            raise ValueError(f"maxpool2d: input {h}x{w} too small for kernel {k}, stride {s}")
        y = None
        for i in range(k):
            for j in range(k):
                window = x[:, :, i : i + s * oh : s, j : j + s * ow : s]
                y = window.copy() if y is None else np.maximum(y, window, out=y)
        return y, (x, y, (oh, ow))

    def backward(self, dy, cache):
        # route each output's gradient to the first window position holding
        # the max, matching argmax tie-breaking
        x, y, (oh, ow) = cache
        k, s = self.kernel_size, self.stride
        dx = np.zeros_like(x, dtype=dy.dtype)
        assigned = np.zeros(y.shape, dtype=bool)
        for i in range(k):
            for j in range(k):
                window = x[:, :, i : i + s * oh : s, j : j + s * ow : s]
                mask = (window == y) & ~assigned
                assigned |= mask
                dx[:, :, i : i + s * oh : s, j : j + s * ow : s] += dy * mask
        return dx, {}


class AdaptiveAvgPool2d(Layer):
    """Average pooling onto a fixed output grid, independent of input size."""

    kind = "adaptive-avg-pool2d"

    def __init__(self, output_size):
        super().__init__()
        if output_size < 1:
            raise ValueError("adaptive-avg-pool2d output size must be >= 1")
        self.output_size = output_size

    def hyperparams(self):
        return {"output_size": self.output_size}

    @staticmethod
    def _bins(n_in, n_out):
        starts = (np.arange(n_out) * n_in) // n_out
        ends = -((-(np.arange(1, n_out + 1) * n_in)) // n_out)  # ceil division
        return starts, ends

    def forward(self, x, train):
        b, c, h, w = x.shape
        o = self.output_size
        rs, re = self._bins(h, o)
        cs, ce = self._bins(w, o)
        y = np.empty((b, c, o, o), dtype=x.dtype)
        for i in range(o):
            for j in range(o):
                y[:, :, i, j] = x[:, :, rs[i] : re[i], cs[j] : ce[j]].mean(axis=(2, 3))
        return y, (x.shape, rs, re, cs, ce)

    def backward(self, dy, cache):
        x_shape, rs, re, cs, ce = cache
        dx = np.zeros(x_shape, dtype=dy.dtype)
        o = self.output_size
        for i in range(o):
            for j in range(o):
                area = (re[i] - rs[i]) * (ce[j] - cs[j])
                dx[:, :, rs[i] : re[i], cs[j] : ce[j]] += dy[:, :, i, j, None, None] / area
        return dx, {}


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x, train):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dy, cache):
        return dy.reshape(cache), {}


class Linear(Layer):
    kind = "linear"

    def __init__(self, in_features, out_features):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features

    def init_params(self, rng, dtype):
        self.params = {
            "weight": _kaiming_uniform(rng, (self.out_features, self.in_features), self.in_features, dtype),
            "bias": np.zeros(self.out_features, dtype=dtype),
        }

    def hyperparams(self):
        return {"in_features": self.in_features, "out_features": self.out_features}

    def forward(self, x, train):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ValueError(f"linear expects (B, {self.in_features}), got {x.shape}")
        return x @ self.params["weight"].T + self.params["bias"], x

    def backward(self, dy, cache):
        grads = {"weight": dy.T @ cache, "bias": dy.sum(axis=0)}
        return dy @ self.params["weight"], grads


LAYER_KINDS = {
    cls.kind: cls
    for cls in (Conv2d, BatchNorm2d, ReLU, MaxPool2d, AdaptiveAvgPool2d, Flatten, Linear)
}


def layer_from_spec(spec):
    """Rebuild a layer from its {kind, **hyperparams} manifest entry."""
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind not in LAYER_KINDS:
        raise ValueError(f"unknown layer kind '{kind}'")
    return LAYER_KINDS[kind](**spec)
