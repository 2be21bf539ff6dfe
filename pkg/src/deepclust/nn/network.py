"""Network container: feature stack + classifier head, with SGD momentum slots.

The feature stack always ends with an adaptive-average-pool / flatten pair;
its flattened output is both the classifier input and the vector handed to
the clustering stage. The classifier head can be re-drawn at any time
without touching feature parameters.
"""

from dataclasses import dataclass, field

import numpy as np

from .layers import (
    AdaptiveAvgPool2d,
    BatchNorm2d,
    Conv2d,
    Flatten,
    Linear,
    MaxPool2d,
    ReLU,
    layer_from_spec,
)


def _mini_features(in_channels):
    # convs feeding batch norm carry no bias: the mean subtraction cancels it
    return [
        Conv2d(in_channels, 16, 3, stride=1, padding=1, bias=False),
        BatchNorm2d(16),
        ReLU(),
        MaxPool2d(2),
        Conv2d(16, 32, 3, stride=1, padding=1, bias=False),
        BatchNorm2d(32),
        ReLU(),
        MaxPool2d(2),
        AdaptiveAvgPool2d(2),
        Flatten(),
    ]


def _vgg16bn_features(in_channels):
    plan = [64, 64, "M", 128, 128, "M", 256, 256, 256, "M", 512, 512, 512, "M", 512, 512, 512, "M"]
    layers = []
    c = in_channels
    for item in plan:
        if item == "M":
            layers.append(MaxPool2d(2))
        else:
            layers += [Conv2d(c, item, 3, stride=1, padding=1, bias=False), BatchNorm2d(item), ReLU()]
            c = item
    layers += [AdaptiveAvgPool2d(2), Flatten()]
    return layers


def _mini_classifier(feature_dim, num_classes):
    return [Linear(feature_dim, num_classes)]


def _vgg16bn_classifier(feature_dim, num_classes):
    return [
        Linear(feature_dim, 4096),
        ReLU(),
        Linear(4096, 4096),
        ReLU(),
        Linear(4096, num_classes),
    ]


ARCHITECTURES = {
    "mini": (_mini_features, _mini_classifier, 4),
    "vgg16bn": (_vgg16bn_features, _vgg16bn_classifier, 32),
}


def _last_conv_channels(feature_layers):
    channels = [l.out_channels for l in feature_layers if isinstance(l, Conv2d)]
    if not channels:
        raise ValueError("feature stack has no conv layers")
    return channels[-1]


@dataclass
class ActivationCache:
    """Opaque record tying a train-mode forward to its network."""

    net_id: int
    train: bool
    feature_caches: list = field(default_factory=list)
    classifier_caches: list = field(default_factory=list)


class Network:
    """Layer stacks, their parameters, and one momentum buffer per parameter."""

    def __init__(self, feature_layers, classifier_layers, architecture, in_channels, num_classes, dtype):
        pair = feature_layers[-2:]
        if not (isinstance(pair[0], AdaptiveAvgPool2d) and isinstance(pair[1], Flatten)):
            raise ValueError("feature stack must end with adaptive-avg-pool followed by flatten")
        self.feature_layers = feature_layers
        self.classifier_layers = classifier_layers
        self.architecture = architecture
        self.in_channels = in_channels
        self.num_classes = num_classes
        self.dtype = np.dtype(dtype)
        self.momentum = {}

    # -- construction ------------------------------------------------------

    @classmethod
    def build(cls, architecture="mini", in_channels=1, num_classes=2, seed=0, dtype=np.float32):
        if architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture '{architecture}' (have {sorted(ARCHITECTURES)})")
        if num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        feat_fn, clf_fn, _ = ARCHITECTURES[architecture]
        features = feat_fn(in_channels)
        pool = features[-2]
        feature_dim = _last_conv_channels(features) * pool.output_size * pool.output_size
        classifier = clf_fn(feature_dim, num_classes)
        net = cls(features, classifier, architecture, in_channels, num_classes, dtype)
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x6E65]))
        for layer in net.feature_layers + net.classifier_layers:
            layer.init_params(rng, net.dtype)
        net._reset_momentum()
        return net

    def _reset_momentum(self):
        self.momentum = {path: np.zeros_like(p) for path, p in self.named_parameters()}

    @property
    def feature_dim(self):
        pool = self.feature_layers[-2]
        return _last_conv_channels(self.feature_layers) * pool.output_size * pool.output_size

    @property
    def min_input_hw(self):
        return ARCHITECTURES[self.architecture][2]

    # -- parameter access --------------------------------------------------

    def named_parameters(self):
        out = []
        for group, layers in (("features", self.feature_layers), ("classifier", self.classifier_layers)):
            for i, layer in enumerate(layers):
                for name in sorted(layer.params):
                    out.append((f"{group}.{i}.{name}", layer.params[name]))
        return out

    def named_state(self):
        out = []
        for group, layers in (("features", self.feature_layers), ("classifier", self.classifier_layers)):
            for i, layer in enumerate(layers):
                for name in sorted(layer.state):
                    out.append((f"{group}.{i}.{name}", layer.state[name]))
        return out

    def layer_specs(self):
        feats = [{"kind": l.kind, **l.hyperparams()} for l in self.feature_layers]
        clf = [{"kind": l.kind, **l.hyperparams()} for l in self.classifier_layers]
        return feats, clf

    # -- forward / backward ------------------------------------------------

    def forward(self, batch, train):
        """Run the network; returns (logits, flattened pool features, cache)."""
        x = np.asarray(batch)
        if x.ndim != 4:
            raise ValueError(f"expected batch of shape (B, C, H, W), got {x.shape}")
        b, c, h, w = x.shape
        if c != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {c}")
        if h < self.min_input_hw or w < self.min_input_hw:
            raise ValueError(
                f"input {h}x{w} below minimum spatial size {self.min_input_hw} "
                f"for architecture '{self.architecture}'"
            )
        if not np.isfinite(x).all():
            raise ValueError("batch contains non-finite values")
        x = x.astype(self.dtype, copy=False)
        cache = ActivationCache(net_id=id(self), train=train)
        for layer in self.feature_layers:
            x, c_ = layer.forward(x, train)
            cache.feature_caches.append(c_)
        features = x
        for layer in self.classifier_layers:
            x, c_ = layer.forward(x, train)
            cache.classifier_caches.append(c_)
        return x, features, cache

    def backward(self, cache, dlogits):
        """Gradients of the loss wrt every parameter, given d(loss)/d(logits)."""
        if not isinstance(cache, ActivationCache) or cache.net_id != id(self):
            raise ValueError("activation cache does not belong to this network")
        if not cache.train:
            raise ValueError("backward requires a cache from a train-mode forward")
        grads = {}
        dy = np.asarray(dlogits, dtype=self.dtype)
        for i in range(len(self.classifier_layers) - 1, -1, -1):
            dy, g = self.classifier_layers[i].backward(dy, cache.classifier_caches[i])
            for name, val in g.items():
                grads[f"classifier.{i}.{name}"] = val
        for i in range(len(self.feature_layers) - 1, -1, -1):
            dy, g = self.feature_layers[i].backward(dy, cache.feature_caches[i])
            for name, val in g.items():
                grads[f"features.{i}.{name}"] = val
        return grads

    # -- classifier head management ----------------------------------------

    def reset_classifier(self, num_classes, seed):
        """Re-draw the classifier head; feature layers are left untouched."""
        if num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        _, clf_fn, _ = ARCHITECTURES[self.architecture]
        self.classifier_layers = clf_fn(self.feature_dim, num_classes)
        self.num_classes = num_classes
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x636C66]))
        for layer in self.classifier_layers:
            layer.init_params(rng, self.dtype)
        self.momentum = {p: b for p, b in self.momentum.items() if p.startswith("features.")}
        for i, layer in enumerate(self.classifier_layers):
            for name in sorted(layer.params):
                self.momentum[f"classifier.{i}.{name}"] = np.zeros_like(layer.params[name])

    # -- reconstruction (checkpoints) ---------------------------------------

    @classmethod
    def from_specs(cls, feature_specs, classifier_specs, architecture, in_channels, num_classes, dtype):
        features = [layer_from_spec(s) for s in feature_specs]
        classifier = [layer_from_spec(s) for s in classifier_specs]
        net = cls(features, classifier, architecture, in_channels, num_classes, dtype)
        rng = np.random.default_rng(0)
        for layer in net.feature_layers + net.classifier_layers:
            layer.init_params(rng, net.dtype)  # shapes only; overwritten by loaded buffers
        net._reset_momentum()
        return net
