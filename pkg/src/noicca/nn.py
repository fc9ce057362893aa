"""Small multilayer perceptron with ReLU hidden layers and a linear output layer.

Data flows column-per-sample: an input batch is d_in x m and the output is
L x m. Parameters are plain numpy arrays; ``sgd_step`` updates them in place.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, FormatError, UsageError

SNAPSHOT_MAGIC = b"NOI1"


@dataclass
class MlpParams:
    layer_sizes: tuple
    weights: list
    biases: list
    version: int = field(default=0, compare=False)

    @property
    def n_layers(self):
        return len(self.weights)

    def copy(self):
        return MlpParams(tuple(self.layer_sizes), [W.copy() for W in self.weights], [b.copy() for b in self.biases])

    def zeros_like(self):
        return Gradients([np.zeros_like(W) for W in self.weights], [np.zeros_like(b) for b in self.biases])


@dataclass
class Gradients:
    weights: list
    biases: list


@dataclass
class OptimConfig:
    eta: float = 0.01
    mu: float = 0.9
    weight_decay: float = 1e-4
    minibatch_size: int = 100
    epochs: int = 50
    rho: float = 0.9
    eps: float = 1e-6
    seed: int = 0

    def validate(self):
        if not self.eta > 0:
            raise ConfigError("eta must be > 0")
        if not 0 <= self.mu < 1:
            raise ConfigError("mu must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be >= 0")
        if self.minibatch_size < 1:
            raise ConfigError("minibatch_size must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if not 0 <= self.rho <= 1:
            raise ConfigError("rho must lie in [0, 1]")
        if not self.eps > 0:
            raise ConfigError("eps must be > 0")
        return self


@dataclass
class Cache:
    inputs: list  # input to each layer
    pre: list  # pre-activations of each layer
    version: int
    shapes: tuple


def init(layer_sizes, seed):
    """Glorot-uniform weights, zero biases, deterministic in ``seed``."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or min(sizes) < 1:
        raise ConfigError(f"need at least an input and an output size, got {sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-lim, lim, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(sizes, weights, biases)


def _shapes(p):
    return tuple(W.shape for W in p.weights)


def forward(p, X):
    if X.ndim != 2 or X.shape[0] != p.layer_sizes[0]:
        raise DimensionError(f"input has shape {X.shape}, network expects {p.layer_sizes[0]} rows")
    inputs, pre = [], []
    h = X
    last = p.n_layers - 1
    for i, (W, b) in enumerate(zip(p.weights, p.biases)):
        inputs.append(h)
        z = W @ h + b[:, None]
        pre.append(z)
        h = z if i == last else np.maximum(z, 0.0)
    return h, Cache(inputs, pre, p.version, _shapes(p))


def backward(p, cache, grad_output):
    """Gradients of (1/m) * sum_i loss_i, given d loss_i / d output_i as columns."""
    if cache.version != p.version or cache.shapes != _shapes(p):
        raise UsageError("cache does not belong to the current parameters; rerun forward")
    m = grad_output.shape[1]
    if grad_output.shape != cache.pre[-1].shape:
        raise DimensionError(f"grad_output shape {grad_output.shape} != output shape {cache.pre[-1].shape}")
    gW = [None] * p.n_layers
    gb = [None] * p.n_layers
    delta = grad_output / m
    for i in range(p.n_layers - 1, -1, -1):
        gW[i] = delta @ cache.inputs[i].T
        gb[i] = delta.sum(axis=1)
        if i > 0:
            delta = p.weights[i].T @ delta
            delta = delta * (cache.pre[i - 1] > 0)
    return Gradients(gW, gb)


def sgd_step(p, g, velocity, cfg):
    """Momentum SGD, in place: v <- mu v - eta (g + wd W); W <- W + v.

    Biases are exempt from weight decay. Returns ``(p, velocity)``.
    """
    for i in range(p.n_layers):
        vW, vb = velocity.weights[i], velocity.biases[i]
        vW *= cfg.mu
        vW -= cfg.eta * (g.weights[i] + cfg.weight_decay * p.weights[i])
        vb *= cfg.mu
        vb -= cfg.eta * g.biases[i]
        p.weights[i] += vW
        p.biases[i] += vb
    p.version += 1
    return p, velocity


def to_bytes(p):
    """Serialize to the NOI1 snapshot layout (little-endian, row-major)."""
    sizes = p.layer_sizes
    out = [SNAPSHOT_MAGIC, struct.pack(f"<I{len(sizes)}I", len(sizes), *sizes)]
    for W, b in zip(p.weights, p.biases):
        out.append(np.ascontiguousarray(W, dtype="<f8").tobytes())
        out.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(out)


def from_bytes(buf, offset=0):
    """Parse one snapshot starting at ``offset``; returns ``(params, next_offset)``."""
    if buf[offset : offset + 4] != SNAPSHOT_MAGIC:
        raise FormatError("missing NOI1 magic", offset=offset)
    pos = offset + 4
    if len(buf) < pos + 4:
        raise FormatError("truncated layer count", offset=pos)
    (count,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    if count < 2 or len(buf) < pos + 4 * count:
        raise FormatError(f"bad layer count {count}", offset=pos - 4)
    sizes = struct.unpack_from(f"<{count}I", buf, pos)
    pos += 4 * count
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        nbytes = 8 * (fan_out * fan_in + fan_out)
        if len(buf) < pos + nbytes:
            raise FormatError("truncated parameter data", offset=len(buf))
        W = np.frombuffer(buf, dtype="<f8", count=fan_out * fan_in, offset=pos).reshape(fan_out, fan_in)
        pos += 8 * fan_out * fan_in
        b = np.frombuffer(buf, dtype="<f8", count=fan_out, offset=pos)
        pos += 8 * fan_out
        weights.append(W.astype(np.float64))
        biases.append(b.astype(np.float64))
    return MlpParams(tuple(sizes), weights, biases), pos
