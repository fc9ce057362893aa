"""Datasets: IDX image files, split-half MNIST views, synthetic paired views, splits and minibatches."""

import gzip
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, DimensionError, FormatError

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
GZIP_MAGIC = b"\x1f\x8b"


@dataclass
class SplitData:
    train_x: np.ndarray
    train_y: np.ndarray
    tune_x: np.ndarray
    tune_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    L: int

    def __post_init__(self):
        for name in ("train", "tune", "test"):
            x, y = getattr(self, name + "_x"), getattr(self, name + "_y")
            if x.shape[1] != y.shape[1]:
                raise DimensionError(f"{name} views have {x.shape[1]} and {y.shape[1]} samples")

    @property
    def n_train(self):
        return self.train_x.shape[1]


@dataclass
class SynthSpec:
    d_x: int
    d_y: int
    correlations: tuple
    N: int
    seed: int = 0

    @property
    def L_true(self):
        return len(self.correlations)

    def validate(self):
        c = np.asarray(self.correlations, dtype=np.float64)
        if self.L_true < 1 or self.L_true > min(self.d_x, self.d_y):
            raise ConfigError(f"need 1 <= L_true <= min(d_x, d_y), got {self.L_true}")
        if np.any(c <= 0) or np.any(c > 1) or np.any(np.diff(c) > 0):
            raise ConfigError("correlations must be descending and lie in (0, 1]")
        if self.N < 2:
            raise ConfigError("N must be at least 2")


def _read_bytes(path):
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] == GZIP_MAGIC:
        raw = gzip.decompress(raw)
    return raw


def load_idx(path):
    """Read an IDX unsigned-byte rank-3 image file.

    Returns a (rows*cols) x count float64 matrix scaled to [0, 1]; column i is
    image i flattened row-major. Gzip-compressed files are detected by their
    header and decompressed transparently.
    """
    raw = _read_bytes(path)
    if len(raw) < 16:
        raise FormatError(f"{path}: truncated IDX header", offset=len(raw))
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(f"{path}: bad magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}", offset=0)
    need = 16 + count * rows * cols
    if len(raw) < need:
        raise FormatError(f"{path}: truncated pixel data, expected {need} bytes", offset=len(raw))
    pixels = np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols, offset=16)
    return pixels.reshape(count, rows * cols).T / 255.0


def write_idx(path, images, compress=False):
    """Write a count x rows x cols uint8 array as an IDX image file."""
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise DimensionError("images must have shape (count, rows, cols)")
    payload = struct.pack(">IIII", IDX_IMAGE_MAGIC, *images.shape) + images.tobytes()
    if compress:
        payload = gzip.compress(payload, mtime=0)
    with open(path, "wb") as f:
        f.write(payload)


def split_halves(images):
    """Split 784 x M flattened 28x28 images into left and right 28x14 halves."""
    if images.shape[0] != 784:
        raise DimensionError(f"expected 784 rows (28x28 images), got {images.shape[0]}")
    cube = images.reshape(28, 28, -1)
    X = cube[:, :14, :].reshape(392, -1)
    Y = cube[:, 14:, :].reshape(392, -1)
    return X, Y


def make_splits(X, Y, sizes, seed, L):
    """Seeded permutation followed by contiguous train/tune/test assignment."""
    n_train, n_tune, n_test = sizes
    M = X.shape[1]
    if Y.shape[1] != M:
        raise DimensionError("views must have the same number of samples")
    if min(sizes) < 0 or sum(sizes) > M:
        raise ConfigError(f"split sizes {tuple(sizes)} exceed the {M} available samples")
    perm = np.random.default_rng(seed).permutation(M)
    a, b, c = n_train, n_train + n_tune, n_train + n_tune + n_test
    tr, tu, te = perm[:a], perm[a:b], perm[b:c]
    return SplitData(X[:, tr], Y[:, tr], X[:, tu], Y[:, tu], X[:, te], Y[:, te], L)


def _mixing(rng, d):
    # random rotation with singular values in [0.5, 2]: full rank, moderate conditioning
    Q1, _ = np.linalg.qr(rng.standard_normal((d, d)))
    Q2, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return (Q1 * rng.uniform(0.5, 2.0, size=d)) @ Q2


def gen_synth(spec):
    """Sample two views with known population canonical correlations.

    Shared standard-normal latents z_j enter the first L_true latent
    coordinates of both views as sqrt(c_j) z_j + sqrt(1 - c_j) e_j, which gives
    correlation c_j between matched coordinates. Remaining coordinates are
    independent noise. Each view is then mixed by a seeded full-rank map.

    Returns ``(X, Y, total)`` where ``total`` is the population total
    correlation sum(c_j).
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    c = np.asarray(spec.correlations, dtype=np.float64)
    k, N = spec.L_true, spec.N
    Ax = _mixing(rng, spec.d_x)
    Ay = _mixing(rng, spec.d_y)
    z = rng.standard_normal((k, N))
    lat_x = rng.standard_normal((spec.d_x, N))
    lat_y = rng.standard_normal((spec.d_y, N))
    a, b = np.sqrt(c)[:, None], np.sqrt(1.0 - c)[:, None]
    lat_x[:k] = a * z + b * lat_x[:k]
    lat_y[:k] = a * z + b * lat_y[:k]
    return Ax @ lat_x, Ay @ lat_y, float(c.sum())


def make_exact_cca(d_x, d_y, correlations, N, seed):
    """Centered views whose *sample* canonical correlations are exactly ``correlations``.

    ``correlations`` may have up to min(d_x, d_y) entries; missing ones are
    zero. Useful when a test needs a precisely engineered spectrum rather
    than a sampled one.
    """
    c = np.zeros(min(d_x, d_y))
    c[: len(correlations)] = correlations
    if N < d_x + d_y + 1:
        raise DataError("need N > d_x + d_y for an exact construction")
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((N, d_x + d_y))
    Z -= Z.mean(axis=0)
    Q, _ = np.linalg.qr(Z)
    Fw = Q[:, :d_x].T
    Gw = Q[:, d_x:].T.copy()
    k = len(c)
    Gw[:k] = c[:, None] * Fw[:k] + np.sqrt(1.0 - c**2)[:, None] * Gw[:k]
    return _mixing(rng, d_x) @ Fw, _mixing(rng, d_y) @ Gw


def minibatches(n_samples, n, epoch_seed):
    """Shuffle indices with ``epoch_seed`` and cut them into chunks of size n."""
    if n < 1 or n > n_samples:
        raise ConfigError(f"minibatch size {n} must be in [1, {n_samples}]")
    perm = np.random.default_rng(epoch_seed).permutation(n_samples)
    return [perm[i : i + n] for i in range(0, n_samples, n)]
