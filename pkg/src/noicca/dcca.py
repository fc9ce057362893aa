"""Deep CCA objective and its two stochastic optimizers.

STOL
    Exact gradient of the total correlation computed on each (large)
    minibatch and backpropagated through both networks.
NOI
    Nonlinear orthogonal iterations: each view's network takes a gradient
    step on a least-squares regression toward the other view's output,
    whitened with a running (rho-decayed) covariance estimate.

Ridges (``eps``) in this module are absolute: they are added verbatim to
the diagonal of a scaled covariance.
"""

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .cca import DEFAULT_EPS, center, total_correlation, whitened_cross_cov
from .data import minibatches
from .errors import DataError, DimensionError
from .linalg import as_matrix, inv_sqrt_sym, svd_rank_l


@dataclass
class DccaModel:
    net_f: nn.MlpParams
    net_g: nn.MlpParams

    def __post_init__(self):
        if self.net_f.layer_sizes[-1] != self.net_g.layer_sizes[-1]:
            raise DimensionError("both networks must share the output dimension L")

    @property
    def L(self):
        return self.net_f.layer_sizes[-1]

    @classmethod
    def create(cls, arch_x, arch_y, seed):
        return cls(nn.init(arch_x, (seed, 1)), nn.init(arch_y, (seed, 2)))

    def copy(self):
        return DccaModel(self.net_f.copy(), self.net_g.copy())

    def project(self, X, Y, chunk=10000):
        """Network outputs for both views, computed in column chunks."""
        F = np.hstack([nn.forward(self.net_f, X[:, i : i + chunk])[0] for i in range(0, X.shape[1], chunk)])
        G = np.hstack([nn.forward(self.net_g, Y[:, i : i + chunk])[0] for i in range(0, Y.shape[1], chunk)])
        return F, G

    def to_bytes(self):
        return nn.to_bytes(self.net_f) + nn.to_bytes(self.net_g)

    @classmethod
    def from_bytes(cls, buf):
        f, pos = nn.from_bytes(buf, 0)
        g, _ = nn.from_bytes(buf, pos)
        return cls(f, g)


@dataclass
class EpochRecord:
    epoch: int
    tune_corr: float
    train_obj: float
    seconds: float


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)
    test_corr: float = float("nan")

    def add(self, epoch, tune_corr, train_obj, seconds):
        if self.records and epoch <= self.records[-1].epoch:
            raise ValueError("epochs must be strictly increasing")
        self.records.append(EpochRecord(epoch, tune_corr, train_obj, seconds))

    def to_csv(self, include_time=True):
        """CSV text; wall-clock seconds are left blank when ``include_time`` is False."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "tune_corr", "train_obj", "seconds"])
        for r in self.records:
            secs = f"{r.seconds:.3f}" if include_time else ""
            w.writerow([r.epoch, _fmt(r.tune_corr), _fmt(r.train_obj), secs])
        w.writerow(["test", _fmt(self.test_corr), "", ""])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        hist = cls()
        rows = list(csv.reader(io.StringIO(text)))
        for row in rows[1:]:
            if row[0] == "test":
                hist.test_corr = float(row[1])
            else:
                hist.add(int(row[0]), float(row[1]), float(row[2]), float(row[3]) if row[3] else float("nan"))
        return hist


def _fmt(x):
    return "nan" if x is None or math.isnan(x) else repr(float(x))


def objective(model, X, Y, L=None, eps=DEFAULT_EPS):
    """Total canonical correlation between the two network outputs."""
    if X.shape[1] != Y.shape[1]:
        raise DimensionError("paired views need the same sample count")
    if X.shape[1] < 2:
        return float("nan")
    F, G = model.project(X, Y)
    if L is not None and L != F.shape[0]:
        raise DimensionError(f"model outputs {F.shape[0]} dims, L={L} requested")
    return total_correlation(F, G, eps)


def trace_norm_objective(F, G, L, eps):
    """Sum of the top-L singular values of the ridged whitened cross-covariance."""
    Fc, _ = center(as_matrix(F))
    Gc, _ = center(as_matrix(G))
    Sff_is = inv_sqrt_sym(Fc @ Fc.T, eps)
    Sgg_is = inv_sqrt_sym(Gc @ Gc.T, eps)
    _, s, _ = svd_rank_l(Sff_is @ (Fc @ Gc.T) @ Sgg_is, L)
    return float(np.sum(s))


def stol_gradient(F_b, G_b, L, eps):
    """Ascent gradient of the total correlation with respect to both outputs.

    Returns ``(dF, dG)``, same shapes as the inputs. The minibatch is
    centered here; since the gradient has zero row sums it is also the
    gradient with respect to the uncentered outputs.
    """
    F_b = as_matrix(F_b, "F_b")
    G_b = as_matrix(G_b, "G_b")
    if F_b.shape[1] != G_b.shape[1]:
        raise DimensionError("views must share the minibatch")
    if F_b.shape[1] < 2:
        raise DataError("STOL gradient needs a minibatch of at least 2 samples")
    F, _ = center(F_b)
    G, _ = center(G_b)
    Sff_is = inv_sqrt_sym(F @ F.T, eps)
    Sgg_is = inv_sqrt_sym(G @ G.T, eps)
    Ut, s, Vt = svd_rank_l(Sff_is @ (F @ G.T) @ Sgg_is, L)
    A = Sff_is @ Ut
    B = Sgg_is @ Vt
    d_ff = -0.5 * (A * s) @ A.T
    d_gg = -0.5 * (B * s) @ B.T
    d_fg = A @ B.T
    return 2 * d_ff @ F + d_fg @ G, 2 * d_gg @ G + d_fg.T @ F


@dataclass
class CovTracker:
    """Running mean and scaled covariance of one view's outputs.

    ``update`` first moves the mean toward the batch mean, centers the batch
    with it, then blends ``(N / n) B B^T`` into the covariance with weight
    ``1 - rho``. The first update initializes both directly from the batch.
    """

    dim: int
    rho: float
    n_total: int
    eps: float = 1e-6
    cov: np.ndarray = None
    mean: np.ndarray = None
    initialized: bool = False
    _inv_sqrt: np.ndarray = field(default=None, repr=False)

    def update(self, batch):
        n = batch.shape[1]
        if n == 0:
            raise DataError("empty minibatch")
        bmean = batch.sum(axis=1) / n
        if not self.initialized:
            self.mean = bmean
            B = batch - bmean[:, None]
            self.cov = (self.n_total / n) * (B @ B.T)
            self.initialized = True
        else:
            self.mean = self.rho * self.mean + (1.0 - self.rho) * bmean
            B = batch - self.mean[:, None]
            self.cov = self.rho * self.cov + (1.0 - self.rho) * (self.n_total / n) * (B @ B.T)
        self._inv_sqrt = None
        return self

    def inv_sqrt(self):
        if self._inv_sqrt is None:
            self._inv_sqrt = inv_sqrt_sym(self.cov, self.eps)
        return self._inv_sqrt

    def whiten(self, batch):
        return self.inv_sqrt() @ (batch - self.mean[:, None])


def cov_update(tracker, batch, n_total):
    tracker.n_total = n_total
    return tracker.update(batch)


def _epoch_seed(seed, epoch):
    return int(np.random.SeedSequence([seed, epoch]).generate_state(1)[0])


def _evaluate(model, data, eps):
    tune = objective(model, data.tune_x, data.tune_y, eps=eps)
    train = objective(model, data.train_x, data.train_y, eps=eps)
    return tune, train


def _run(model, data, cfg, step, log):
    hist = TrainHistory()
    elapsed = 0.0
    hist.add(0, *_evaluate(model, data, DEFAULT_EPS), 0.0)
    N = data.n_train
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        for idx in minibatches(N, cfg.minibatch_size, _epoch_seed(cfg.seed, epoch)):
            step(idx)
        elapsed += time.perf_counter() - t0
        tune, train = _evaluate(model, data, DEFAULT_EPS)
        hist.add(epoch, tune, train, elapsed)
        if log is not None:
            log(f"epoch {epoch:3d}  tune {tune:.4f}  train {train:.4f}  {elapsed:.1f}s")
    if data.test_x.shape[1] >= 2:
        hist.test_corr = objective(model, data.test_x, data.test_y)
    return hist


def train_stol(model, data, cfg, log=None):
    """Large-minibatch stochastic training with the exact minibatch gradient.

    Each minibatch is centered on its own; trailing minibatches with fewer
    than two samples are skipped. With ``minibatch_size = N`` this is plain
    full-batch gradient ascent.
    """
    cfg.validate()
    m = model.copy()
    f, g = m.net_f, m.net_g
    vf, vg = f.zeros_like(), g.zeros_like()
    X, Y, L = data.train_x, data.train_y, m.L

    def step(idx):
        if len(idx) < 2:
            return
        Fb, cf = nn.forward(f, X[:, idx])
        Gb, cg = nn.forward(g, Y[:, idx])
        dF, dG = stol_gradient(Fb, Gb, L, cfg.eps)
        # backward averages over the batch; scale so the result is -dObjective/dW
        gf = nn.backward(f, cf, -len(idx) * dF)
        gg = nn.backward(g, cg, -len(idx) * dG)
        nn.sgd_step(f, gf, vf, cfg)
        nn.sgd_step(g, gg, vg, cfg)

    hist = _run(m, data, cfg, step, log)
    return m, hist


def noi_targets(tracker_f, tracker_g, Fb, Gb):
    """Regression targets (view-1 target, view-2 target) for one NOI step."""
    return tracker_g.whiten(Gb), tracker_f.whiten(Fb)


def default_init_batch(N, n, L):
    return min(N, max(n, 4 * L))


def train_noi(model, data, cfg, log=None, init_batch=None):
    """Nonlinear orthogonal iterations.

    Both trackers start from one random minibatch of ``init_batch`` samples
    (default ``max(n, 4L)``, capped at N). Each step then updates the trackers
    with the current minibatch outputs, builds whitened cross-view targets
    (held constant), and takes one momentum SGD step per view on the mean
    squared regression error. Both steps use the pre-update parameters.
    """
    cfg.validate()
    m = model.copy()
    f, g = m.net_f, m.net_g
    vf, vg = f.zeros_like(), g.zeros_like()
    X, Y, L = data.train_x, data.train_y, m.L
    N = data.n_train
    tf = CovTracker(L, cfg.rho, N, cfg.eps)
    tg = CovTracker(L, cfg.rho, N, cfg.eps)
    n0 = init_batch or default_init_batch(N, cfg.minibatch_size, L)
    b0 = np.random.default_rng([cfg.seed, 0]).choice(N, size=n0, replace=False)
    F0, G0 = m.project(X[:, b0], Y[:, b0])
    tf.update(F0)
    tg.update(G0)

    def step(idx):
        Fb, cf = nn.forward(f, X[:, idx])
        Gb, cg = nn.forward(g, Y[:, idx])
        tf.update(Fb)
        tg.update(Gb)
        target_f, target_g = noi_targets(tf, tg, Fb, Gb)
        gf = nn.backward(f, cf, 2.0 * (Fb - target_f))
        gg = nn.backward(g, cg, 2.0 * (Gb - target_g))
        nn.sgd_step(f, gf, vf, cfg)
        nn.sgd_step(g, gg, vg, cfg)

    hist = _run(m, data, cfg, step, log)
    return m, hist


def estimator_error_scaling(F, G, L, n_list, trials, seed, eps=DEFAULT_EPS):
    """Mean spectral-norm error of the minibatch whitened cross-covariance.

    For each n, draws ``trials`` random size-n subsets (without replacement),
    centers each subset on its own and compares its whitened cross-covariance
    with the one computed on all N samples.

    Returns a list of ``(n, mean_error)`` pairs.
    """
    F = as_matrix(F, "F")
    G = as_matrix(G, "G")
    N = F.shape[1]
    full, _, _ = whitened_cross_cov(center(F)[0], center(G)[0], eps)
    rng = np.random.default_rng(seed)
    table = []
    for n in n_list:
        if n < L + 1 or n > N:
            raise DataError(f"minibatch size {n} must lie in [L + 1, N] = [{L + 1}, {N}]")
        errs = []
        for _ in range(trials):
            idx = rng.choice(N, size=n, replace=False)
            est, _, _ = whitened_cross_cov(center(F[:, idx])[0], center(G[:, idx])[0], eps)
            errs.append(np.linalg.norm(est - full, 2))
        table.append((n, float(np.mean(errs))))
    return table
