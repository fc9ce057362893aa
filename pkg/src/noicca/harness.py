"""Experiment runner and the ``noicca`` command line.

Configs are INI files (``[section]`` headers, ``key = value`` lines, lists
comma separated)::

    [data]
    source = synth            ; or mnist
    d_x = 10
    d_y = 10
    correlations = 0.9, 0.8, 0.7
    n_samples = 6000
    sizes = 5000, 500, 500

    [model]
    algorithm = noi           ; noi | stol | cca-closed | cca-als | cca-gd
    L = 5
    arch_x = 10, 5
    arch_y = 10, 5

    [optim]
    eta = 0.0003
    rho = 0.999
    minibatch_size = 1
    epochs = 50

    [grid]
    rho = 0, 0.9, 0.999

    [output]
    dir = out

Every run writes ``history.csv``, ``timing.csv``, ``model.bin`` and
``result.txt`` into the output directory.
"""

import argparse
import configparser
import itertools
import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import cca, data, dcca, nn
from .errors import ConfigError, DataError, DimensionError, FormatError, NumericError

log = logging.getLogger("noicca")

ALGORITHMS = ("noi", "stol", "cca-closed", "cca-als", "cca-gd")
GRID_KEYS = ("rho", "minibatch_size", "eta", "mu")
RHO_SWEEP = (0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.99, 0.999, 0.9999)


@dataclass
class ExperimentConfig:
    data: dict
    algorithm: str
    L: int
    arch_x: tuple
    arch_y: tuple
    optim: nn.OptimConfig
    init_seed: int = 0
    cca_iterations: int = 200
    init_batch: int = None
    grid: dict = field(default_factory=dict)
    output_dir: Path = Path("out")
    base_dir: Path = Path(".")

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose one of {', '.join(ALGORITHMS)}")
        if self.L < 1:
            raise ConfigError("L must be >= 1")
        if self.algorithm in ("noi", "stol"):
            if self.arch_x[-1] != self.L or self.arch_y[-1] != self.L:
                raise ConfigError("both architectures must end in L outputs")
        if self.algorithm == "cca-gd" and self.L != 1:
            raise ConfigError("cca-gd computes a single canonical pair; set L = 1")
        for key, values in self.grid.items():
            if key not in GRID_KEYS:
                raise ConfigError(f"cannot grid over {key!r}; allowed: {', '.join(GRID_KEYS)}")
            if not values:
                raise ConfigError(f"grid list for {key!r} is empty")
        self.optim.validate()
        return self


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def load_config(path, env=None):
    """Parse an INI experiment config; ``NOICCA_SEED`` overrides the optimizer seed."""
    env = os.environ if env is None else env
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    path = Path(path)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}")
    try:
        return _build_config(parser, path.parent, env)
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}")


def _build_config(parser, base_dir, env):
    sec = lambda name: parser[name] if parser.has_section(name) else {}
    d = dict(sec("data"))
    m = sec("model")
    o = sec("optim")
    defaults = nn.OptimConfig()
    kw = {}
    for f in fields(nn.OptimConfig):
        if f.name in o:
            kw[f.name] = type(getattr(defaults, f.name))(o[f.name])
    if "NOICCA_SEED" in env:
        kw["seed"] = int(env["NOICCA_SEED"])
    optim = nn.OptimConfig(**kw)
    grid = {}
    for key, text in sec("grid").items():
        grid[key] = _ints(text) if key == "minibatch_size" else _floats(text)
    L = int(m.get("L", 1))
    arch_x = tuple(_ints(m["arch_x"])) if "arch_x" in m else ()
    arch_y = tuple(_ints(m["arch_y"])) if "arch_y" in m else ()
    out = Path(sec("output").get("dir", "out"))
    cfg = ExperimentConfig(
        data=d,
        algorithm=m.get("algorithm", "noi").strip(),
        L=L,
        arch_x=arch_x,
        arch_y=arch_y,
        optim=optim,
        init_seed=int(m.get("init_seed", optim.seed)),
        cca_iterations=int(o.get("cca_iterations", 200)),
        init_batch=int(o["init_batch"]) if "init_batch" in o else None,
        grid=grid,
        output_dir=out if out.is_absolute() else base_dir / out,
        base_dir=base_dir,
    )
    return cfg.validate()


def _resolve(cfg, p):
    p = Path(p)
    return p if p.is_absolute() else cfg.base_dir / p


def load_dataset(cfg):
    """Build the train/tune/test splits described by ``cfg.data``."""
    d = cfg.data
    source = d.get("source", "synth").strip()
    split_seed = int(d.get("split_seed", 0))
    if source == "mnist":
        if "train_images" not in d:
            raise ConfigError("mnist source needs train_images")
        images = data.load_idx(_resolve(cfg, d["train_images"]))
        X, Y = data.split_halves(images)
        sizes = _ints(d.get("sizes", "50000, 10000, 10000"))
        if "test_images" in d:
            Xt, Yt = data.split_halves(data.load_idx(_resolve(cfg, d["test_images"])))
            split = data.make_splits(X, Y, (sizes[0], sizes[1], 0), split_seed, cfg.L)
            if sizes[2] > Xt.shape[1]:
                raise ConfigError(f"test file holds {Xt.shape[1]} images, {sizes[2]} requested")
            split.test_x, split.test_y = Xt[:, : sizes[2]], Yt[:, : sizes[2]]
            return split
        return data.make_splits(X, Y, sizes, split_seed, cfg.L)
    if source == "synth":
        if "correlations" in d:
            corr = tuple(_floats(d["correlations"]))
        else:
            hi, lo = _floats(d.get("corr_range", "0.9, 0.1"))
            corr = tuple(np.linspace(hi, lo, int(d.get("n_corr", cfg.L))))
        spec = data.SynthSpec(
            d_x=int(d["d_x"]),
            d_y=int(d["d_y"]),
            correlations=corr,
            N=int(d.get("n_samples", 10000)),
            seed=int(d.get("synth_seed", 0)),
        )
        X, Y, _ = data.gen_synth(spec)
        sizes = _ints(d.get("sizes", f"{spec.N}, 0, 0"))
        return data.make_splits(X, Y, sizes, split_seed, cfg.L)
    raise ConfigError(f"unknown data source {source!r}")


def _linear_model(Wx, mx, Wy, my):
    """Wrap projection maps (rows = directions) as single-layer networks."""
    f = nn.MlpParams((Wx.shape[1], Wx.shape[0]), [Wx.copy()], [-(Wx @ mx)])
    g = nn.MlpParams((Wy.shape[1], Wy.shape[0]), [Wy.copy()], [-(Wy @ my)])
    return dcca.DccaModel(f, g)


def _fit_linear(cfg, split):
    X, Y = split.train_x, split.train_y
    if cfg.algorithm == "cca-closed":
        sol = cca.closed_form(X, Y, cfg.L)
        return _linear_model(sol.u_map.T, sol.mean_x, sol.v_map.T, sol.mean_y)
    Fc, mx = cca.center(X)
    Gc, my = cca.center(Y)
    if cfg.algorithm == "cca-als":
        st = cca.als(Fc, Gc, cfg.L, cfg.cca_iterations, seed=cfg.optim.seed)
        # recover the maps by least squares; A_T lies in the row space of F
        Wx = np.linalg.lstsq(Fc.T, st.a_proj.T, rcond=None)[0].T
        Wy = np.linalg.lstsq(Gc.T, st.b_proj.T, rcond=None)[0].T
        return _linear_model(Wx, mx, Wy, my)
    u, v = cca.gd_rank1(Fc, Gc, cfg.optim.eta, cfg.cca_iterations, seed=cfg.optim.seed)
    return _linear_model(u[None, :], mx, v[None, :], my)


def train(cfg, split):
    """Run one configured algorithm; returns ``(model, history)``."""
    if cfg.algorithm in ("noi", "stol"):
        if cfg.arch_x[0] != split.train_x.shape[0] or cfg.arch_y[0] != split.train_y.shape[0]:
            raise ConfigError(
                f"architectures expect inputs {cfg.arch_x[0]}/{cfg.arch_y[0]}, "
                f"data has {split.train_x.shape[0]}/{split.train_y.shape[0]}"
            )
        model = dcca.DccaModel.create(cfg.arch_x, cfg.arch_y, cfg.init_seed)
        logf = lambda msg: log.info(msg)
        if cfg.algorithm == "noi":
            return dcca.train_noi(model, split, cfg.optim, log=logf, init_batch=cfg.init_batch)
        return dcca.train_stol(model, split, cfg.optim, log=logf)
    model = _fit_linear(cfg, split)
    hist = dcca.TrainHistory()
    hist.add(0, dcca.objective(model, split.tune_x, split.tune_y), dcca.objective(model, split.train_x, split.train_y), 0.0)
    if split.test_x.shape[1] >= 2:
        hist.test_corr = dcca.objective(model, split.test_x, split.test_y)
    return model, hist


def write_artifacts(out_dir, model, hist):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    # wall-clock time is kept out of history.csv so reruns are byte-identical
    (out_dir / "history.csv").write_text(hist.to_csv(include_time=False))
    with open(out_dir / "timing.csv", "w") as fh:
        fh.write("epoch,seconds\n")
        for r in hist.records:
            fh.write(f"{r.epoch},{r.seconds:.3f}\n")
    (out_dir / "model.bin").write_bytes(model.to_bytes())
    last = hist.records[-1]
    (out_dir / "result.txt").write_text(
        f"tune_corr = {dcca._fmt(last.tune_corr)}\n"
        f"test_corr = {dcca._fmt(hist.test_corr)}\n"
        f"train_corr = {dcca._fmt(last.train_obj)}\n"
    )


def run(cfg, split=None):
    split = load_dataset(cfg) if split is None else split
    model, hist = train(cfg, split)
    write_artifacts(cfg.output_dir, model, hist)
    return model, hist


def grid_points(cfg):
    keys = [k for k in GRID_KEYS if k in cfg.grid]
    for combo in itertools.product(*(cfg.grid[k] for k in keys)):
        yield replace(cfg, optim=replace(cfg.optim, **dict(zip(keys, combo))))


def grid(cfg, split=None):
    """Cartesian grid search on the final tune correlation.

    Writes ``sweep.csv`` (one row per trial, in declared order), the best
    trial's run artifacts and ``best.ini`` with its optimizer settings.
    Ties go to the earliest trial.
    """
    split = load_dataset(cfg) if split is None else split
    rows, best = [], None
    for trial in grid_points(cfg):
        model, hist = train(trial, split)
        score = hist.records[-1].tune_corr
        o = trial.optim
        rows.append(f"{o.rho!r},{o.minibatch_size},{o.eta!r},{o.mu!r},{dcca._fmt(score)}")
        log.info("trial %s -> tune %.4f", rows[-1], score)
        key = -np.inf if np.isnan(score) else score
        if best is None or key > best[0]:
            best = (key, trial, model, hist)
    out = Path(cfg.output_dir)
    write_artifacts(out, best[2], best[3])
    (out / "sweep.csv").write_text("rho,minibatch_size,eta,mu,tune_corr\n" + "".join(r + "\n" for r in rows))
    o = best[1].optim
    (out / "best.ini").write_text("[optim]\n" + "".join(f"{f.name} = {getattr(o, f.name)!r}\n" for f in fields(o)))
    return best[1], rows


def evaluate(model_path, cfg):
    try:
        model = dcca.DccaModel.from_bytes(Path(model_path).read_bytes())
    except FileNotFoundError as exc:
        raise OSError(str(exc))
    split = load_dataset(cfg)
    return {
        "tune_corr": dcca.objective(model, split.tune_x, split.tune_y),
        "test_corr": dcca.objective(model, split.test_x, split.test_y),
        "train_corr": dcca.objective(model, split.train_x, split.train_y),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(prog="noicca", description="Deep CCA via nonlinear orthogonal iterations")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="train one configuration")
    p_run.add_argument("config")
    p_grid = sub.add_parser("grid", help="grid search over the [grid] lists")
    p_grid.add_argument("config")
    p_eval = sub.add_parser("eval", help="evaluate a saved model.bin on the configured data")
    p_eval.add_argument("model")
    p_eval.add_argument("config")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            run(cfg)
        elif args.command == "grid":
            if not cfg.grid:
                raise ConfigError("grid mode needs a [grid] section")
            grid(cfg)
        else:
            for k, v in evaluate(args.model, cfg).items():
                print(f"{k} = {dcca._fmt(v)}")
    except (ConfigError, DimensionError, DataError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (OSError, FormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
