"""Stochastic deep CCA by nonlinear orthogonal iterations, with linear CCA solvers."""

from .cca import CcaSolution, als, closed_form, gd_rank1, subspace_angle, total_correlation
from .data import SplitData, SynthSpec, gen_synth, load_idx, make_splits, minibatches, split_halves
from .dcca import CovTracker, DccaModel, TrainHistory, estimator_error_scaling, objective, stol_gradient, train_noi, train_stol
from .errors import ConfigError, DataError, DimensionError, FormatError, NumericError, UsageError
from .nn import MlpParams, OptimConfig

__version__ = "0.1.0"
