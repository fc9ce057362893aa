"""Minibatches of ten: NOI against the exact minibatch gradient.

Linear networks keep the picture clean, since the best achievable value is
the closed-form CCA total. With ten samples per step (twice the output
dimension) NOI without memory already gets close within a couple of epochs.
The exact gradient computed on ten samples is biased, because it whitens
with a ten-sample covariance, and levels off below the optimum. The
full-batch exact gradient is unbiased but takes a single step per epoch.

Deep ReLU networks are harder for NOI at this scale. The whitened targets
are tiny (the covariances are sums, not averages), so the regression is
slow in poorly conditioned hidden-feature directions and the step size
needs a careful search. Use ``noicca grid`` for that.
"""

from noicca import cca, dcca, nn
from noicca.data import SynthSpec, gen_synth, make_splits

X, Y, _ = gen_synth(SynthSpec(20, 15, (0.95, 0.9, 0.8, 0.7, 0.6), 6000, seed=1))
split = make_splits(X, Y, (5000, 500, 500), seed=0, L=5)
best = cca.closed_form(split.train_x, split.train_y, 5)
print(f"closed-form CCA, tune total: {cca.total_correlation(*best.transform(split.tune_x, split.tune_y)):.3f}\n")

model = dcca.DccaModel.create((20, 5), (15, 5), seed=0)
runs = {
    "NOI  n=10   rho=0   ": (dcca.train_noi, nn.OptimConfig(eta=0.01, mu=0.0, minibatch_size=10, rho=0.0)),
    "NOI  n=10   rho=0.99": (dcca.train_noi, nn.OptimConfig(eta=0.01, mu=0.0, minibatch_size=10, rho=0.99)),
    "STOL n=10           ": (dcca.train_stol, nn.OptimConfig(eta=0.1, mu=0.9, minibatch_size=10)),
    "STOL n=5000         ": (dcca.train_stol, nn.OptimConfig(eta=0.3, mu=0.9, minibatch_size=5000)),
}
print("tune total correlation after each epoch")
for name, (trainer, cfg) in runs.items():
    cfg.epochs, cfg.weight_decay = 10, 0.0
    _, hist = trainer(model, split, cfg)
    print(f"{name} {' '.join(f'{r.tune_corr:.2f}' for r in hist.records)}   test {hist.test_corr:.3f}")
