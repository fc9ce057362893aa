"""Why NOI needs memory: linear CCA with one sample per minibatch.

With rho = 0 the covariance used for whitening comes from a single sample,
which is rank one and useless; training drifts away from the random start.
Keeping a long memory (rho close to 1) lets the same updates converge.
The full-scale version of this sweep is configs/synth_linear_rho.ini.
"""

from noicca import cca, dcca, nn
from noicca.data import SynthSpec, gen_synth, make_splits

X, Y, _ = gen_synth(SynthSpec(10, 10, (0.9, 0.8, 0.7, 0.6, 0.5), 2000, seed=7))
split = make_splits(X, Y, (2000, 0, 0), seed=0, L=5)
opt = cca.closed_form(split.train_x, split.train_y, 5).total
model = dcca.DccaModel.create((10, 5), (10, 5), seed=0)
print(f"closed-form optimum {opt:.3f}")

for rho in (0.0, 0.5, 0.9, 0.99, 0.999):
    cfg = nn.OptimConfig(eta=3e-4, mu=0.0, weight_decay=0.0, minibatch_size=1, epochs=20, rho=rho)
    _, hist = dcca.train_noi(model, split, cfg)
    print(f"rho={rho:<6} start {hist.records[0].train_obj:.3f}  after 20 epochs {hist.records[-1].train_obj:.3f}")
