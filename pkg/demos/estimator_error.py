"""How fast does a minibatch estimate of the whitened cross-covariance improve?

Each row averages the spectral-norm error over 50 random minibatches. Going
from n to 4n should roughly halve the error, a 1/sqrt(n) law, which is why
exact-gradient methods need large minibatches.
"""

import numpy as np

from noicca.data import SynthSpec, gen_synth
from noicca.dcca import estimator_error_scaling

X, Y, _ = gen_synth(SynthSpec(20, 20, tuple(np.linspace(0.9, 0.1, 10)), 10000, seed=5))
table = estimator_error_scaling(X, Y, 10, [25, 50, 100, 200, 400, 800, 1600], trials=50, seed=0)
print("    n   mean error   error * sqrt(n)")
for n, err in table:
    print(f"{n:5d}   {err:10.4f}   {err * np.sqrt(n):8.3f}")
