"""
Learn hyperparameters on the fly.

A 1-D series is revealed 150 points at a time. Each step re-places the
pseudo-inputs, maximises the online energy over (lengthscale, signal
variance, noise variance, pseudo-inputs) and then absorbs the batch. The
lengthscale should settle near the value a full exact GP would pick.
"""
import numpy as np
from scipy.optimize import minimize

from streamgp import (
    DataBatch,
    Hyperparams,
    OptimConfig,
    SparsePosterior,
    exact_gp,
    init_pseudo_inputs,
    optimize_batch,
    vfe_update,
)
from streamgp.harness import synth_gp_stream

truth = Hyperparams.from_values([0.8], 1.0, 0.1)
X, y = synth_gp_stream(1, 1500, truth, seed=0)

theta = Hyperparams.from_values([1.0], 1.0, 0.1)
post = SparsePosterior.empty(1)
cfg = OptimConfig(max_iters=30)
print("step  lengthscale  signal_var  noise_var")
for step, idx in enumerate(np.array_split(np.arange(len(y)), 10), start=1):
    b = DataBatch(X[idx], y[idx])
    Z = init_pseudo_inputs(post, b, 20, seed=0)
    theta, Z, _ = optimize_batch(post, b, theta, Z, "vfe", cfg)
    post, _ = vfe_update(post, b, theta, Z)
    print(f"{step:4d}  {theta.lengthscales[0]:11.3f}  {theta.signal_variance:10.3f}  {theta.noise_variance:9.3f}")


# the full-data answer, for reference
def nlml(v):
    return -exact_gp.log_marginal_likelihood(exact_gp.fit(X, y, Hyperparams.from_vector(v)))


ml = Hyperparams.from_vector(minimize(nlml, np.zeros(3), method="L-BFGS-B").x)
print(f"exact GP  {ml.lengthscales[0]:11.3f}  {ml.signal_variance:10.3f}  {ml.noise_variance:9.3f}")
