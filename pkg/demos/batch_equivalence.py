"""
Stream a dataset through the online VFE update in four pieces and compare the
result with a single batch sparse GP fit on everything.

With the hyperparameters and pseudo-inputs held fixed the two are the same
model, so the posteriors agree and the per-batch energies sum to the batch
collapsed bound.
"""
import numpy as np

from streamgp import DataBatch, Hyperparams, SparsePosterior, batch_sgp, predict, vfe_update
from streamgp.harness import synth_gp_stream


def main():
    theta = Hyperparams.from_values([1.0], 1.0, 0.1)
    X, y = synth_gp_stream(1, 200, theta, seed=0)
    Z = np.linspace(0, 10, 10)[:, None]

    post = SparsePosterior.empty(1)
    total = 0.0
    for idx in np.array_split(np.arange(len(y)), 4):
        post, energy = vfe_update(post, DataBatch(X[idx], y[idx]), theta, Z)
        total += energy.total
        print(f"after {post.n_seen:3d} points: energy {energy.total:9.4f}  (running sum {total:9.4f})")

    bound = batch_sgp.collapsed_bound(X, y, Z, theta)
    print(f"batch collapsed bound on all 200 points: {bound:9.4f}")

    # predictions from the streamed state against the batch fit
    Xs = np.linspace(0, 10, 5)[:, None]
    a = predict(post, Xs)
    b = batch_sgp.predict(batch_sgp.fit_q(X, y, Z, theta), Xs)
    for x, m1, m2, v1, v2 in zip(Xs[:, 0], a.mean, b.mean, a.latent_var, b.latent_var):
        print(f"x={x:4.1f}  mean {m1:+.6f} vs {m2:+.6f}   var {v1:.6f} vs {v2:.6f}")


if __name__ == "__main__":
    main()
