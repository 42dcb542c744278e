# # Fitting from a stream of minibatches
#
# When rows arrive in blocks, the mean is tracked with a bias-corrected
# moving average and the directions take one step per block.

# %%
import numpy as np

from bregpca import bpca, datasets, evalkit

X, B = datasets.planted_gaussian(n=200, d=16, k=4)
batch_model, _, _ = bpca.fit(X, "identity", 4)

# %%
for passes in (1, 3, 10):
    stream = bpca.minibatches(X, 10, passes, seed=0)
    model, report = bpca.fit_streaming(stream, "identity", 4)
    dist = evalkit.subspace_distance(model.V, batch_model.V)
    print(f"{passes:2d} passes, {report.epochs_run:4d} batches: distance to batch fit {dist:.4f}")

# %% [markdown]
# A generator works just as well as a list, so data never has to sit in memory
# at once. Here each block is a random draw of rows.

# %%
def blocks(rng, n_blocks):
    for _ in range(n_blocks):
        yield X[rng.integers(0, len(X), size=20)]


model, report = bpca.fit_streaming(blocks(np.random.default_rng(0), 200), "identity", 4)
print("distance to batch fit:", round(evalkit.subspace_distance(model.V, batch_model.V), 4))
print("last block losses:", np.round(report.loss_history[-3:], 3))
