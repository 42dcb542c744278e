# # Compressing a hidden layer and reading it out
#
# A synthetic "teacher" produces leaky-ReLU activations X followed by a dense
# readout W, b. We compress X to k numbers per row, reconstruct, and check
# whether the readout still predicts the same class.

# %%
import numpy as np

from bregpca import bpca, datasets, evalkit

X, W, b, labels = datasets.leaky_teacher(n=600, d=64, classes=3)
layer = evalkit.ReadoutLayer(W, b)
print("teacher accuracy on its own activations:", evalkit.readout_accuracy(X, layer, labels))
print("fraction of negative activations:", np.mean(X < 0).round(3))

# %%
print(" k   Bregman   vanilla PCA")
for k in (2, 4, 8, 32):
    model, C, _ = bpca.fit(X, "leaky-relu:0.01", k)
    ours = evalkit.readout_accuracy(model.decode(C), layer, labels)
    vanilla = evalkit.readout_accuracy(evalkit.pca_reconstruct(X, k), layer, labels)
    print(f"{k:2d}   {ours:.4f}    {vanilla:.4f}")

# %% [markdown]
# New rows are compressed with encode, which solves the code problem with the
# directions held fixed. Decoding planted codes and encoding them again
# recovers the codes.

# %%
c_star = np.random.default_rng(3).normal(scale=0.5, size=(4, model.k))
c = bpca.encode(model, model.decode(c_star), bpca.FitOptions(max_epochs=5000))
print("max code error:", np.abs(c - c_star).max())
