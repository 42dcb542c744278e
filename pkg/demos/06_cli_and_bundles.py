# # The command line and model bundles
#
# Everything above is also available through `bregpca`. Matrices move between
# steps as .bmat files (a small binary header plus float64 values) or csv.

# %%
import tempfile
from pathlib import Path

import numpy as np

from bregpca import datasets, io
from bregpca.cli import main

work = Path(tempfile.mkdtemp())
P, labels = datasets.clustered_simplex(n=300, d=10, seed=2)
io.write_matrix(P[:250], work / "train.bmat")
io.write_matrix(P[250:], work / "held.bmat")

# %%
main(["mean", "--input", str(work / "train.bmat"), "--link", "softmax"])

# %%
main(["fit", "--input", str(work / "train.bmat"), "--link", "softmax", "--components", "3",
      "--output", str(work / "model")])
print((work / "model" / "manifest").read_text())

# %%
main(["encode", "--model", str(work / "model"), "--input", str(work / "held.bmat"), "--output", str(work / "C.bmat")])
main(["decode", "--model", str(work / "model"), "--coeffs", str(work / "C.bmat"), "--output", str(work / "P_hat.bmat")])
print("held-out reconstructions sum to one:", np.allclose(io.read_matrix(work / "P_hat.bmat").sum(axis=1), 1.0))

# %%
main(["eval", "--model", str(work / "model"), "--input", str(work / "held.bmat"), "--baseline", "logit-pca"])

# %% [markdown]
# Failures map to exit codes: 2 for bad arguments, 3 for bad data or files,
# 4 for numerical trouble.

# %%
(work / "bad.bmat").write_bytes(b"NOPE" + bytes(20))
print("exit code:", main(["mean", "--input", str(work / "bad.bmat"), "--link", "identity"]))
