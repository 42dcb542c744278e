# # QR under a non-Euclidean inner product
#
# Orthonormalising directions with respect to a metric M means Q^T M Q = I.
# The factorisation is an ordinary Householder QR of sqrt(M) A, mapped back
# through sqrt(M)^-1.

# %%
import numpy as np

from bregpca.gqr import generalized_qr, generalized_qr_softmax, qr_householder
from bregpca.links import hessian_at, parse_link
from bregpca.metric import Metric, regularize

rng = np.random.default_rng(1)

# %%
A = rng.normal(size=(8, 3))
Q, R = qr_householder(A)
print("Euclidean:  |QR - A| =", np.linalg.norm(Q @ R - A), " |Q^T Q - I| =", np.linalg.norm(Q.T @ Q - np.eye(3)))

# %% [markdown]
# A dense SPD metric and a diagonal one (the Hessian of any elementwise link).

# %%
B = rng.normal(size=(8, 8))
M = Metric.full(B @ B.T + 0.5 * np.eye(8))
Q, R = generalized_qr(A, M)
print("full M:     |QR - A| =", np.linalg.norm(Q @ R - A), " |Q^T M Q - I| =", np.linalg.norm(Q.T @ M.dense() @ Q - np.eye(3)))

H = hessian_at(parse_link("sigmoid"), rng.normal(size=8))
Q, R = generalized_qr(A, H)
print("sigmoid H:  |Q^T H Q - I| =", np.linalg.norm(Q.T @ H.dense() @ Q - np.eye(3)))
print("R is upper triangular with non-negative diagonal:\n", R.round(3))

# %% [markdown]
# The softmax Hessian is singular along the ones vector, so it is regularised
# first. The softmax variant also keeps every column orthogonal to the ones
# direction, which is the direction that does not change a probability vector.

# %%
Hs = hessian_at(parse_link("softmax"), rng.normal(size=8))
Ms = regularize(Hs, 1e-6)
f = generalized_qr_softmax(A, Ms)
ones = np.ones(8)
print("|Q^T M_eps 1| =", np.linalg.norm(f.Q.T @ Ms.dense() @ ones))
print("|Q^T H 1|     =", np.linalg.norm(f.Q.T @ Hs.dense() @ ones))
print("A recovered up to ones shifts:", np.allclose(f.Q @ f.R + np.outer(ones, f.shift), A))
