"""Reference oracles and evaluation metrics.

``vanilla_pca_oracle`` is the closed-form Euclidean PCA used to validate the
identity-link fit. The remaining functions score reconstructions: average
KL on the simplex, top-1 accuracy through a fixed readout layer, and the
logit-space PCA baseline for softmax outputs.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from . import links
from .errors import ConfigError, DomainError

_SOFTMAX = links.LinkFunction("softmax")


@dataclass(frozen=True, eq=False)
class ReadoutLayer:
    """Final dense layer ``logits = x @ W + b`` with C >= 2 classes."""

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if W.shape[1] < 2 or b.shape != (W.shape[1],):
            raise ConfigError(f"readout shapes W {W.shape} and b {b.shape} are inconsistent")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ConfigError("readout layer has non-finite entries")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    @property
    def n_classes(self):
        return self.W.shape[1]

    def logits(self, X):
        return np.asarray(X, dtype=float) @ self.W + self.b


def vanilla_pca_oracle(X, k):
    """Arithmetic mean and top-k covariance eigenvectors of the rows of X.

    Eigenvectors come in descending eigenvalue order, each with its
    largest-magnitude entry made positive.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DomainError("need a 2-D dataset with at least two rows")
    d = X.shape[1]
    if int(k) != k or not 1 <= k <= d:
        raise ConfigError(f"k must be in [1, {d}], got {k}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / X.shape[0]
    w, U = np.linalg.eigh(cov)
    V = U[:, ::-1][:, :k]
    pivot = np.argmax(np.abs(V), axis=0)
    V = V * np.sign(V[pivot, np.arange(k)])
    return mean, V


def pca_reconstruct(X, k):
    """Rank-k Euclidean PCA reconstruction of the rows of X."""
    mean, V = vanilla_pca_oracle(X, k)
    return mean + (np.asarray(X, dtype=float) - mean) @ V @ V.T


def subspace_distance(V1, V2):
    """Frobenius distance between the orthogonal projectors onto span(V1), span(V2)."""
    V1 = np.asarray(V1, dtype=float)
    V2 = np.asarray(V2, dtype=float)
    if V1.shape != V2.shape:
        raise ConfigError(f"shape mismatch {V1.shape} vs {V2.shape}")
    k = V1.shape[1]
    for V in (V1, V2):
        if np.abs(V.T @ V - np.eye(k)).max() > 1e-6:
            raise ConfigError("subspace_distance needs orthonormal columns")
    return float(np.linalg.norm(V1 @ V1.T - V2 @ V2.T))


def _check_simplex(P, name):
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.min() < 0.0 or np.abs(P.sum(axis=1) - 1.0).max() > 1e-8:
        raise DomainError(f"{name} rows must lie on the probability simplex")
    return P


def avg_kl(P, P_hat):
    """Mean over rows of KL(p_i || p_hat_i)."""
    P = _check_simplex(P, "P")
    P_hat = _check_simplex(P_hat, "P_hat")
    if P.shape != P_hat.shape:
        raise ConfigError(f"shape mismatch {P.shape} vs {P_hat.shape}")
    return float(np.mean(links.dual_divergence(_SOFTMAX, P, P_hat)))


def readout_accuracy(X_hat, layer, labels):
    """Top-1 accuracy of ``argmax(X_hat @ W + b)``; ties go to the lowest class."""
    labels = np.asarray(labels).ravel()
    X_hat = np.atleast_2d(np.asarray(X_hat, dtype=float))
    if X_hat.shape[0] != labels.shape[0] or X_hat.shape[1] != layer.W.shape[0]:
        raise ConfigError("readout inputs have inconsistent shapes")
    if labels.size and (labels.min() < 0 or labels.max() >= layer.n_classes):
        raise DomainError(f"labels must lie in [0, {layer.n_classes})")
    if labels.size == 0:
        return float("nan")
    pred = np.argmax(layer.logits(X_hat), axis=1)
    return float(np.mean(pred == labels))


def logit_pca_baseline(P, k):
    """Softmax of the rank-k PCA reconstruction of zero-sum logits."""
    P = _check_simplex(P, "P")
    Z = links.apply_inverse_link(_SOFTMAX, P)
    return softmax(pca_reconstruct(Z, k), axis=1)
