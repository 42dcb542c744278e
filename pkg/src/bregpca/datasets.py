"""Synthetic datasets used by the tests, the acceptance suite and the demos."""

import numpy as np
from scipy.special import softmax

from .links import LinkFunction, apply_link


def planted_gaussian(n=200, d=16, k=4, variances=(16.0, 8.0, 4.0, 2.0), noise=0.01, seed=0):
    """Rows ``mu + B z + noise`` with ``B`` a random orthonormal d x k basis.

    ``z`` has independent coordinates with the given variances, so the top-k
    covariance eigenvalues are separated by the ratios between them.
    Returns ``(X, B)``.
    """
    if len(variances) != k:
        raise ValueError("need one variance per planted component")
    rng = np.random.default_rng(seed)
    B = np.linalg.qr(rng.normal(size=(d, k)))[0]
    Z = rng.normal(size=(n, k)) * np.sqrt(np.asarray(variances, dtype=float))
    X = Z @ B.T + noise * rng.normal(size=(n, d)) + rng.normal(size=d)
    return X, B


def clustered_simplex(n=500, d=10, clusters=5, spread=3.0, noise=1.0, seed=0):
    """Probability vectors from softmax of clustered logits.

    Cluster centres are Gaussian with scale ``spread``; each row adds
    isotropic Gaussian noise of scale ``noise``. Returns ``(P, labels)``.
    """
    rng = np.random.default_rng(seed)
    centres = spread * rng.normal(size=(clusters, d))
    labels = rng.integers(clusters, size=n)
    logits = centres[labels] + noise * rng.normal(size=(n, d))
    return softmax(logits, axis=1), labels


def leaky_teacher(
    n=600, d=64, classes=3, rank=4, beta=0.01, centre_scale=1.5, factor_scale=0.3, noise=0.05, seed=0
):
    """Post-activations of a synthetic leaky-ReLU layer plus a random readout.

    The readout ``(W, b)`` is drawn first. Each class gets a pre-activation
    centre whose activation the readout assigns to that class with a clear
    margin; rows add a rank-``rank`` Gaussian factor of scale
    ``factor_scale`` and isotropic noise. Labels are the readout's top-1
    predictions on the clean rows, so the teacher is exact by construction.

    Returns ``(X, W, b, labels)`` with X of shape (n, d).
    """
    rng = np.random.default_rng(seed)
    leaky = LinkFunction("leaky_relu", beta=beta)
    W = rng.normal(size=(d, classes)) / np.sqrt(d)
    b = np.zeros(classes)
    centres = np.empty((classes, d))
    for c in range(classes):
        while True:
            cand = centre_scale * rng.normal(size=d)
            logits = apply_link(leaky, cand) @ W + b
            others = np.delete(logits, c)
            if logits[c] - others.max() > 0.5 * centre_scale:
                centres[c] = cand
                break
    members = rng.integers(classes, size=n)
    factors = factor_scale * rng.normal(size=(rank, d))
    pre = centres[members] + rng.normal(size=(n, rank)) @ factors + noise * rng.normal(size=(n, d))
    X = apply_link(leaky, pre)
    labels = np.argmax(X @ W + b, axis=1)
    return X, W, b, labels
