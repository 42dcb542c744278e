"""Symmetric positive (semi)definite metrics in diagonal or dense form."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SingularMetricError

# relative eigenvalue floor below which a metric counts as singular
SINGULAR_RTOL = 1e-13


@dataclass(frozen=True, eq=False)
class Metric:
    """A Riemannian metric on R^d.

    ``values`` is either a length-d vector (diagonal metric) or a d x d
    symmetric matrix (full metric).
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim not in (1, 2) or (v.ndim == 2 and v.shape[0] != v.shape[1]):
            raise ConfigError(f"metric must be a vector or square matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ConfigError("metric has non-finite entries")
        if v.ndim == 2:
            scale = max(np.abs(v).max(initial=0.0), 1.0)
            if np.abs(v - v.T).max(initial=0.0) > 1e-12 * scale:
                raise ConfigError("full metric is not symmetric")
            v = 0.5 * (v + v.T)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def diagonal(cls, entries):
        return cls(np.asarray(entries, dtype=float).ravel())

    @classmethod
    def full(cls, matrix):
        return cls(np.atleast_2d(np.asarray(matrix, dtype=float)))

    @classmethod
    def identity(cls, dim):
        return cls(np.ones(dim))

    @property
    def is_diagonal(self):
        return self.values.ndim == 1

    @property
    def dim(self):
        return self.values.shape[0]

    def dense(self):
        if self.is_diagonal:
            return np.diag(self.values)
        return self.values.copy()

    def apply(self, A):
        """Return ``M @ A`` for a vector or matrix ``A``."""
        A = np.asarray(A, dtype=float)
        if self.is_diagonal:
            return self.values.reshape((-1,) + (1,) * (A.ndim - 1)) * A
        return self.values @ A

    def trace(self):
        return float(self.values.sum() if self.is_diagonal else np.trace(self.values))

    def __repr__(self):
        kind = "Diagonal" if self.is_diagonal else "Full"
        return f"Metric.{kind.lower()}({self.values.tolist()!r})"


def _eig(M):
    w, U = np.linalg.eigh(M.values)
    lmax = max(w.max(), 0.0)
    if w.min() <= SINGULAR_RTOL * lmax or lmax == 0.0:
        raise SingularMetricError(
            f"metric is singular or indefinite (eigenvalues in [{w.min():.3g}, {lmax:.3g}]);"
            " regularize it first"
        )
    return np.maximum(w, 0.0), U


def _check_diag(M):
    d = M.values
    if d.min() <= SINGULAR_RTOL * max(d.max(), 0.0) or d.max() <= 0.0:
        raise SingularMetricError("diagonal metric has non-positive entries")
    return d


def metric_sqrt(M):
    """Symmetric square root S with S @ S = M.

    Diagonal metrics return the vector of elementwise roots; full metrics
    return a dense matrix built from the eigendecomposition.
    """
    if M.is_diagonal:
        return np.sqrt(_check_diag(M))
    w, U = _eig(M)
    return (U * np.sqrt(w)) @ U.T


def metric_inv_sqrt(M):
    """Symmetric inverse square root, so that S @ M @ S = I."""
    if M.is_diagonal:
        return 1.0 / np.sqrt(_check_diag(M))
    w, U = _eig(M)
    return (U / np.sqrt(w)) @ U.T


def regularize(M, eps_rel=1e-6):
    """Shift every eigenvalue of ``M`` by ``eps_rel * trace(M) / d``."""
    if eps_rel <= 0:
        raise ConfigError("eps_rel must be positive")
    shift = eps_rel * M.trace() / M.dim
    if M.is_diagonal:
        return Metric(M.values + shift)
    return Metric(M.values + shift * np.eye(M.dim))
