"""Householder QR and its metric-conjugate generalization.

``generalized_qr`` orthonormalizes the columns of ``A`` under an SPD metric
``M``: it runs a Euclidean QR on ``sqrt(M) @ A`` and maps the orthonormal
factor back with ``M^{-1/2}``, giving ``A = Q R`` with ``Q^T M Q = I``.

The softmax variant prepends a column of ones before factoring. Because the
first Householder reflection maps the first column onto ``e_1``, the first
column of the conjugate factor is a multiple of the ones vector, and the
remaining columns are M-orthogonal to it.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RankError
from .metric import Metric, metric_inv_sqrt, metric_sqrt

RANK_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class QrFactors:
    """Thin QR factors.

    Attributes
    ----------
    Q : (m, n) array, conjugate under ``metric``.
    R : (n, n) upper-triangular array with non-negative diagonal.
    metric : Metric of dimension m.
    shift : (n,) array or None
        Only set by the softmax variant: ``A = Q @ R + outer(1, shift)``.
    """

    Q: np.ndarray
    R: np.ndarray
    metric: Metric
    shift: np.ndarray | None = None

    def __iter__(self):
        return iter((self.Q, self.R))


def _householder_vectors(A):
    """Reduce ``A`` in place to upper-triangular form; return reflectors."""
    m, n = A.shape
    vs = []
    for j in range(n):
        x = A[j:, j]
        normx = np.linalg.norm(x)
        v = x.copy()
        alpha = -normx if x[0] >= 0.0 else normx
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm > 0.0:
            v /= vnorm
            A[j:, j:] -= 2.0 * np.outer(v, v @ A[j:, j:])
        vs.append(v)
    return vs


def qr_householder(A):
    """Thin QR of ``A`` (m x n, n <= m) via Householder reflections.

    The factors are normalized so that ``R`` has a non-negative diagonal.
    Raises RankError when a pivot falls below ``1e-12 * ||A||_F``.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2:
        raise ConfigError("qr_householder expects a 2-D array")
    m, n = A.shape
    if n > m:
        raise ConfigError(f"need n <= m, got {m}x{n}")
    if not np.all(np.isfinite(A)):
        raise ConfigError("matrix has non-finite entries")
    scale = np.linalg.norm(A)

    work = A.copy()
    vs = _householder_vectors(work)
    R = np.triu(work[:n, :])

    pivots = np.abs(np.diag(R))
    if n and (scale == 0.0 or pivots.min() < RANK_RTOL * scale):
        j = int(np.argmin(pivots))
        raise RankError(f"matrix is rank deficient (pivot {j} = {pivots[j]:.3g})")

    # accumulate Q = P_1 ... P_n applied to the first n columns of I
    Q = np.eye(m, n)
    for j in range(n - 1, -1, -1):
        v = vs[j]
        Q[j:, :] -= 2.0 * np.outer(v, v @ Q[j:, :])

    signs = np.where(np.diag(R) < 0.0, -1.0, 1.0)
    Q *= signs
    R *= signs[:, None]
    return QrFactors(Q, R, Metric.identity(m))


def _as_metric(M, m):
    if not isinstance(M, Metric):
        M = Metric(np.asarray(M, dtype=float))
    if M.dim != m:
        raise ConfigError(f"metric dimension {M.dim} does not match {m} rows")
    return M


def generalized_qr(A, M):
    """Factor ``A = Q R`` with ``Q^T M Q = I`` for an SPD metric ``M``."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ConfigError("generalized_qr expects a 2-D array")
    M = _as_metric(M, A.shape[0])
    S = metric_sqrt(M)
    S_inv = metric_inv_sqrt(M)
    if M.is_diagonal:
        Qt, R = qr_householder(S[:, None] * A)
        Q = S_inv[:, None] * Qt
    else:
        Qt, R = qr_householder(S @ A)
        Q = S_inv @ Qt
    return QrFactors(Q, R, M)


def generalized_qr_softmax(A, M):
    """Generalized QR with the all-ones direction factored out.

    Factors ``[1, A]`` and drops the first column of Q and the first row and
    column of R. The result satisfies ``A = Q R + outer(1, shift)``,
    ``Q^T M Q = I`` and ``Q^T M 1 = 0``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ConfigError("generalized_qr_softmax expects a 2-D array")
    m, n = A.shape
    if n >= m:
        raise ConfigError(f"softmax variant needs n < m, got {m}x{n}")
    M = _as_metric(M, m)
    try:
        full = generalized_qr(np.hstack([np.ones((m, 1)), A]), M)
    except RankError as exc:
        raise RankError(f"ones vector lies in the column span of A ({exc})") from exc
    R_full = full.R
    shift = R_full[0, 1:] / R_full[0, 0]
    return QrFactors(full.Q[:, 1:].copy(), R_full[1:, 1:].copy(), M, shift)
