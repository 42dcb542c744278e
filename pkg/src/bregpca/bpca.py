"""Bregman PCA with a dual mean.

Each data point ``x`` lives in the post-activation (dual) space of a link
``f`` and is approximated by ``f(m + V c)``, where ``m`` is the dual mean,
the columns of ``V`` are principal directions, and ``c`` holds ``k``
compression coefficients. The loss is the dual Bregman divergence
``D_{F*}(x, f(m + V c))``.

Because ``D_{F*}(x, f(u)) = D_F(u, f*(x))``, the gradient in ``u`` is simply
``f(u) - x``. The coefficient and direction gradients are therefore
``V^T (x_hat - x)`` and ``(x_hat - x) c^T``, with no Jacobian of ``f``.
Directions are optimized unconstrained and projected onto the
``H_F(m)``-conjugate Stiefel manifold once at the end; the triangular factor
of that projection is absorbed into the coefficients, so reconstructions do
not change.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import links
from .errors import ConfigError, DomainError, FitError
from .gqr import generalized_qr, generalized_qr_softmax
from .metric import Metric, regularize

logger = logging.getLogger(__name__)

SOFTMAX_EPS_REL = 1e-6
DIVERGENCE_FACTOR = 1e6
STATIONARITY_RTOL = 1e-6


@dataclass(frozen=True)
class FitOptions:
    """Optimizer settings.

    ``lr_dirs=None`` means ``0.01 / n_rows`` (per batch when streaming), which
    keeps the direction step independent of dataset size. ``batch_size`` and
    ``ema_decay`` only affect streaming fits.
    """

    lr_coeff: float = 0.1
    lr_dirs: float | None = None
    momentum: float = 0.9
    max_epochs: int = 500
    tol: float = 1e-7
    seed: int = 0
    batch_size: int | str = "full"
    ema_decay: float = 0.99

    def __post_init__(self):
        if not self.lr_coeff > 0:
            raise ConfigError("lr_coeff must be positive")
        if self.lr_dirs is not None and not self.lr_dirs > 0:
            raise ConfigError("lr_dirs must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must lie in [0, 1)")
        if int(self.max_epochs) != self.max_epochs or self.max_epochs < 1:
            raise ConfigError("max_epochs must be a positive integer")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.batch_size != "full" and (
            isinstance(self.batch_size, bool)
            or not isinstance(self.batch_size, (int, np.integer))
            or self.batch_size < 1
        ):
            raise ConfigError("batch_size must be a positive integer or 'full'")
        if not 0.0 < self.ema_decay < 1.0:
            raise ConfigError("ema_decay must lie in (0, 1)")

    def dirs_rate(self, n_rows):
        return self.lr_dirs if self.lr_dirs is not None else 0.01 / n_rows


@dataclass
class FitReport:
    loss_history: list = field(default_factory=list)
    epochs_run: int = 0
    converged: bool = False
    final_loss: float = float("nan")
    # max |decode difference| across the terminal projection
    projection_residual: float = 0.0

    def as_dict(self):
        return {
            "final_loss": self.final_loss,
            "epochs_run": self.epochs_run,
            "converged": self.converged,
            "projection_residual": self.projection_residual,
            "loss_history": list(self.loss_history),
        }


@dataclass(frozen=True, eq=False)
class BpcaModel:
    """A fitted model: link, dual mean ``mean`` (length d) and ``V`` (d x k).

    ``metric`` is the Hessian of the potential at the mean; for softmax it is
    the regularized Hessian that the terminal projection used.
    """

    link: links.LinkFunction
    mean: np.ndarray
    V: np.ndarray
    metric: Metric

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        V = np.array(self.V, dtype=float)
        if mean.ndim != 1 or V.ndim != 2 or V.shape[0] != mean.shape[0]:
            raise ConfigError(f"inconsistent shapes: mean {mean.shape}, V {V.shape}")
        mean.setflags(write=False)
        V.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "V", V)

    @property
    def d(self):
        return self.V.shape[0]

    @property
    def k(self):
        return self.V.shape[1]

    @property
    def gauge(self):
        return "zero-sum" if self.link.kind == "softmax" else "none"

    def conjugacy_error(self):
        """Frobenius norm of ``V^T M V - I``."""
        G = self.V.T @ self.metric.apply(self.V)
        return float(np.linalg.norm(G - np.eye(self.k)))

    def decode(self, C):
        return decode(self, C)

    def encode(self, X, opts=None):
        return encode(self, X, opts)


def metric_at(link, m):
    """Metric used for conjugacy at mean ``m`` (regularized for softmax)."""
    H = links.hessian_at(link, m)
    if link.kind == "softmax":
        return regularize(H, SOFTMAX_EPS_REL)
    return H


def _check_data(link, X, min_rows=1):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DomainError(f"data must be a 2-D array, got shape {X.shape}")
    if X.shape[0] < min_rows:
        raise DomainError(f"need at least {min_rows} row(s), got {X.shape[0]}")
    links._as_dual(link, X)
    return X


def dual_mean(link, X):
    """The constant code minimizing total dual loss: ``f*(mean of rows)``."""
    X = _check_data(link, X)
    return links.apply_inverse_link(link, X.mean(axis=0))


def reconstruct(link, m, V, C):
    return links.apply_link(link, m + C @ V.T)


def total_loss(link, X, m, V, C):
    return float(np.sum(links.dual_divergence(link, X, reconstruct(link, m, V, C))))


def compression_loss(model, X, C):
    """Total dual Bregman divergence between rows of X and their reconstructions."""
    X = _check_data(model.link, X)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.shape != (X.shape[0], model.k):
        raise ConfigError(f"coefficients have shape {C.shape}, expected {(X.shape[0], model.k)}")
    return total_loss(model.link, X, model.mean, model.V, C)


def coefficient_gradient(link, X, m, V, C):
    """Gradient of the total loss with respect to each row of C."""
    return (reconstruct(link, m, V, C) - X) @ V


def direction_gradient(link, X, m, V, C):
    """Gradient of the total loss with respect to V."""
    return (reconstruct(link, m, V, C) - X).T @ C


def warm_start(link, m, metric, V, X):
    """Initial codes: the H-weighted least-squares fit of ``f*(x) - m`` by ``V c``.

    Equals ``V^T H (f*(x) - m)`` when V is H-conjugate, and is exact for the
    identity link. The Gram correction keeps codes on the right scale while
    V is still unconstrained.
    """
    Z = links.apply_inverse_link(link, X) - m
    HV = metric.apply(V)
    return np.linalg.solve(V.T @ HV, (Z @ HV).T).T


def _init_directions(rng, d, k):
    return rng.normal(scale=1.0 / np.sqrt(d), size=(d, k))


def _check_k(link, k, d):
    upper = d - 1 if link.kind == "softmax" else d
    if int(k) != k or not 1 <= k <= upper:
        raise ConfigError(f"components must be in [1, {upper}] for {link.spec} with d={d}, got {k}")


def project_directions(link, m, V, C, metric=None):
    """Map unconstrained (V, C) onto conjugate directions with equal reconstructions.

    Returns ``(V_new, C_new, metric)`` where ``V_new^T metric V_new = I`` and the
    rows of ``C_new`` are ``T c_i`` for the triangular factor T.
    """
    if metric is None:
        metric = metric_at(link, m)
    if link.kind == "softmax":
        Q, R = generalized_qr_softmax(V, metric)
    else:
        Q, R = generalized_qr(V, metric)
    return Q, C @ R.T, metric


def _guard(loss, initial, epoch):
    if not np.isfinite(loss):
        raise FitError(f"loss became non-finite at epoch {epoch}", epoch)
    if initial > 0 and loss > DIVERGENCE_FACTOR * initial:
        raise FitError(
            f"loss diverged at epoch {epoch} ({loss:.3g} vs initial {initial:.3g});"
            " lower the learning rates",
            epoch,
        )


def _rel_change(prev, cur):
    if prev == cur:
        return 0.0
    return abs(prev - cur) / max(abs(prev), np.finfo(float).tiny)


def descend(X, link, k, opts=None):
    """Run the alternating heavy-ball updates without the terminal projection.

    Returns ``(m, V, C, report)`` with unconstrained directions ``V``.
    """
    opts = opts or FitOptions()
    X = _check_data(link, X, min_rows=2)
    n, d = X.shape
    _check_k(link, k, d)

    m = dual_mean(link, X)
    metric = metric_at(link, m)
    rng = np.random.default_rng(opts.seed)
    V = _init_directions(rng, d, k)
    C = warm_start(link, m, metric, V, X)

    lr_c, lr_v, mu = opts.lr_coeff, opts.dirs_rate(n), opts.momentum
    vel_c = np.zeros_like(C)
    vel_v = np.zeros_like(V)

    X_hat = reconstruct(link, m, V, C)
    loss = float(np.sum(links.dual_divergence(link, X, X_hat)))
    initial = loss
    _guard(loss, initial, 0)
    report = FitReport()

    for epoch in range(1, opts.max_epochs + 1):
        resid = X_hat - X
        vel_c = mu * vel_c + resid @ V
        C = C - lr_c * vel_c
        # direction step pairs the residuals above with the updated codes
        vel_v = mu * vel_v + resid.T @ C
        V = V - lr_v * vel_v

        X_hat = reconstruct(link, m, V, C)
        prev, loss = loss, float(np.sum(links.dual_divergence(link, X, X_hat)))
        _guard(loss, initial, epoch)
        report.loss_history.append(loss)
        report.epochs_run = epoch
        if _rel_change(prev, loss) < opts.tol:
            report.converged = True
            break

    report.final_loss = loss
    logger.debug("descend: %d epochs, loss %.6g -> %.6g", report.epochs_run, initial, loss)
    return m, V, C, report


def fit(X, link, k, opts=None):
    """Fit a Bregman PCA model to the rows of ``X``.

    Returns ``(model, C, report)`` where row i of ``C`` encodes row i of X.
    """
    if isinstance(link, str):
        link = links.parse_link(link)
    m, V_raw, C_raw, report = descend(X, link, k, opts)
    V, C, metric = project_directions(link, m, V_raw, C_raw)
    before = reconstruct(link, m, V_raw, C_raw)
    after = reconstruct(link, m, V, C)
    report.projection_residual = float(np.abs(before - after).max(initial=0.0))
    return BpcaModel(link, m, V, metric), C, report


def minibatches(X, batch_size, passes, seed=0):
    """Yield shuffled row blocks of ``X`` for ``passes`` passes."""
    X = np.asarray(X, dtype=float)
    rng = np.random.default_rng(seed)
    for _ in range(passes):
        order = rng.permutation(X.shape[0])
        for start in range(0, X.shape[0], batch_size):
            yield X[order[start:start + batch_size]]


def fit_streaming(batches, link, k, opts=None, inner_steps=10):
    """Online fit over an iterable of row blocks.

    The arithmetic mean is tracked with a bias-corrected exponential moving
    average (weight ``ema_decay`` on the past) and the dual mean is
    ``f*`` of that average. For each batch the codes start from the warm
    start, take ``inner_steps`` heavy-ball steps, then V takes one step.
    Returns ``(model, report)``; the loss history holds one entry per batch.
    """
    opts = opts or FitOptions()
    if isinstance(link, str):
        link = links.parse_link(link)
    if int(inner_steps) != inner_steps or inner_steps < 1:
        raise ConfigError("inner_steps must be a positive integer")
    rng = np.random.default_rng(opts.seed)
    lr_c, mu, decay = opts.lr_coeff, opts.momentum, opts.ema_decay

    V = vel_v = None
    ema_sum = ema_weight = 0.0
    initial = None
    report = FitReport()
    prev = None

    for t, B in enumerate(batches, start=1):
        B = _check_data(link, B)
        if V is None:
            d = B.shape[1]
            _check_k(link, k, d)
            V = _init_directions(rng, d, k)
            vel_v = np.zeros_like(V)
        elif B.shape[1] != V.shape[0]:
            raise DomainError(f"batch {t} has dimension {B.shape[1]}, expected {V.shape[0]}")

        ema_sum = decay * ema_sum + B.mean(axis=0)
        ema_weight = decay * ema_weight + 1.0
        m = links.apply_inverse_link(link, ema_sum / ema_weight)
        metric = metric_at(link, m)

        C = warm_start(link, m, metric, V, B)
        vel_c = np.zeros_like(C)
        for _ in range(inner_steps):
            X_hat = reconstruct(link, m, V, C)
            resid = X_hat - B
            vel_c = mu * vel_c + resid @ V
            C = C - lr_c * vel_c
        loss = float(np.sum(links.dual_divergence(link, B, X_hat)))
        if initial is None:
            initial = loss
        _guard(loss, initial, t)

        vel_v = mu * vel_v + resid.T @ C
        V = V - opts.dirs_rate(B.shape[0]) * vel_v

        report.loss_history.append(loss)
        report.epochs_run = t
        report.final_loss = loss
        report.converged = prev is not None and _rel_change(prev, loss) < opts.tol
        prev = loss

    if V is None:
        raise DomainError("no batches supplied")
    V, _, metric = project_directions(link, m, V, np.zeros((0, k)))
    return BpcaModel(link, m, V, metric), report


def encode(model, X, opts=None):
    """Codes minimizing ``D_{F*}(x, f(m + V c))`` with V held fixed.

    Accepts one point or a batch of rows. Heavy-ball descent starts from the
    warm start and stops once ``||V^T (f(m + V c) - x)|| <= 1e-6 (1 + ||x||)``
    for every row, or after ``opts.max_epochs`` steps.
    """
    opts = opts or FitOptions()
    link = model.link
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = _check_data(link, np.atleast_2d(X))
    if X.shape[1] != model.d:
        raise DomainError(f"data dimension {X.shape[1]} does not match model d={model.d}")
    m, V = model.mean, model.V

    C = warm_start(link, m, model.metric, V, X)
    vel = np.zeros_like(C)
    thresh = STATIONARITY_RTOL * (1.0 + np.linalg.norm(X, axis=1))
    for it in range(opts.max_epochs + 1):
        grad = (reconstruct(link, m, V, C) - X) @ V
        if not np.all(np.isfinite(grad)):
            raise FitError(f"encoding diverged at step {it}", it)
        if np.all(np.linalg.norm(grad, axis=1) <= thresh) or it == opts.max_epochs:
            break
        vel = opts.momentum * vel + grad
        C = C - opts.lr_coeff * vel
    gnorm = np.linalg.norm(grad, axis=1)
    if np.any(gnorm > thresh):
        logger.warning(
            "encode stopped after %d steps with max stationarity %.3g", opts.max_epochs, gnorm.max()
        )
    return C[0] if single else C


def decode(model, C):
    """Reconstruction ``f(m + V c)`` for one code or a batch of codes."""
    C = np.asarray(C, dtype=float)
    if C.shape[-1] != model.k:
        raise ConfigError(f"codes have length {C.shape[-1]}, expected {model.k}")
    return links.apply_link(model.link, model.mean + C @ model.V.T)
