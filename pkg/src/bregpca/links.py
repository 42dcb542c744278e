"""Transfer functions and the Bregman geometry they induce.

A transfer function ``f`` is the gradient of a strictly convex potential
``F`` on the pre-activation (primal) space. Its inverse ``f*`` is the
gradient of the convex conjugate ``F*`` on the post-activation (dual)
space. All functions here operate on the last axis, so a batch of points
is an ``(n, d)`` array and scalar-valued functions return shape ``(n,)``.

Additive constants are fixed by ``F(0) = 0`` for the elementwise links and
``F = logsumexp`` for softmax. Divergences do not depend on this choice.
"""

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit, logsumexp, softmax, xlogy

from .errors import ConfigError, DomainError
from .metric import Metric

KINDS = ("identity", "leaky_relu", "sigmoid", "tanh", "softmax")
CLIP_EPSILON = 1e-12
# tolerance on sum(x) == 1 when accepting a softmax dual point
SIMPLEX_ATOL = 1e-8

_SPEC_RE = re.compile(r"^leaky-relu:([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)$")


@dataclass(frozen=True)
class LinkFunction:
    """A named strictly increasing transfer function.

    ``beta`` is the negative-branch slope of ``leaky_relu`` and must lie in
    (0, 1). ``dim`` optionally pins the dimension; ``None`` accepts any.
    """

    kind: str
    beta: float | None = None
    dim: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown link kind {self.kind!r}")
        if self.kind == "leaky_relu":
            if self.beta is None or not (0.0 < self.beta < 1.0):
                raise ConfigError(f"leaky_relu needs 0 < beta < 1, got {self.beta!r}")
        elif self.beta is not None:
            raise ConfigError(f"{self.kind} takes no beta")
        if self.dim is not None and self.dim < 1:
            raise ConfigError("dim must be positive")

    @property
    def elementwise(self):
        return self.kind != "softmax"

    @property
    def spec(self):
        if self.kind == "leaky_relu":
            return f"leaky-relu:{self.beta!r}"
        return self.kind

    def __str__(self):
        return self.spec


def parse_link(spec, dim=None):
    """Parse a link string such as ``"sigmoid"`` or ``"leaky-relu:0.01"``."""
    if spec in ("identity", "sigmoid", "tanh", "softmax"):
        return LinkFunction(spec, dim=dim)
    match = _SPEC_RE.match(spec) if isinstance(spec, str) else None
    if match is None:
        raise ConfigError(f"malformed link specification {spec!r}")
    return LinkFunction("leaky_relu", beta=float(match.group(1)), dim=dim)


def _as_primal(link, u):
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise DomainError("non-finite pre-activation input")
    if link.dim is not None and u.shape[-1] != link.dim:
        raise DomainError(f"expected dimension {link.dim}, got {u.shape[-1]}")
    return u


def _as_dual(link, x, clip=False):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("non-finite post-activation input")
    if link.dim is not None and x.shape[-1] != link.dim:
        raise DomainError(f"expected dimension {link.dim}, got {x.shape[-1]}")
    kind = link.kind
    if kind == "sigmoid":
        if x.size and (x.min() < 0.0 or x.max() > 1.0):
            raise DomainError("sigmoid outputs must lie in [0, 1]")
        if clip:
            x = np.clip(x, CLIP_EPSILON, 1.0 - CLIP_EPSILON)
    elif kind == "tanh":
        if x.size and (x.min() < -1.0 or x.max() > 1.0):
            raise DomainError("tanh outputs must lie in [-1, 1]")
        if clip:
            x = np.clip(x, -1.0 + CLIP_EPSILON, 1.0 - CLIP_EPSILON)
    elif kind == "softmax":
        if x.size and (x.min() < 0.0 or np.abs(x.sum(axis=-1) - 1.0).max() > SIMPLEX_ATOL):
            raise DomainError("softmax outputs must be probability vectors")
        if clip:
            x = np.maximum(x, CLIP_EPSILON)
            x = x / x.sum(axis=-1, keepdims=True)
    return x


def _leaky(u, beta):
    return np.where(u >= 0.0, u, beta * u)


def apply_link(link, u):
    """Transfer function f(u)."""
    u = _as_primal(link, u)
    kind = link.kind
    if kind == "identity":
        return u.copy()
    if kind == "leaky_relu":
        return _leaky(u, link.beta)
    if kind == "sigmoid":
        return expit(u)
    if kind == "tanh":
        return np.tanh(u)
    return softmax(u, axis=-1)


def apply_inverse_link(link, x):
    """Inverse transfer function f*(x).

    Boundary points of the sigmoid, tanh and softmax ranges are clipped to
    the interior first. Softmax returns the zero-sum representative.
    """
    x = _as_dual(link, x, clip=True)
    kind = link.kind
    if kind == "identity":
        return x.copy()
    if kind == "leaky_relu":
        return _leaky(x, 1.0 / link.beta)
    if kind == "sigmoid":
        return logit(x)
    if kind == "tanh":
        return np.arctanh(x)
    z = np.log(x)
    return z - z.mean(axis=-1, keepdims=True)


def _log_cosh(u):
    a = np.abs(u)
    return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


def potential(link, u):
    """Convex potential F(u), summed over the last axis."""
    u = _as_primal(link, u)
    kind = link.kind
    if kind == "identity":
        return 0.5 * np.sum(u * u, axis=-1)
    if kind == "leaky_relu":
        return 0.5 * np.sum(u * _leaky(u, link.beta), axis=-1)
    if kind == "sigmoid":
        # softplus shifted so that F(0) = 0
        return np.sum(np.logaddexp(0.0, u) - math.log(2.0), axis=-1)
    if kind == "tanh":
        return np.sum(_log_cosh(u), axis=-1)
    return logsumexp(u, axis=-1)


def conjugate_potential(link, x):
    """Convex conjugate F*(x), summed over the last axis."""
    x = _as_dual(link, x)
    kind = link.kind
    if kind == "identity":
        return 0.5 * np.sum(x * x, axis=-1)
    if kind == "leaky_relu":
        return 0.5 * np.sum(x * _leaky(x, 1.0 / link.beta), axis=-1)
    if kind == "sigmoid":
        return np.sum(xlogy(x, x) + xlogy(1.0 - x, 1.0 - x) + math.log(2.0), axis=-1)
    if kind == "tanh":
        return 0.5 * np.sum(xlogy(1.0 + x, 1.0 + x) + xlogy(1.0 - x, 1.0 - x), axis=-1)
    return np.sum(xlogy(x, x), axis=-1)


def bregman_divergence(link, u, v):
    """D_F(u, v) = F(u) - F(v) - f(v).(u - v) on the primal space."""
    u = _as_primal(link, u)
    v = _as_primal(link, v)
    return potential(link, u) - potential(link, v) - np.sum(apply_link(link, v) * (u - v), axis=-1)


def dual_divergence(link, x, y):
    """D_{F*}(x, y) on the dual (post-activation) space.

    Closed forms are used where they avoid cancellation; for softmax this is
    the generalized KL divergence with 0 log 0 = 0.
    """
    x = _as_dual(link, x)
    y = _as_dual(link, y)
    kind = link.kind
    with np.errstate(divide="ignore"):
        if kind == "identity":
            diff = x - y
            return 0.5 * np.sum(diff * diff, axis=-1)
        if kind == "leaky_relu":
            cx = 0.5 * x * _leaky(x, 1.0 / link.beta)
            cy = 0.5 * y * _leaky(y, 1.0 / link.beta)
            return np.sum(cx - cy - _leaky(y, 1.0 / link.beta) * (x - y), axis=-1)
        if kind == "sigmoid":
            terms = xlogy(x, x) - xlogy(x, y) + xlogy(1.0 - x, 1.0 - x) - xlogy(1.0 - x, 1.0 - y)
            return np.sum(terms, axis=-1)
        if kind == "tanh":
            p, q = 1.0 + x, 1.0 - x
            terms = xlogy(p, p) - xlogy(p, 1.0 + y) + xlogy(q, q) - xlogy(q, 1.0 - y)
            return 0.5 * np.sum(terms, axis=-1)
        return np.sum(xlogy(x, x) - xlogy(x, y) - x + y, axis=-1)


def derivative(link, u):
    """Elementwise derivative f'(u); leaky_relu uses slope 1 at exactly 0."""
    u = _as_primal(link, u)
    kind = link.kind
    if kind == "identity":
        return np.ones_like(u)
    if kind == "leaky_relu":
        return np.where(u >= 0.0, 1.0, link.beta)
    if kind == "sigmoid":
        s = expit(u)
        return s * (1.0 - s)
    if kind == "tanh":
        t = np.tanh(u)
        return 1.0 - t * t
    raise ConfigError("softmax has no elementwise derivative; use hessian_at")


def hessian_at(link, m):
    """Hessian of F at a single point ``m``, as a Metric.

    Elementwise links give a diagonal metric. Softmax gives the dense
    ``diag(p) - p p^T``, which is singular along the all-ones direction.
    """
    m = _as_primal(link, m)
    if m.ndim != 1:
        raise ConfigError("hessian_at expects a single point")
    if link.elementwise:
        return Metric.diagonal(derivative(link, m))
    p = softmax(m)
    return Metric.full(np.diag(p) - np.outer(p, p))
