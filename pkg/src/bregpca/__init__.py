"""Bregman PCA with a dual mean, generalized QR, and fixed-layer export."""

from .bpca import (
    BpcaModel,
    FitOptions,
    FitReport,
    compression_loss,
    decode,
    dual_mean,
    encode,
    fit,
    fit_streaming,
)
from .errors import (
    BregpcaError,
    BundleError,
    ConfigError,
    DomainError,
    FitError,
    FormatError,
    NumericalError,
    RankError,
    SingularMetricError,
)
from .gqr import QrFactors, generalized_qr, generalized_qr_softmax, qr_householder
from .links import LinkFunction, parse_link
from .metric import Metric, metric_inv_sqrt, metric_sqrt, regularize

__version__ = "0.1.0"
