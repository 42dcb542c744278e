"""Matrix files, model bundles and metrics documents.

bmat layout (all little-endian)::

    bytes 0-3    b"BMAT"
    bytes 4-7    uint32 version (= 1)
    bytes 8-15   uint64 rows
    bytes 16-23  uint64 cols
    bytes 24-    rows * cols float64 values, row-major

CSV files hold comma-separated decimal floats, one row per line, with an
optional first line starting with ``#``.

A model bundle is a directory holding ``manifest`` (``key=value`` lines),
``m.bmat`` (1 x d dual mean) and ``V.bmat`` (d x k directions).
"""

import logging
import sys
import struct
from pathlib import Path

import numpy as np

from .bpca import BpcaModel, metric_at
from .errors import BundleError, ConfigError, FormatError
from .links import parse_link

logger = logging.getLogger(__name__)

MAGIC = b"BMAT"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")
BUNDLE_FORMAT_VERSION = 1
CONJUGACY_WARN_TOL = 1e-6


def _format_of(path, fmt):
    if fmt is not None:
        if fmt not in ("bmat", "csv"):
            raise ConfigError(f"unknown matrix format {fmt!r}")
        return fmt
    return "csv" if str(path).lower().endswith(".csv") else "bmat"


def _check_finite(X, path):
    if not np.all(np.isfinite(X)):
        raise FormatError(f"{path}: non-finite values are not allowed")
    return X


def read_matrix(path, fmt=None):
    """Read a 2-D float64 array from a bmat or csv file."""
    fmt = _format_of(path, fmt)
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if fmt == "csv":
        return _parse_csv(data.decode("utf-8", errors="replace"), path)

    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated bmat header")
    magic, version, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic bytes {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported bmat version {version}")
    expected = _HEADER.size + 8 * rows * cols
    if len(data) != expected:
        raise FormatError(f"{path}: payload is {len(data)} bytes, header implies {expected}")
    X = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(rows, cols)
    return _check_finite(X.astype(np.float64), path)


def _parse_csv(text, path):
    lines = text.splitlines()
    if lines and lines[0].startswith("#"):
        lines = lines[1:]
    rows = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        return np.zeros((0, 0))
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise FormatError(f"{path}: ragged csv rows")
    return _check_finite(np.array(rows, dtype=float), path)


def write_matrix(X, path, fmt=None):
    """Write a 2-D array (1-D arrays become a single row)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ConfigError("write_matrix expects a 1-D or 2-D array")
    fmt = _format_of(path, fmt)
    try:
        if fmt == "csv":
            with open(path, "w") as fh:
                for row in X:
                    fh.write(",".join(repr(float(v)) for v in row) + "\n")
        else:
            with open(path, "wb") as fh:
                fh.write(_HEADER.pack(MAGIC, VERSION, X.shape[0], X.shape[1]))
                fh.write(np.ascontiguousarray(X, dtype="<f8").tobytes())
    except OSError as exc:
        raise FormatError(f"cannot write {path}: {exc}") from exc


def save_model(model, directory):
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise FormatError(f"cannot create {directory}: {exc}") from exc
    manifest = {
        "format_version": BUNDLE_FORMAT_VERSION,
        "link": model.link.spec,
        "d": model.d,
        "k": model.k,
        "gauge": model.gauge,
    }
    write_matrix(model.mean[None, :], directory / "m.bmat")
    write_matrix(model.V, directory / "V.bmat")
    (directory / "manifest").write_text("".join(f"{k}={v}\n" for k, v in manifest.items()))


def _read_manifest(path):
    try:
        text = path.read_text()
    except OSError as exc:
        raise BundleError(f"cannot read manifest {path}: {exc}") from exc
    entries = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise BundleError(f"{path}: malformed manifest line {line!r}")
        entries[key.strip()] = value.strip()
    return entries


def load_model(directory):
    """Load a bundle written by :func:`save_model`, validating its invariants."""
    directory = Path(directory)
    manifest = _read_manifest(directory / "manifest")
    try:
        version = int(manifest["format_version"])
        d, k = int(manifest["d"]), int(manifest["k"])
        spec, gauge = manifest["link"], manifest["gauge"]
    except (KeyError, ValueError) as exc:
        raise BundleError(f"{directory}: incomplete manifest ({exc})") from exc
    if version != BUNDLE_FORMAT_VERSION:
        raise BundleError(f"{directory}: unsupported bundle version {version}")
    try:
        link = parse_link(spec)
    except ConfigError as exc:
        raise BundleError(f"{directory}: {exc}") from exc

    m = read_matrix(directory / "m.bmat", "bmat")
    V = read_matrix(directory / "V.bmat", "bmat")
    if m.shape != (1, d) or V.shape != (d, k):
        raise BundleError(
            f"{directory}: manifest says d={d}, k={k} but m is {m.shape} and V is {V.shape}"
        )
    model = BpcaModel(link, m[0], V, metric_at(link, m[0]))
    if gauge != model.gauge:
        raise BundleError(f"{directory}: gauge {gauge!r} does not match link {spec}")
    err = model.conjugacy_error()
    if err > CONJUGACY_WARN_TOL:
        logger.warning("%s: directions deviate from conjugacy by %.3g", directory, err)
    return model


def format_metrics(metrics):
    """Render a metrics mapping as ``key=value`` lines.

    Floats use shortest round-trip repr, booleans are ``true``/``false`` and
    sequences are comma-separated.
    """
    lines = []
    for key, value in metrics.items():
        lines.append(f"{key}={_format_value(value)}")
    return "\n".join(lines) + "\n"


def _format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (list, tuple, np.ndarray)):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def parse_metrics(text):
    """Inverse of :func:`format_metrics` (values stay strings)."""
    out = {}
    for line in text.splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            out[key] = value
    return out


def write_metrics(metrics, path):
    text = format_metrics(metrics)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
