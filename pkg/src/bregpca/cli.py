"""Command-line interface: ``bregpca {fit,encode,decode,eval,mean,gqr}``.

Exit codes: 0 success, 2 usage or configuration error, 3 data/domain or
file-format error, 4 numerical failure (divergence, rank, singular metric).
"""

import argparse
import logging
import sys

import numpy as np

from . import bpca, evalkit, gqr, io
from .errors import BregpcaError, ConfigError
from .links import parse_link
from .metric import Metric

logger = logging.getLogger("bregpca")


def _fmt(v):
    return np.format_float_positional(float(v), unique=True, trim="-")


def _add_opts(p, fit=True):
    p.add_argument("--lr-coeff", type=float, default=0.1)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--max-epochs", type=int, default=500)
    if fit:
        p.add_argument("--lr-dirs", type=float, default=None)
        p.add_argument("--tol", type=float, default=1e-7)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--batch-size", default="full")
        p.add_argument("--ema-decay", type=float, default=0.99)


def _options(args):
    kw = dict(lr_coeff=args.lr_coeff, momentum=args.momentum, max_epochs=args.max_epochs)
    if hasattr(args, "lr_dirs"):
        batch = args.batch_size
        if batch != "full":
            try:
                batch = int(batch)
            except ValueError:
                raise ConfigError(f"--batch-size must be an integer or 'full', got {batch!r}")
        kw.update(
            lr_dirs=args.lr_dirs,
            tol=args.tol,
            seed=args.seed,
            batch_size=batch,
            ema_decay=args.ema_decay,
        )
    return bpca.FitOptions(**kw)


def build_parser():
    parser = argparse.ArgumentParser(prog="bregpca", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model and write a bundle")
    p.add_argument("--input", required=True)
    p.add_argument("--link", required=True)
    p.add_argument("--components", type=int, required=True)
    p.add_argument("--output", required=True, help="bundle directory")
    p.add_argument("--coeffs-out")
    _add_opts(p)

    p = sub.add_parser("encode", help="compute codes for rows of a matrix")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_opts(p, fit=False)

    p = sub.add_parser("decode", help="reconstruct rows from codes")
    p.add_argument("--model", required=True)
    p.add_argument("--coeffs", required=True)
    p.add_argument("--output", required=True)

    p = sub.add_parser("eval", help="score reconstructions of a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--readout-w")
    p.add_argument("--readout-b")
    p.add_argument("--labels")
    p.add_argument("--baseline", choices=["logit-pca"])
    p.add_argument("--output", default="-")
    _add_opts(p, fit=False)

    p = sub.add_parser("mean", help="print the dual mean")
    p.add_argument("--input", required=True)
    p.add_argument("--link", required=True)

    p = sub.add_parser("gqr", help="generalized QR factorization")
    p.add_argument("--input", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--metric")
    group.add_argument("--metric-diag")
    p.add_argument("--softmax-augment", action="store_true")
    p.add_argument("--q-out", required=True)
    p.add_argument("--r-out", required=True)
    return parser


def cmd_fit(args):
    X = io.read_matrix(args.input)
    link = parse_link(args.link)
    opts = _options(args)
    if opts.batch_size == "full":
        model, C, report = bpca.fit(X, link, args.components, opts)
    else:
        batches = bpca.minibatches(X, opts.batch_size, opts.max_epochs, opts.seed)
        model, report = bpca.fit_streaming(batches, link, args.components, opts)
        C = bpca.encode(model, X, opts)
    io.save_model(model, args.output)
    if args.coeffs_out:
        io.write_matrix(C, args.coeffs_out)
    metrics = {"link": link.spec, "d": model.d, "k": model.k, "n_rows": X.shape[0]}
    metrics.update(report.as_dict())
    io.write_metrics(metrics, "-")


def cmd_encode(args):
    model = io.load_model(args.model)
    X = io.read_matrix(args.input)
    io.write_matrix(bpca.encode(model, X, _options(args)), args.output)


def cmd_decode(args):
    model = io.load_model(args.model)
    C = io.read_matrix(args.coeffs)
    io.write_matrix(bpca.decode(model, C), args.output)


def _read_labels(path):
    raw = io.read_matrix(path, "csv").ravel()
    labels = raw.astype(np.int64)
    if not np.array_equal(labels, raw):
        raise ConfigError(f"{path}: labels must be integers")
    return labels


def cmd_eval(args):
    model = io.load_model(args.model)
    X = io.read_matrix(args.input)
    C = bpca.encode(model, X, _options(args))
    X_hat = bpca.decode(model, C)
    n = X.shape[0]
    metrics = {"link": model.link.spec, "k": model.k, "n_rows": n}
    metrics["avg_compression_loss"] = bpca.compression_loss(model, X, C) / n
    softmax = model.link.kind == "softmax"
    if softmax:
        metrics["avg_kl"] = evalkit.avg_kl(X, X_hat)

    readout = [args.readout_w, args.readout_b, args.labels]
    layer = labels = None
    if any(readout):
        if not all(readout):
            raise ConfigError("--readout-w, --readout-b and --labels must be given together")
        layer = evalkit.ReadoutLayer(io.read_matrix(args.readout_w), io.read_matrix(args.readout_b).ravel())
        labels = _read_labels(args.labels)
        metrics["readout_accuracy"] = evalkit.readout_accuracy(X_hat, layer, labels)

    if args.baseline == "logit-pca":
        if not softmax:
            raise ConfigError("the logit-pca baseline needs a softmax model")
        P_base = evalkit.logit_pca_baseline(X, model.k)
        metrics["baseline"] = "logit-pca"
        metrics["baseline_avg_kl"] = evalkit.avg_kl(X, P_base)
        metrics["kl_improvement"] = metrics["baseline_avg_kl"] - metrics["avg_kl"]
        if layer is not None:
            metrics["baseline_readout_accuracy"] = evalkit.readout_accuracy(P_base, layer, labels)
    io.write_metrics(metrics, args.output)


def cmd_mean(args):
    X = io.read_matrix(args.input)
    m = bpca.dual_mean(parse_link(args.link), X)
    print(" ".join(_fmt(v) for v in m))


def cmd_gqr(args):
    A = io.read_matrix(args.input)
    if args.metric:
        M = Metric.full(io.read_matrix(args.metric))
    elif args.metric_diag:
        M = Metric.diagonal(io.read_matrix(args.metric_diag).ravel())
    else:
        M = Metric.identity(A.shape[0])
    if args.softmax_augment:
        factors = gqr.generalized_qr_softmax(A, M)
    else:
        factors = gqr.generalized_qr(A, M)
    io.write_matrix(factors.Q, args.q_out)
    io.write_matrix(factors.R, args.r_out)


COMMANDS = {
    "fit": cmd_fit,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "eval": cmd_eval,
    "mean": cmd_mean,
    "gqr": cmd_gqr,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="bregpca: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        COMMANDS[args.command](args)
    except BregpcaError as exc:
        print(f"bregpca {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
