"""Command-line entry point: ``modalreg {fit,kernel-table,bandwidth,simulate}``.

Payloads (JSON or TSV) go to stdout; diagnostics go to stderr.

Exit codes: 0 success, 2 input error, 3 capability/precondition error,
4 estimation failure, 5 experiment failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys

import numpy as np

from .errors import AllStartsFailed, ExperimentFailed, NotQuadraticallyMinorizable, ZeroBias
from .estimator import Dataset, FitConfig, default_starts, fit_multistart
from .kernels import KERNELS, amse_criterion, get_kernel
from .simulation import DGPSpec, ExperimentConfig, dgp_oracle, oracle_bandwidth, run_experiment, true_theta

EXIT_INPUT = 2
EXIT_CAPABILITY = 3
EXIT_ESTIMATION = 4
EXIT_EXPERIMENT = 5

log = logging.getLogger("modalreg")


class InputError(Exception):
    pass


def _g6(x):
    return float(f"{x:.6g}")


def _g6_all(a):
    return [_g6(v) for v in np.ravel(a)] if np.ndim(a) <= 1 else [_g6_all(r) for r in a]


def read_dataset(path) -> Dataset:
    """Read a CSV with header ``x1,...,xp,y``."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    p = len(header) - 1
    if p < 1 or header != [f"x{j}" for j in range(1, p + 1)] + ["y"]:
        raise InputError(f"{path}: header must be x1,...,xp,y; got {','.join(header)}")
    body = [r for r in rows[1:] if r]
    try:
        values = np.array([[float(c) for c in r] for r in body])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    if values.ndim != 2 or values.shape[0] == 0 or values.shape[1] != p + 1:
        raise InputError(f"{path}: every row needs {p + 1} numeric fields")
    try:
        return Dataset(values[:, :p], values[:, p])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def read_starts(path, p):
    starts = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for line in csv.reader(fh):
                if not line:
                    continue
                vec = [float(c) for c in line]
                if len(vec) != p:
                    raise InputError(f"{path}: start has {len(vec)} entries, expected {p}")
                starts.append(vec)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if not starts:
        raise InputError(f"{path}: no starts")
    return starts


def cmd_fit(args, out):
    data = read_dataset(args.input_csv)
    kernel = get_kernel(args.kernel)
    if not kernel.is_qm:
        raise NotQuadraticallyMinorizable(
            f"kernel {kernel.name!r} is not quadratically minorizable (QM); "
            "IRLS requires a QM kernel")
    if args.starts_file:
        starts = read_starts(args.starts_file, data.p)
    else:
        starts = default_starts(data, np.random.default_rng(args.seed))
    config = FitConfig(kernel, args.bandwidth, tol=args.tol, max_iter=args.max_iter,
                       starts=starts)
    res = fit_multistart(data, config)
    payload = {
        "theta": _g6_all(res.theta),
        "objective": _g6(res.objective),
        "iterations": res.iterations,
        "termination": res.termination,
        "kernel": kernel.name,
        "bandwidth": _g6(args.bandwidth),
    }
    out.write(json.dumps(payload) + "\n")


def cmd_kernel_table(args, out):
    ref = amse_criterion("biweight")
    out.write("kernel\tU\tV\tcriterion\tratio_to_biweight\tqm_status\n")
    for k in KERNELS.values():
        crit = amse_criterion(k)
        out.write(f"{k.name}\t{k.U:.4f}\t{k.V:.4f}\t{crit:.4f}\t{crit / ref:.4f}\t"
                  f"{k.qm_status.value}\n")


def cmd_bandwidth(args, out):
    dgp = DGPSpec()
    kernel = get_kernel(args.kernel)
    oracle = dgp_oracle(dgp)
    h = oracle_bandwidth(dgp, kernel, args.n)
    payload = {
        "kernel": kernel.name,
        "n": args.n,
        "h_opt": _g6(h),
        "theta": _g6_all(true_theta(dgp)),
        "oracle": {"A": _g6_all(oracle.A), "b": _g6_all(oracle.b), "C": _g6_all(oracle.C)},
    }
    out.write(json.dumps(payload) + "\n")


def _fmt(x):
    return "NA" if not math.isfinite(x) else f"{x:.6g}"


def cmd_simulate(args, out):
    config = ExperimentConfig(
        sample_sizes=tuple(args.ns), trials=args.trials, kernels=tuple(args.kernels),
        base_seed=args.seed)
    rows = run_experiment(config, jobs=args.jobs)
    out.write("kernel\tn\tmse_x100\tstd_x100\tmean_fit_seconds\n")
    for r in rows:
        seconds = r.mean_fit_seconds if args.timing else math.nan
        out.write(f"{r.kernel}\t{r.n}\t{_fmt(r.mse_x100)}\t{_fmt(r.mse_std_x100)}\t"
                  f"{_fmt(seconds)}\n")


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _kernel_list(text):
    names = [v.strip().lower() for v in text.split(",") if v.strip()]
    bad = [v for v in names if v not in KERNELS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown kernel(s) {bad}; choose from {list(KERNELS)}")
    return names


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="modalreg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a modal linear regression to a CSV")
    p.add_argument("input_csv")
    p.add_argument("--kernel", required=True, choices=list(KERNELS))
    p.add_argument("--bandwidth", required=True, type=_positive_float)
    p.add_argument("--tol", type=_positive_float, default=1e-4)
    p.add_argument("--max-iter", type=_positive_int, default=500)
    p.add_argument("--starts-file", help="CSV, one comma-separated start per line")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("kernel-table", help="kernel constants and AMSE criterion")
    p.set_defaults(func=cmd_kernel_table)

    p = sub.add_parser("bandwidth", help="oracle optimal bandwidth for the mixture benchmark")
    p.add_argument("--kernel", required=True, choices=list(KERNELS))
    p.add_argument("--n", required=True, type=_positive_int)
    p.set_defaults(func=cmd_bandwidth)

    p = sub.add_parser("simulate", help="Monte Carlo kernel comparison")
    p.add_argument("--ns", type=_int_list, default=[100, 200, 400, 800, 1600, 3200, 6400])
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.add_argument("--kernels", type=_kernel_list,
                   default=["epanechnikov", "biweight", "gaussian", "laplace"])
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--no-timing", dest="timing", action="store_false",
                   help="print NA for mean_fit_seconds (byte-reproducible output)")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args, out)
    except InputError as exc:
        print(f"modalreg: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NotQuadraticallyMinorizable, ZeroBias) as exc:
        print(f"modalreg: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except AllStartsFailed as exc:
        print(f"modalreg: estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except ExperimentFailed as exc:
        print(f"modalreg: experiment failed: {exc}", file=sys.stderr)
        return EXIT_EXPERIMENT
    return 0


if __name__ == "__main__":
    sys.exit(main())
