"""Command-line interface: ``modalfit {sample,fit,eval,compare}``.

Exit codes: 0 on success (a fit that hit ``--max-iter`` still succeeds), 1 on
data, model or I/O errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, engine, fileio, transfer
from .exceptions import ModalFitError, PoleEvaluationError, ResonanceError
from .types import FrequencySampleSet, InitStrategy, IterationConfig

logger = logging.getLogger("modalfit")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {value}")
    return value


def _add_grid(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--fmin", type=float, required=required, help="lowest angular frequency in rad/s")
    p.add_argument("--fmax", type=float, required=required, help="highest angular frequency in rad/s")
    p.add_argument("--count", type=int, required=required, help="number of grid points")
    p.add_argument("--spacing", choices=("linear", "log"), default="linear", help="grid spacing")


def _grid(args) -> np.ndarray:
    if args.count is None or args.fmin is None or args.fmax is None:
        raise UsageError("a grid needs --fmin, --fmax and --count")
    if args.count < 2:
        raise UsageError(f"--count must be at least 2, got {args.count}")
    try:
        return bench.make_point_grid(args.fmin, args.fmax, args.count, args.spacing)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modalfit",
        description="Fit modally damped second-order models to frequency response data.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log iteration progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample a spring-mass chain or a stored model on a frequency grid")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--chain-n", type=_positive_int, help="number of masses in a Rayleigh-damped chain")
    src.add_argument("--model", type=Path, help="model JSON file to sample instead of a chain")
    p.add_argument("--alpha", type=float, default=0.0, help="mass-proportional damping (default 0)")
    p.add_argument("--beta", type=float, default=0.0, help="stiffness-proportional damping (default 0)")
    p.add_argument("--m0", type=float, default=1.0, help="mass of every chain element (default 1)")
    p.add_argument("--k0", type=float, default=1.0, help="stiffness of every chain spring (default 1)")
    _add_grid(p, required=True)
    p.add_argument("--conj-close", action="store_true", help="append the complex conjugate samples")
    p.add_argument("--out", type=Path, required=True, help="output samples CSV")
    p.add_argument("--truth-out", type=Path, help="also write the modal model of the chain as JSON")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="fit a model to a samples CSV")
    p.add_argument("--method", choices=sorted(engine.METHODS), required=True)
    p.add_argument("--order", type=int, required=True, help="number of modes (sovf1, sovf2) or poles (vf)")
    p.add_argument("--samples", type=Path, required=True, help="samples CSV")
    p.add_argument("--max-iter", type=_nonnegative_int, default=100, help="iteration cap (default 100)")
    p.add_argument("--tol", type=float, default=1e-8, help="denominator weight tolerance (default 1e-8)")
    p.add_argument("--pole-tol", type=float, default=1e-10,
                   help="relative pole movement tolerance (default 1e-10)")
    p.add_argument("--init", choices=[s.value for s in InitStrategy if s is not InitStrategy.USER_SUPPLIED],
                   default=InitStrategy.VF_WARM.value,
                   help="initial expansion points (default vf_warm; vf falls back to logspace_imag)")
    p.add_argument("--no-realness", action="store_true", help="do not force real model coefficients")
    p.add_argument("--no-stability", action="store_true", help="do not reflect unstable points")
    p.add_argument("--out", type=Path, required=True, help="output model JSON")
    p.add_argument("--report", type=Path, help="per-iteration report CSV")
    p.add_argument("--errors", type=Path, help="per-sample relative error CSV")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="evaluate a model on a grid or on the points of a samples CSV")
    p.add_argument("--model", type=Path, required=True, help="model JSON")
    p.add_argument("--samples", type=Path, help="take points from this samples CSV instead of a grid")
    _add_grid(p, required=False)
    p.add_argument("--out", type=Path, required=True, help="output values CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="pointwise relative errors of several models against one dataset")
    p.add_argument("--samples", type=Path, required=True, help="samples CSV")
    p.add_argument("--models", type=Path, nargs="+", required=True, help="model JSON files")
    p.add_argument("--out", type=Path, required=True, help="output error CSV")
    p.set_defaults(func=cmd_compare)
    return parser


def cmd_sample(args) -> int:
    points = _grid(args)
    if args.model is not None:
        model = fileio.read_model(args.model)
        values = []
        for s in points.tolist():
            try:
                h = complex(transfer.eval_model(model, s))
            except PoleEvaluationError:
                raise ResonanceError(s) from None
            if not np.isfinite(h):
                raise ResonanceError(s)
            values.append(h)
        if args.truth_out is not None:
            raise UsageError("--truth-out only applies to --chain-n")
        samples = FrequencySampleSet(points, values)
        if args.conj_close:
            samples = samples.close_under_conjugation()
    else:
        try:
            system = bench.make_rayleigh_chain(args.chain_n, args.alpha, args.beta, args.m0, args.k0)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        samples = bench.sample_dense(system, points, conj_close=args.conj_close)
        if args.truth_out is not None:
            fileio.write_model(args.truth_out, bench.modal_decompose(system).to_model())
    fileio.write_samples(args.out, samples)
    print(f"wrote {len(samples)} samples to {args.out}")
    return EXIT_OK


def relative_errors(model, samples: FrequencySampleSet) -> np.ndarray:
    return transfer.pointwise_relative_error(lambda s: transfer.eval_model(model, s), samples,
                                             absolute_fallback=True)


def cmd_fit(args) -> int:
    if args.order < 1:
        raise UsageError(f"--order must be a positive integer, got {args.order}")
    if not (args.tol > 0 and args.pole_tol > 0):
        raise UsageError("tolerances must be positive")
    samples = fileio.read_samples(args.samples)
    config = IterationConfig(
        order=args.order,
        max_iters=args.max_iter,
        weight_tol=args.tol,
        pole_move_tol=args.pole_tol,
        enforce_realness=not args.no_realness,
        enforce_stability=not args.no_stability,
        init_strategy=args.init,
    )
    rows = engine.METHODS[args.method].min_rows(args.order)
    if rows > len(samples):
        raise UsageError(f"order {args.order} with {args.method} needs at least {rows} samples, "
                         f"{args.samples} has {len(samples)}")
    model, report = engine.fit(args.method, samples, config)
    fileio.write_model(args.out, model)
    if args.report is not None:
        fileio.write_report(args.report, report)
    err = relative_errors(model, samples)
    if args.errors is not None:
        fileio.write_errors(args.errors, samples.points.imag, {"rel_err": err})
    print(f"{args.method} order {args.order}: {report.termination.value} after "
          f"{report.iterations} iterations, weights converged: {report.weights_converged}, "
          f"max relative error {err.max():.3e}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = fileio.read_model(args.model)
    if args.samples is not None:
        points = fileio.read_samples(args.samples).points
        if np.any(points.real != 0):
            raise UsageError("eval writes omega = Im(xi) and needs points on the imaginary axis")
    else:
        points = _grid(args)
    rows = []
    for s in points.tolist():
        try:
            h = complex(transfer.eval_model(model, s))
            flag = "ok" if np.isfinite(h) else "pole"
        except PoleEvaluationError:
            h, flag = complex(np.nan, np.nan), "pole"
        if flag != "ok":
            logger.warning("model has a pole at omega = %s", s.imag)
            h = complex(np.nan, np.nan)
        rows.append((fileio.fmt(s.imag), fileio.fmt(h.real), fileio.fmt(h.imag), fileio.fmt(abs(h)), flag))
    fileio.write_table(args.out, fileio.EVAL_HEADER, rows)
    print(f"wrote {len(rows)} values to {args.out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    samples = fileio.read_samples(args.samples)
    columns: dict[str, np.ndarray] = {}
    for path in args.models:
        name = path.stem
        if name in columns:
            raise UsageError(f"two models share the file stem {name!r}")
        columns[name] = relative_errors(fileio.read_model(path), samples)
    fileio.write_errors(args.out, samples.points.imag, columns, footer=True)
    for name, err in columns.items():
        print(f"{name}: max {err.max():.3e}, mean {err.mean():.3e}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else
                        logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ModalFitError, ValueError, OSError) as exc:
        print(f"modalfit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
