#!/usr/bin/env python3
"""
Command line entry point

    fksum_cli.py kernel    constants or density curve of a kernel
    fksum_cli.py sum       kernel / derivative sums of a CSV column
    fksum_cli.py density   kernel density estimate
    fksum_cli.py regress   Nadaraya-Watson or local-linear regression
    fksum_cli.py ica       independent component analysis
    fksum_cli.py mdh       minimum density hyperplane
    fksum_cli.py ppr       projection pursuit regression (fit / predict)
    fksum_cli.py bench     scaling and recovery benchmarks
    fksum_cli.py simulate  synthetic data sets

Exit codes: 0 success, 2 invalid input, 3 numeric failure.
"""

import argparse
import io
import logging
import sys
from typing import List, Optional, Sequence

import numpy as np

import settings
from bench import bench_ica, bench_mdh, bench_ppr, bench_scaling
from datasets import SIMULATION_KINDS, Dataset, load_csv, simulate, write_csv
from errors import FksumError, InputError
from fastsum import MODES, WeightedSample, fk_sum, naive_ksum
from kernel_core import PolyExpKernel, default_kernel, kernel_constants, kernel_curve, smooth_kernel
from metrics import cluster_split_error, separation_error
from projpursuit import PPRModel, ica_fit, mdh_fit, ppr_fit, ppr_predict
from smoothers import BandwidthSpec, density_bandwidth, kde, kde_grid, regress, regression_bandwidth

logger = logging.getLogger("fksum")


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _status(message: str):
    # stdout carries CSV / JSON only
    print(message, file=sys.stderr)


def _format_table(columns: Sequence[str], data: np.ndarray) -> str:
    cells = [[f"{v:.6g}" for v in row] for row in data]
    widths = [max([len(c)] + [len(r[j]) for r in cells]) for j, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in cells]
    return "\n".join(lines)


def emit(args, columns: Sequence[str], data, out: Optional[str] = None):
    """Write a result table to --out (CSV) or to stdout in the chosen format."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    target = out or args.out
    if target:
        write_csv(target, columns, data)
        _status(f"✅ Wrote {data.shape[0]:,} rows to {target}")
    elif args.format == "table":
        print(_format_table(columns, data))
    else:
        buf = io.StringIO()
        write_csv(buf, columns, data)
        sys.stdout.write(buf.getvalue())


def _write_text(path: str, text: str):
    with open(path, "w") as f:
        f.write(text)
    _status(f"✅ Wrote {path}")


def _kernel(args) -> PolyExpKernel:
    if getattr(args, "smooth", None) is not None:
        return smooth_kernel(args.smooth)
    if args.beta:
        return PolyExpKernel.parse(args.beta)
    return default_kernel()


def _features(dataset: Dataset, columns: Optional[str], exclude: Sequence[str] = ()) -> np.ndarray:
    names = [c.strip() for c in columns.split(",")] if columns else None
    return dataset.matrix(names, exclude=[e for e in exclude if e])


def _bandwidth(args) -> BandwidthSpec:
    if args.h is not None:
        return BandwidthSpec.fixed(args.h)
    if args.cv or args.bw == "cv":
        return BandwidthSpec.cv(*(args.bracket or (None, None)))
    return BandwidthSpec.silverman(args.silverman if args.silverman is not None else args.hmult)


def _eval_points(args) -> Optional[np.ndarray]:
    if not args.eval:
        return None
    return load_csv(args.eval).column(args.eval_col or args.x)


def _penalty(text: str) -> Optional[float]:
    if text == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise InputError(f"--C must be a number or 'auto', got '{text}'") from None


def _int_list(text: str) -> List[int]:
    """'1,2,8' or '1-20'"""
    out = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise InputError(f"could not parse integer list '{text}'") from None
    if not out:
        raise InputError(f"empty integer list '{text}'")
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_kernel(args):
    kernel = _kernel(args)
    if args.curve or args.what == "curve":
        emit(args, ["u", "density"], kernel_curve(kernel, args.grid))
        return
    c = kernel_constants(kernel)
    emit(args, ["order", "normalizer", "variance", "roughness"], [[kernel.order, c.normalizer, c.variance, c.roughness]])


def cmd_sum(args):
    kernel = _kernel(args)
    data = load_csv(args.data)
    weights = data.column(args.weights) if args.weights else None
    sample = WeightedSample.create(data.column(args.x), weights)
    x_eval = _eval_points(args)
    if args.naive:
        sums = naive_ksum(sample, args.h, kernel, x_eval, args.mode)
    else:
        sums = fk_sum(sample, args.h, kernel, x_eval, args.mode, args.nbin)
    points = sample.original_values() if x_eval is None else x_eval
    columns, cols = ["x"], [points]
    if sums.ksum is not None:
        columns.append("ksum")
        cols.append(sums.ksum)
    if sums.dksum is not None:
        columns.append("dksum")
        cols.append(sums.dksum)
    emit(args, columns, np.column_stack(cols))


def cmd_density(args):
    kernel = _kernel(args)
    x = load_csv(args.data).column(args.x)
    h = density_bandwidth(_bandwidth(args), x, kernel)
    _status(f"📏 Bandwidth h = {h:.6g}")
    x_eval = _eval_points(args)
    if x_eval is None:
        est = kde_grid(x, h, kernel, grid_size=args.grid, nbin=args.nbin)
    else:
        est = kde(x, h, kernel, x_eval=x_eval, nbin=args.nbin)
    emit(args, ["x", "density"], np.column_stack([est.eval_points, est.density]))


def cmd_regress(args):
    kernel = _kernel(args)
    data = load_csv(args.data)
    x, y = data.column(args.x), data.column(args.y)
    h = regression_bandwidth(_bandwidth(args), x, y, kernel, args.method)
    _status(f"📏 Bandwidth h = {h:.6g}")
    x_eval = _eval_points(args)
    if x_eval is None and args.grid:
        x_eval = np.linspace(x.min(), x.max(), args.grid)
    est = regress(x, y, h, kernel, x_eval=x_eval, method=args.method, nbin=args.nbin)
    emit(args, ["x", "fitted"], np.column_stack([est.eval_points, est.fitted]))


def cmd_ica(args):
    kernel = _kernel(args)
    data = load_csv(args.data)
    X = _features(data, args.columns)
    _status(f"🚀 ICA on {X.shape[0]:,} x {X.shape[1]} data, {args.ncomp} components")
    model = ica_fit(X, args.ncomp, kernel, hmult=args.hmult, it=args.it, nbin=args.nbin)
    targets = (args.out or "").split(",")
    model_path = targets[0] if targets[0] else None
    sources_path = targets[1] if len(targets) > 1 and targets[1] else None
    names = [f"s{j + 1}" for j in range(model.ncomp)]
    if model_path:
        _write_text(model_path, model.to_json())
    else:
        print(model.to_json())
    if sources_path:
        write_csv(sources_path, names, model.sources)
        _status(f"✅ Wrote sources to {sources_path}")


def cmd_mdh(args):
    kernel = _kernel(args)
    data = load_csv(args.data)
    X = _features(data, args.columns, exclude=[args.labels])
    C = _penalty(args.C)
    _status(f"🚀 Minimum density hyperplane on {X.shape[0]:,} x {X.shape[1]} data")
    model = mdh_fit(X, hmult=args.hmult, kernel=kernel, alphamax=args.alphamax, C=C)
    status = "✅ separating" if model.separating else "⚠️ not separating"
    _status(f"{status}: b = {model.b:.6g}, alpha = {model.alpha_final:.3g}, density at b = {model.density_at_b:.4g}")
    if args.labels:
        labels = data.column(args.labels)
        side = model.predict_side(X)
        if np.unique(labels).size == 2:
            _status(f"📊 Separation error: {separation_error(labels, side):.4f}")
        else:
            _status(f"📊 Cluster split error: {cluster_split_error(labels, side):.4f}")
    if args.out:
        _write_text(args.out, model.to_json())
    else:
        print(model.to_json())


def cmd_ppr_fit(args):
    kernel = _kernel(args)
    data = load_csv(args.data)
    X = _features(data, args.columns, exclude=[args.y])
    y = data.column(args.y)
    _status(f"🚀 PPR with {args.nterms} term(s) on {X.shape[0]:,} x {X.shape[1]} data")
    model = ppr_fit(X, y, args.nterms, kernel, smoother=args.smoother)
    for j, comp in enumerate(model.components, 1):
        _status(f"   term {j}: h = {comp.h:.4g}")
    if args.out:
        _write_text(args.out, model.to_json())
    else:
        print(model.to_json())


def _load_ppr_model(path: str) -> PPRModel:
    try:
        with open(path) as f:
            text = f.read()
    except FileNotFoundError:
        raise InputError(f"model file not found: {path}") from None
    except OSError as e:
        raise InputError(f"{path}: cannot read model file: {e.strerror}") from None
    try:
        return PPRModel.from_json(text)
    except InputError as e:
        raise InputError(f"{path}: {e}") from None
    except (ValueError, KeyError, TypeError, IndexError, AttributeError) as e:
        raise InputError(f"{path}: invalid model file ({type(e).__name__}: {e})") from None


def cmd_ppr_predict(args):
    model = _load_ppr_model(args.model)
    data = load_csv(args.data)
    X = _features(data, args.columns)
    emit(args, ["prediction"], ppr_predict(model, X))


def _bench_options(args) -> dict:
    return {
        "workers": args.workers,
        "progress_file": settings.PROGRESS_FILE,
        "fresh": args.fresh,
        "show_progress": True,
    }


def cmd_bench(args):
    kernel = _kernel(args)
    if args.kind == "scaling":
        sizes = _int_list(args.sizes) if args.sizes else [2 ** k for k in range(16, 21)]
        _status(f"🚀 Scaling benchmark over {len(sizes)} sizes, {args.reps} repetitions each")
        report = bench_scaling(sizes, kernel, args.reps, args.naive_cap, seed=args.seed)
    else:
        seeds = _int_list(args.seeds)
        runner = {"ica": bench_ica, "mdh": bench_mdh, "ppr": bench_ppr}[args.kind]
        sizes = {"n": args.n} if args.n else {}
        if args.d:
            sizes["d"] = args.d
        _status(f"🚀 {args.kind.upper()} benchmark over {len(seeds)} seeds")
        report = runner(seeds, **sizes, **_bench_options(args))
    print(report.table())
    if args.out:
        report.to_csv(args.out)
        _status(f"✅ Wrote {args.out}")


def cmd_simulate(args):
    sim = simulate(args.kind, args.n, args.d, args.seed)
    emit(args, sim.dataset.columns, sim.dataset.data)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=1, help="random seed")
    common.add_argument("--out", help="output file (CSV or JSON)")
    common.add_argument("--format", choices=("csv", "table"), default="csv", help="stdout format")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    common.add_argument("--beta", help="kernel coefficients, e.g. 0.25,0.25")

    smooth = argparse.ArgumentParser(add_help=False)
    rule = smooth.add_mutually_exclusive_group()
    rule.add_argument("--h", type=float, help="fixed bandwidth")
    rule.add_argument("--silverman", type=float, metavar="M", help="Silverman's rule times M")
    rule.add_argument("--cv", action="store_true", help="leave-one-out cross-validated bandwidth")
    smooth.add_argument("--bw", choices=("silverman", "cv"), default="silverman", help="bandwidth rule when --h is absent")
    smooth.add_argument("--hmult", type=float, default=1.0, help="multiplier for Silverman's rule")
    smooth.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"), help="cross-validation search interval")
    smooth.add_argument("--eval", help="CSV file of evaluation points")
    smooth.add_argument("--eval-col", help="column of --eval (defaults to the sample column)")
    smooth.add_argument("--nbin", type=int, help="linear binning grid size")

    parser = argparse.ArgumentParser(prog="fksum", description="Fast exact kernel smoothing and projection pursuit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel", parents=[common], help="kernel constants or density curve")
    p.add_argument("--smooth", type=int, help="use the smooth kernel of this order")
    p.add_argument("what", nargs="?", choices=("constants", "curve"), default="constants")
    p.add_argument("--curve", action="store_true", help="same as the 'curve' action")
    p.add_argument("--n", "--grid", dest="grid", type=int, default=500, help="curve points")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("sum", parents=[common], help="kernel sums")
    p.add_argument("--data", required=True)
    p.add_argument("--col", "--x", dest="x", required=True, help="sample column, by name or 1-based number")
    p.add_argument("--weights", help="weight column")
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--mode", choices=MODES, default="sum")
    p.add_argument("--eval", help="CSV file of evaluation points")
    p.add_argument("--eval-col")
    p.add_argument("--nbin", type=int)
    p.add_argument("--naive", action="store_true", help="use the quadratic oracle")
    p.set_defaults(func=cmd_sum)

    p = sub.add_parser("density", parents=[common, smooth], help="kernel density estimate")
    p.add_argument("--data", required=True)
    p.add_argument("--col", "--x", dest="x", required=True, help="sample column, by name or 1-based number")
    p.add_argument("--grid", type=int, default=512)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("regress", parents=[common, smooth], help="kernel regression")
    p.add_argument("--data", required=True)
    p.add_argument("--x", required=True, help="covariate column, by name or 1-based number")
    p.add_argument("--y", required=True, help="response column, by name or 1-based number")
    p.add_argument("--method", choices=("nw", "loclin"), default="nw")
    p.add_argument("--grid", type=int, help="evaluate on an equally spaced grid of this size")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("ica", parents=[common], help="independent component analysis")
    p.add_argument("--data", required=True)
    p.add_argument("--columns", help="comma separated feature columns (default: all)")
    p.add_argument("--ncomp", type=int, required=True)
    p.add_argument("--hmult", type=float, default=1.5)
    p.add_argument("--it", type=int, default=20)
    p.add_argument("--nbin", type=int)
    p.set_defaults(func=cmd_ica)

    p = sub.add_parser("mdh", parents=[common], help="minimum density hyperplane")
    p.add_argument("--data", required=True)
    p.add_argument("--columns")
    p.add_argument("--labels", help="label column, excluded from the features and used for scoring")
    p.add_argument("--alphamax", type=float, default=1.0)
    p.add_argument("--hmult", type=float, default=1.0)
    p.add_argument("--C", default="auto", help="penalty constant or 'auto'")
    p.set_defaults(func=cmd_mdh)

    ppr = sub.add_parser("ppr", help="projection pursuit regression")
    ppr_sub = ppr.add_subparsers(dest="action", required=True)
    p = ppr_sub.add_parser("fit", parents=[common])
    p.add_argument("--data", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--columns")
    p.add_argument("--nterms", type=int, default=1)
    p.add_argument("--smoother", choices=("nw", "loclin"), default="nw")
    p.set_defaults(func=cmd_ppr_fit)
    p = ppr_sub.add_parser("predict", parents=[common])
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--columns")
    p.set_defaults(func=cmd_ppr_predict)

    p = sub.add_parser("bench", parents=[common], help="benchmarks")
    p.add_argument("kind", choices=("scaling", "ica", "mdh", "ppr"))
    p.add_argument("--sizes", help="scaling sizes, e.g. 65536,131072")
    p.add_argument("--reps", type=int, default=settings.TIMING_REPS)
    p.add_argument("--naive-cap", type=int, default=settings.NAIVE_CAP)
    p.add_argument("--seeds", default="1-20", help="seeds, e.g. 1-20 or 1,5,9")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--workers", type=int, default=settings.BENCH_WORKERS)
    p.add_argument("--fresh", action="store_true", help="ignore saved progress")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("simulate", parents=[common], help="synthetic data")
    p.add_argument("--kind", choices=SIMULATION_KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, settings.LOG_LEVEL, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except FksumError as e:
        print(f"❌ {e}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        return 130
    return 0


if __name__ == "__main__":
    sys.exit(main())
