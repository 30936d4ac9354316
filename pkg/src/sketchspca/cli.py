"""Command-line entry point: ``sketchspca <command> ...``.

Exit status is 0 on success, 2 for bad parameters or unreadable input and 3
when an iterative method fails to converge.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .errors import ConvergenceError, ParameterError, SketchError
from .experiment import ExperimentSpec, run_experiment
from .generators import GENERATORS, generate
from .io import FORMATS, load_matrix, save_matrix
from .matrix import center_columns, norms
from .mixing import optimize_alpha, sigma_min_squared, theoretical_sample_size
from .report import emit_report
from .sketch import (
    hybrid_probabilities,
    leverage_probabilities,
    leverage_scores,
    sample_sketch,
    select_threshold,
    spectral_deviation,
    threshold_sketch,
    uniform_probabilities,
)
from .spca import brute_force_spca, exact_pca, iter_sparse_pca, truncate_components, variance

EXIT_OK, EXIT_PARAM, EXIT_CONVERGENCE = 0, 2, 3


def _emit(args, payload: dict):
    if args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["key", "value"])
        for key, val in payload.items():
            w.writerow([key, json.dumps(val) if isinstance(val, (list, dict)) else val])
    else:
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")


def _load(args, path=None):
    A = load_matrix(path or args.input, args.input_format)
    return center_columns(A) if getattr(args, "center", False) else A


def _budget(args, A):
    if args.s is not None:
        return args.s
    if args.fraction is not None:
        total = A.nnz if A.is_sparse else A.m * A.n
        return max(1, int(round(args.fraction * total)))
    raise ParameterError("give --s or --fraction")


def cmd_generate(args):
    params = {"m": args.m, "n": args.n}
    if args.name in ("spiky_powerlaw", "low_rank_noise"):
        params["rank"] = args.rank
    if args.name == "spiky_powerlaw":
        params.update(exponent=args.exponent, density=args.density)
    elif args.name == "low_rank_noise":
        params["noise"] = args.noise
    A = generate(args.name, params, seed=args.seed)
    save_matrix(A, args.output, args.output_format)
    _emit(args, {"generator": args.name, "shape": list(A.shape), "nnz": A.nnz, "output": args.output})


def cmd_sketch(args):
    A = _load(args)
    info = {"shape": list(A.shape), "input_nnz": A.nnz, "kind": args.dist}
    if args.dist == "threshold":
        delta, lost = select_threshold(A, args.eps, seed=args.seed)
        At = threshold_sketch(A, delta)
        info.update(delta=delta, lost_energy=lost)
    else:
        if args.dist == "hybrid":
            if args.alpha == "optimal":
                alpha = optimize_alpha(A, args.eps, sigma_min_sq=sigma_min_squared(A), seed=args.seed).alpha_star
            else:
                alpha = float(args.alpha)
            dist = hybrid_probabilities(A, alpha)
            info["alpha"] = alpha
        elif args.dist == "uniform":
            dist = uniform_probabilities(A, nonzeros_only=args.nonzeros_only)
        else:
            dist = leverage_probabilities(leverage_scores(A, args.rank, seed=args.seed), A.m, A.n)
        res = sample_sketch(A, dist, _budget(args, A), args.seed, workers=args.threads)
        At = res.sketch
        info.update(s=res.s, distinct_entries_hit=res.distinct_entries_hit)
    info["sketch_nnz"] = At.nnz
    if args.output:
        save_matrix(At, args.output, args.output_format)
        info["output"] = args.output
    _emit(args, info)


def cmd_alpha(args):
    A = _load(args)
    sig = sigma_min_squared(A) if args.sigma_min else 0.0
    s, prof = theoretical_sample_size(
        A,
        args.eps,
        args.delta,
        args.k,
        grid_lo=args.grid_lo,
        grid_hi=args.grid_hi,
        grid_steps=args.grid_steps,
        sigma_min_sq=sig,
        seed=args.seed,
    )
    out = prof.to_dict()
    out.update(k=args.k, delta=args.delta, sample_size=s)
    _emit(args, out)


def cmd_spca(args):
    A = _load(args)
    if args.method == "exact":
        V = exact_pca(A, args.k, seed=args.seed)
    elif args.method == "max_r":
        V = truncate_components(exact_pca(A, args.k, seed=args.seed), args.r)
    elif args.method == "iter":
        V = iter_sparse_pca(A, args.k, args.r, restarts=args.restarts, seed=args.seed, workers=args.threads)
    else:
        V = brute_force_spca(A, args.k, args.r)
    _emit(
        args,
        {
            "method": V.method_tag,
            "k": V.k,
            "r": V.r,
            "variance": variance(A, V),
            "converged": bool(V.converged),
            "loadings": np.round(V.loadings, 12).T.tolist(),
        },
    )


def cmd_deviate(args):
    A = _load(args, args.input)
    B = _load(args, args.other)
    op, gd = spectral_deviation(A, B, seed=args.seed)
    two = norms(A, seed=args.seed).spectral_norm
    _emit(args, {"op_norm_diff": op, "gram_diff": gd, "spectral_norm": two})


def cmd_bench(args):
    try:
        with open(args.spec, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{args.spec}: invalid JSON ({exc})") from None
    spec = ExperimentSpec.from_dict(raw)
    if args.threads_given:
        spec.threads = args.threads
    report = run_experiment(spec)
    fmt = "csv" if args.format == "csv" else "json"
    emit_report(report, fmt, args.output, timings_sidecar=not args.no_timings)
    failed = sum(c.error is not None for c in report.cells)
    print(f"wrote {args.output}: {len(report.cells)} cells, {failed} failed", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sketchspca", description="Element-wise sketches for sparse PCA.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default 1)")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="output format")
    sub = p.add_subparsers(dest="command", required=True)

    def matrix_input(sp, name="input"):
        sp.add_argument(name, help="matrix file (.mtx MatrixMarket or .csv dense)")
        sp.add_argument("--input-format", choices=FORMATS, default=None)
        sp.add_argument("--center", action="store_true", help="center columns first")

    g = sub.add_parser("generate", help="write a synthetic matrix")
    g.add_argument("name", choices=sorted(GENERATORS))
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--rank", type=int, default=5)
    g.add_argument("--exponent", type=float, default=1.0)
    g.add_argument("--density", type=float, default=1.0)
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--output-format", choices=FORMATS, default=None)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("sketch", help="sample or threshold a matrix")
    matrix_input(s)
    s.add_argument("--dist", choices=("hybrid", "uniform", "leverage", "threshold"), default="hybrid")
    s.add_argument("--alpha", default="optimal", help="mixing weight in (0, 1] or 'optimal'")
    s.add_argument("--s", type=int, default=None, help="number of draws")
    s.add_argument("--fraction", type=float, default=None, help="draws as a fraction of nnz (sparse) or m*n")
    s.add_argument("--eps", type=float, default=0.5)
    s.add_argument("--rank", type=int, default=2, help="leverage-score rank")
    s.add_argument("--nonzeros-only", action="store_true", help="uniform over nonzeros only")
    s.add_argument("-o", "--output", default=None)
    s.add_argument("--output-format", choices=FORMATS, default=None)
    s.set_defaults(func=cmd_sketch)

    a = sub.add_parser("alpha", help="optimal mixing weight and sample size")
    matrix_input(a)
    a.add_argument("--eps", type=float, default=0.5)
    a.add_argument("--delta", type=float, default=0.1)
    a.add_argument("--k", type=int, default=1)
    a.add_argument("--grid-lo", type=float, default=0.01)
    a.add_argument("--grid-hi", type=float, default=1.0)
    a.add_argument("--grid-steps", type=int, default=100)
    a.add_argument("--sigma-min", action="store_true", help="subtract sigma_min^2 (dense SVD)")
    a.set_defaults(func=cmd_alpha)

    c = sub.add_parser("spca", help="sparse principal components")
    matrix_input(c)
    c.add_argument("--k", type=int, default=1)
    c.add_argument("--r", type=int, required=True)
    c.add_argument("--method", choices=("exact", "max_r", "iter", "brute"), default="iter")
    c.add_argument("--restarts", type=int, default=8)
    c.set_defaults(func=cmd_spca)

    d = sub.add_parser("deviate", help="spectral deviation between two matrices")
    matrix_input(d)
    d.add_argument("other", help="second matrix file")
    d.set_defaults(func=cmd_deviate)

    b = sub.add_parser("bench", help="run an experiment spec (JSON) and write a report")
    b.add_argument("spec", help="experiment spec JSON file")
    b.add_argument("-o", "--output", required=True)
    b.add_argument("--no-timings", action="store_true", help="skip the timings sidecar")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.threads_given = args.threads is not None
    if args.threads is None:
        args.threads = 1
    try:
        if args.threads < 1:
            raise ParameterError("--threads must be at least 1")
        args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (SketchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
