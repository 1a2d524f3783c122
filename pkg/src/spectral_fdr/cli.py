"""Command-line interface: ``spectral-fdr {select,simulate,rank,spectrum}``.

Exit codes: 0 success, 2 bad arguments, 3 unreadable or malformed input,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from collections import Counter

import numpy as np

from . import ensembles, montecarlo, oracle, reporting
from .fdr import default_k_max, select
from .matrix_io import MatrixParseError, read_matrix
from .rank import RankConfig, rank_estimate
from .spectral import SpectralError, is_symmetric, singular_spectrum, spacings, symmetric_spectrum
from .transforms import BulkEvaluationError

EXIT_OK, EXIT_ARGS, EXIT_PARSE, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _alpha(text):
    try:
        a = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"alpha must be a number, got {text!r}") from None
    if not 0 < a < 1:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {a}")
    return a


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}")
    return v


def _add_input(p):
    p.add_argument("--input", required=True, help="CSV or TSV matrix file")
    p.add_argument("--mode", choices=("auto", "symmetric", "asymmetric"), default="auto")
    p.add_argument("--symmetrize", action="store_true", help="replace M by (M + M^T) / 2 first")


def _add_output(p):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write the report here instead of standard output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectral-fdr",
                                     description="FDR-controlled principal subspace selection")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="choose k at FDR level alpha")
    _add_input(p)
    p.add_argument("--alpha", type=_alpha, required=True)
    p.add_argument("--side", choices=("left", "right", "both"), default="left")
    p.add_argument("--p", type=_positive_float, help="rank threshold constant (default: data driven)")
    p.add_argument("--rank", type=_nonneg_int, help="use this rank instead of estimating it")
    p.add_argument("--k-max", type=_positive_int)
    _add_output(p)

    p = sub.add_parser("simulate", help="Monte Carlo experiment on a noise preset")
    p.add_argument("--ensemble", required=True, help=", ".join(ensembles.FAMILIES))
    p.add_argument("--signal", default="well-separated",
                   choices=("well-separated", "barely-separated", "entangled"))
    p.add_argument("--n", type=_positive_int, default=500)
    p.add_argument("--m", type=_positive_int)
    p.add_argument("--r", type=_positive_int, default=20)
    p.add_argument("--reps", type=_positive_int, default=100)
    p.add_argument("--alpha", type=_alpha, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--side", choices=("left", "right", "both"), default="left")
    p.add_argument("--p", type=_positive_float)
    p.add_argument("--k-max", type=_positive_int)
    p.add_argument("--oracle", action="store_true", help="add the limiting-law FDR column")
    p.add_argument("--workers", type=_positive_int,
                   help=f"trial threads (default: ${montecarlo.WORKERS_ENV} or CPU count)")
    p.add_argument("--timings", action="store_true", help="record wall time (breaks byte equality)")
    _add_output(p)

    p = sub.add_parser("rank", help="spacing-based rank estimate")
    _add_input(p)
    p.add_argument("--p", type=_positive_float)
    _add_output(p)

    p = sub.add_parser("spectrum", help="eigen/singular values and spacings")
    _add_input(p)
    _add_output(p)
    return parser


def _load_spectrum(args, vectors=False):
    M = read_matrix(args.input)
    if args.symmetrize:
        if M.shape[0] != M.shape[1]:
            raise UsageError(f"--symmetrize needs a square matrix, got {M.shape}")
        M = 0.5 * (M + M.T)
    sym = is_symmetric(M)
    if args.mode == "symmetric":
        if not sym:
            raise UsageError("--mode symmetric given but the matrix is not symmetric "
                             "(use --symmetrize or --mode asymmetric)")
        use_eigen = True
    elif args.mode == "asymmetric":
        use_eigen = False
    else:
        use_eigen = sym
    spec = symmetric_spectrum(M, vectors=vectors) if use_eigen else singular_spectrum(M, vectors=vectors)
    info = {"n": int(M.shape[0]), "m": int(M.shape[1]), "symmetric": bool(use_eigen),
            "transposed": bool(spec.transposed)}
    return spec, info


def _rank_config(p):
    return None if p is None else RankConfig(p)


def _emit(args, text, summary):
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)


def _summary(k_hat, r_hat):
    line = f"k_hat={k_hat} r_hat={r_hat}"
    if k_hat == 0:
        line += " (no components selected)"
    return line


def cmd_select(args):
    spec, info = _load_spectrum(args)
    n = len(spec)
    side = "symmetric" if spec.kind == "eigen" else args.side
    p_used = None
    if args.rank is not None:
        if args.rank >= n:
            raise UsageError(f"--rank must be below {n}")
        r_hat = args.rank
    else:
        rank = rank_estimate(spec, _rank_config(args.p))
        r_hat, p_used = rank.r_hat, rank.p
    k_max = args.k_max or default_k_max(n, r_hat)
    if k_max > n:
        raise UsageError(f"--k-max must be at most {n}")
    result = select(spec, args.alpha, None if side == "symmetric" else side,
                    r_hat=r_hat, k_max=k_max)
    est = result.curve.estimates
    deltas = spacings(spec).deltas
    summary = _summary(result.k_hat, r_hat)
    if args.format == "json":
        doc = {
            "version": reporting.SCHEMA_VERSION,
            "command": "select",
            "input": info,
            "r_hat": r_hat,
            "p_used": p_used,
            "alpha": args.alpha,
            "k_hat": result.k_hat,
            "curve": [{"k": i + 1, "fdr": float(v)} for i, v in enumerate(est)],
            "spacings": deltas,
            "side": side,
            "seed": None,
        }
        text = reporting.to_json(doc)
    else:
        meta = {"version": reporting.SCHEMA_VERSION, "command": "select", **info,
                "r_hat": r_hat, "p_used": p_used, "alpha": args.alpha,
                "k_hat": result.k_hat, "side": side}
        text = reporting.to_csv(meta, {"k": np.arange(1, est.size + 1), "fdr": est})
    _emit(args, text, summary)


def cmd_rank(args):
    spec, info = _load_spectrum(args)
    res = rank_estimate(spec, _rank_config(args.p))
    deltas = spacings(spec).deltas
    if args.format == "json":
        doc = {"version": reporting.SCHEMA_VERSION, "command": "rank", "input": info,
               "r_hat": res.r_hat, "p_used": res.p, "threshold": res.threshold,
               "qualifying_indices": list(res.qualifying_indices), "spacings": deltas}
        text = reporting.to_json(doc)
    else:
        meta = {"version": reporting.SCHEMA_VERSION, "command": "rank", **info,
                "r_hat": res.r_hat, "p_used": res.p, "threshold": res.threshold}
        # Row j holds Delta_{j+1}, the gap between positions j and j + 1.
        text = reporting.to_csv(meta, {"j": np.arange(1, deltas.size + 1), "spacing": deltas})
    _emit(args, text, f"r_hat={res.r_hat}")


def cmd_spectrum(args):
    spec, info = _load_spectrum(args)
    vals = spec.values
    deltas = spacings(spec).deltas if vals.size > 1 else np.zeros(0)
    if args.format == "json":
        doc = {"version": reporting.SCHEMA_VERSION, "command": "spectrum", "input": info,
               "kind": spec.kind, "values": vals, "spacings": deltas}
        text = reporting.to_json(doc)
    else:
        meta = {"version": reporting.SCHEMA_VERSION, "command": "spectrum", **info,
                "kind": spec.kind}
        text = reporting.to_csv(meta, {"i": np.arange(1, vals.size + 1), "value": vals,
                                       "spacing": deltas})
    _emit(args, text, f"{vals.size} {spec.kind} values")


def cmd_simulate(args):
    try:
        noise, signal = ensembles.preset(args.ensemble, args.signal, args.n, args.m, args.r)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    compute = ("mc_truth", "estimate") + (("oracle",) if args.oracle else ())
    if signal.r > noise.n:
        raise UsageError("--r must not exceed --n")
    cfg = montecarlo.ExperimentConfig(
        noise, signal, repetitions=args.reps, k_max=args.k_max, alpha=args.alpha,
        master_seed=args.seed, compute=compute, side=args.side,
        rank_config=_rank_config(args.p), workers=args.workers, record_timings=args.timings)
    rep = montecarlo.run_experiment(cfg)
    r_mode = Counter(rep.rank_estimates).most_common(1)[0][0]
    k_mode = max(rep.k_hat_distribution, key=lambda k: (rep.k_hat_distribution[k], -k))
    info = {"n": noise.n, "m": noise.shape[1], "symmetric": noise.symmetric, "transposed": False}
    side = "symmetric" if noise.symmetric else args.side
    est = rep.columns["fdr_estimate_mean"]
    if side == "right":
        est = rep.columns["fdr_estimate_right_mean"]
    elif side == "both":
        est = np.maximum(est, rep.columns["fdr_estimate_right_mean"])
    if args.format == "json":
        doc = {
            "version": reporting.SCHEMA_VERSION,
            "command": "simulate",
            "input": info,
            "ensemble": noise.family,
            "signal": args.signal,
            "r_hat": r_mode,
            "p_used": args.p,
            "alpha": args.alpha,
            "k_hat": k_mode,
            "curve": [{"k": i + 1, "fdr": float(v)} for i, v in enumerate(est)],
            "spacings": [],
            "side": side,
            "seed": args.seed,
            "rows": rep.rows(),
            "rank_estimates": rep.rank_estimates,
            "k_hat_distribution": rep.k_hat_distribution,
            "metadata": rep.metadata,
        }
        text = reporting.to_json(doc)
    else:
        meta = {"version": reporting.SCHEMA_VERSION, "command": "simulate", **info,
                "ensemble": noise.family, "signal": args.signal, "r_hat": r_mode,
                "alpha": args.alpha, "k_hat": k_mode, "side": side, **{
                    f"meta_{k}": v for k, v in rep.metadata.items()},
                "rank_estimates": rep.rank_estimates}
        text = reporting.to_csv(meta, rep.columns)
    _emit(args, text, _summary(k_mode, r_mode))


COMMANDS = {"select": cmd_select, "simulate": cmd_simulate, "rank": cmd_rank,
            "spectrum": cmd_spectrum}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            COMMANDS[args.command](args)
        for w in caught:
            print(f"spectral-fdr: warning: {w.message}", file=sys.stderr)
    except UsageError as exc:
        print(f"spectral-fdr: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (MatrixParseError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"spectral-fdr: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (SpectralError, BulkEvaluationError, oracle.DivergentTransformError,
            np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"spectral-fdr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"spectral-fdr: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
