"""Command line interface.

    optdmd fit data.csv --rank 2 [--method opt] [--out result.json]
    optdmd bench ex1 --trials 10 --seed 7 --out runs/ex1
    optdmd rank data.csv [--sigma 0.1]

Failures exit nonzero and print one JSON line ``{"error": kind, "message": ...}``
on stderr.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__
from .baselines import (
    GavishDonohoKnownSigma,
    GavishDonohoMedian,
    NuclearEnergy,
    SnapshotPairs,
    exact_dmd,
    fb_dmd,
    select_rank,
    tls_dmd,
)
from .benchmark import METHODS, default_config, run_benchmark, write_outputs
from .errors import OptDmdError
from .generators import EX1_EIGS, EX2_EIGS
from .io import load_snapshots_csv, result_to_dict
from .optimized import OptDmdConfig, Variant, fit
from .varpro import VarProOptions

FIT_METHODS = ("opt", "approx", "exact", "fb", "tls")


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _rank_arg(text):
    return "auto" if text == "auto" else int(text)


def _build_parser():
    p = argparse.ArgumentParser(prog="optdmd", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit one DMD to a snapshot CSV and emit result JSON")
    f.add_argument("data", help="CSV with header 't,x1,...'; one row per snapshot")
    f.add_argument("--rank", type=_rank_arg, default="auto", help="integer or 'auto' (Gavish-Donoho median)")
    f.add_argument("--method", choices=FIT_METHODS, default="opt")
    f.add_argument("--jacobian", choices=("full", "kaufman"), default="full")
    f.add_argument("--max-iters", type=int, default=30)
    f.add_argument("--out", help="result JSON path (default: stdout)")

    b = sub.add_parser("bench", help="Monte-Carlo noise sweep")
    b.add_argument("example", choices=("ex1", "ex2", "ex3", "user"))
    b.add_argument("--data", help="snapshot CSV for 'user'")
    b.add_argument("--m", type=_int_list, help="comma-separated snapshot counts")
    b.add_argument("--sigma2", type=_float_list, help="comma-separated noise variances")
    b.add_argument("--trials", type=int)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--rank", type=_rank_arg)
    b.add_argument("--methods", type=lambda s: tuple(s.split(",")), default=METHODS)
    b.add_argument("--dt", type=float, default=0.1, help="step for ex1/ex3")
    b.add_argument("--out", default="bench-out", help="output directory")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--timing", action="store_true", help="also write wall-clock times (not reproducible)")
    b.add_argument("--jitter-redraw", action="store_true", help="ex3: redraw jitter that reorders samples")
    b.add_argument("--full-scale", action="store_true", help="1000 trials and the full snapshot sweep")

    r = sub.add_parser("rank", help="report hard-threshold ranks for a snapshot CSV")
    r.add_argument("data")
    r.add_argument("--sigma", type=float, help="known noise level for the Gavish-Donoho formula")
    return p


def _auto_rank(data):
    s = np.linalg.svd(data.states, compute_uv=False)
    return select_rank(s, *data.states.shape, GavishDonohoMedian()).chosen_rank


def _cmd_fit(args):
    data = load_snapshots_csv(args.data)
    r = _auto_rank(data) if args.rank == "auto" else args.rank
    solution = None
    if args.method in ("opt", "approx"):
        opts = VarProOptions(max_outer_iters=args.max_iters, jacobian_mode=args.jacobian)
        variant = Variant.APPROXIMATE if args.method == "approx" else Variant.FULL
        result, solution = fit(data, OptDmdConfig(rank=r, variant=variant, varpro_opts=opts))
    else:
        dt = data.times[1:] - data.times[:-1]
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
            raise OptDmdError(f"method '{args.method}' needs equispaced samples; use opt or approx")
        pairs = SnapshotPairs.from_snapshots(data.states, float(dt[0]))
        result = {"exact": exact_dmd, "fb": fb_dmd, "tls": tls_dmd}[args.method](pairs, r)
    doc = result_to_dict(result, solution)
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_bench(args):
    if args.example == "user" and not args.data:
        raise OptDmdError("bench user needs --data")
    cfg = default_config(
        args.example,
        full_scale=args.full_scale,
        m_values=args.m,
        sigma2_values=args.sigma2,
        trials=args.trials,
        rank=args.rank,
        methods=args.methods,
        seed=args.seed,
        output_path=args.out,
        dt=args.dt,
        data_path=args.data,
        record_timing=args.timing,
        workers=args.workers,
        jitter_redraw=args.jitter_redraw,
    )
    records = run_benchmark(cfg)
    truth = {"ex1": EX1_EIGS, "ex3": EX1_EIGS, "ex2": EX2_EIGS}.get(args.example)
    csv_path, json_path = write_outputs(cfg, records, args.out, truth)
    failed = sum(r.failed for r in records)
    print(f"wrote {csv_path} and {json_path} ({len(records)} records, {failed} failed)")
    return 0


def _cmd_rank(args):
    data = load_snapshots_csv(args.data)
    s = np.linalg.svd(data.states, compute_uv=False)
    n, m = data.states.shape
    strategies = [("gavish_donoho_median", GavishDonohoMedian())]
    if args.sigma is not None:
        strategies.append(("gavish_donoho_known_sigma", GavishDonohoKnownSigma(args.sigma)))
    strategies += [(f"energy_{p}", NuclearEnergy(p)) for p in (0.999, 0.99, 0.9)]
    print("strategy,rank,threshold")
    for name, strat in strategies:
        sel = select_rank(s, n, m, strat)
        thr = "" if sel.threshold is None else repr(sel.threshold)
        print(f"{name},{sel.chosen_rank},{thr}")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handler = {"fit": _cmd_fit, "bench": _cmd_bench, "rank": _cmd_rank}[args.command]
    try:
        return handler(args)
    except (OptDmdError, OSError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
