"""Seeded Monte-Carlo comparison of exact, fb, tls and optimized DMD.

Each (m, sigma^2, trial) cell draws one dataset from a seed derived from
``(seed, m, sigma^2, trial)`` and runs every requested method on it. Records are
collected in trial order, so output does not depend on worker scheduling.
Wall-clock timings are kept in memory but only written when asked for, so
that two runs with the same configuration produce byte-identical files.
"""

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import generators
from .baselines import (
    GavishDonohoMedian,
    SnapshotPairs,
    exact_dmd,
    fb_dmd,
    select_rank,
    tls_dmd,
)
from .diagnostics import (
    TrialRecord,
    confidence_ellipse,
    eigenvalue_match_error,
    match_eigenvalues,
    reconstruct_system_matrix,
    snapshot_residual,
)
from .errors import OptDmdError
from .optimized import OptDmdConfig, SnapshotSet, Variant, fit
from .varpro import VarProOptions

__all__ = [
    "METHODS",
    "EXAMPLES",
    "ExperimentConfig",
    "default_config",
    "trial_seed",
    "run_method",
    "run_benchmark",
    "summarize",
    "write_outputs",
]

METHODS = ("exact", "fb", "tls", "opt")
EXAMPLES = ("ex1", "ex2", "ex3", "user")

# desk-scale and full-scale sweeps
_SWEEPS = {
    "ex1": dict(m=[2**k for k in range(6, 11)], sigma2=[10.0**-k for k in (1, 3, 5, 7, 9)]),
    "ex2": dict(m=[2**7, 2**8, 2**9], sigma2=[2.0**-k for k in (2, 4, 6, 8, 10)]),
    "ex3": dict(m=[2**k for k in range(6, 11)], sigma2=[2.0**-k for k in (2, 4, 6, 8, 10)]),
    "user": dict(m=[], sigma2=[0.0]),
}
_FULL_M = {"ex1": [2**k for k in range(6, 14)], "ex2": [2**7, 2**8, 2**9], "ex3": [2**k for k in range(6, 14)]}
_DEFAULT_RANK = {"ex1": 2, "ex2": 4, "ex3": 2}


@dataclass
class ExperimentConfig:
    example: str
    m_values: list
    sigma2_values: list
    trials: int = 100
    rank: object = None  # int, "auto", or None for the example's true rank
    methods: tuple = METHODS
    seed: int = 0
    output_path: str = None
    dt: float = 0.1
    data_path: str = None
    record_timing: bool = False
    workers: int = 1
    jitter_redraw: bool = False
    varpro_opts: VarProOptions = field(default_factory=VarProOptions)

    def __post_init__(self):
        if self.example not in EXAMPLES:
            raise ValueError(f"unknown example {self.example!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.example != "user" and not self.m_values:
            raise ValueError("m_values must be nonempty")
        if self.example == "user" and not self.data_path:
            raise ValueError("user data benchmark needs data_path")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if any(s < 0 for s in self.sigma2_values):
            raise ValueError("noise variances must be nonnegative")


def default_config(example, full_scale=False, **overrides):
    sweep = _SWEEPS[example]
    cfg = dict(example=example, m_values=list(sweep["m"]), sigma2_values=list(sweep["sigma2"]))
    if full_scale:
        cfg["trials"] = 1000
        cfg["m_values"] = list(_FULL_M.get(example, sweep["m"]))
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**cfg)


def trial_seed(seed, m, sigma2, trial):
    """Deterministic 63-bit seed for one cell of the sweep."""
    sigma_bits = int(np.float64(sigma2).view(np.uint64))
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(m), sigma_bits, int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _user_data(path):
    from .io import load_snapshots_csv

    return load_snapshots_csv(path)


def _generate(cfg, m, sigma2, seed, user=None):
    sigma = math.sqrt(sigma2)
    if cfg.example == "ex1":
        return generators.gen_example1(m, cfg.dt, sigma, seed)
    if cfg.example == "ex2":
        return generators.gen_example2(m, sigma, seed)
    if cfg.example == "ex3":
        return generators.gen_example3(m, cfg.dt, sigma, seed, redraw_reordered=cfg.jitter_redraw)
    clean, ref_eigs = user
    rng = np.random.default_rng(seed)
    X = clean.states[:, :m]
    noisy = X.real + sigma * rng.standard_normal(X.shape)
    data = SnapshotSet(noisy, clean.times[:m])
    return data, generators.Truth(eigs=ref_eigs)


def run_method(name, data, r, opts=None):
    """Run one method on equispaced snapshots; ``opt`` uses the projected fit when n > r."""
    if name == "opt":
        variant = Variant.APPROXIMATE if data.n_states > r else Variant.FULL
        cfg = OptDmdConfig(rank=r, variant=variant, varpro_opts=opts or VarProOptions())
        result, _ = fit(data, cfg)
        return result
    pairs = SnapshotPairs.from_snapshots(data.states, data.nominal_dt())
    return {"exact": exact_dmd, "fb": fb_dmd, "tls": tls_dmd}[name](pairs, r)


def _choose_rank(cfg, data, truth):
    if cfg.rank == "auto":
        s = np.linalg.svd(data.states, compute_uv=False)
        return select_rank(s, *data.states.shape, GavishDonohoMedian()).chosen_rank
    if cfg.rank is not None:
        return int(cfg.rank)
    return truth.eigs.size


def _run_cell(args):
    cfg, m, sigma2, trial, user = args
    seed = trial_seed(cfg.seed, m, sigma2, trial)
    data, truth = _generate(cfg, m, sigma2, seed, user)
    r = _choose_rank(cfg, data, truth)
    records = []
    for name in cfg.methods:
        rec = TrialRecord(
            method=name, m=m, sigma2=sigma2, a_error=None, eig_error=math.nan,
            recon_error=math.nan, wall_time=math.nan, seed=seed, trial=trial,
        )
        start = time.perf_counter()
        try:
            result = run_method(name, data, r, cfg.varpro_opts)
            rec.wall_time = time.perf_counter() - start
            if truth.A is not None and data.n_states == truth.A.shape[0]:
                rec.a_error = float(np.linalg.norm(reconstruct_system_matrix(result) - truth.A))
            if result.eigenvalues.size == truth.eigs.size:
                perm = match_eigenvalues(result.eigenvalues, truth.eigs)
                rec.matched_eigs = result.eigenvalues[perm]
                rec.eig_error = eigenvalue_match_error(result.eigenvalues, truth.eigs)
            rec.recon_error = snapshot_residual(data, result.eigenvalues)
        except (OptDmdError, np.linalg.LinAlgError) as exc:
            rec.wall_time = time.perf_counter() - start
            rec.failed = True
            rec.error = f"{type(exc).__name__}: {exc}"
        records.append(rec)
    return records


def run_benchmark(cfg):
    """Run the sweep and return every ``TrialRecord`` in (m, sigma^2, trial, method) order."""
    user = None
    m_values = cfg.m_values
    if cfg.example == "user":
        clean = _user_data(cfg.data_path)
        m_values = m_values or [clean.n_times]
        r = cfg.rank if isinstance(cfg.rank, int) else None
        if r is None:
            s = np.linalg.svd(clean.states, compute_uv=False)
            r = select_rank(s, *clean.states.shape, GavishDonohoMedian()).chosen_rank
        # reference spectrum: optimized DMD on the unperturbed data
        ref = run_method("opt", clean, r, cfg.varpro_opts)
        user = (clean, ref.eigenvalues)
        cfg = ExperimentConfig(**{**cfg.__dict__, "rank": r})
    tasks = [
        (cfg, m, s2, trial, user)
        for m in m_values
        for s2 in cfg.sigma2_values
        for trial in range(cfg.trials)
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_run_cell, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))))
    else:
        chunks = [_run_cell(t) for t in tasks]
    return [rec for chunk in chunks for rec in chunk]


def _stats(values):
    v = np.asarray([x for x in values if x is not None and np.isfinite(x)], dtype=np.float64)
    if v.size == 0:
        return {"mean": None, "std": None, "n": 0}
    std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return {"mean": float(np.mean(v)), "std": std, "n": int(v.size)}


def summarize(records, truth_eigs=None, level=0.95, include_timing=False):
    """Aggregate records per (method, m, sigma^2): mean errors and eigenvalue ellipses."""
    cells = {}
    for rec in records:
        cells.setdefault((rec.method, rec.m, rec.sigma2), []).append(rec)
    out = []
    for (method, m, s2), recs in cells.items():
        ok = [r for r in recs if not r.failed]
        entry = {
            "method": method,
            "m": m,
            "sigma2": s2,
            "trials": len(recs),
            "failures": len(recs) - len(ok),
            "a_error": _stats([r.a_error for r in ok]),
            "eig_error": _stats([r.eig_error for r in ok]),
            "recon_error": _stats([r.recon_error for r in ok]),
        }
        if include_timing:
            entry["wall_time"] = _stats([r.wall_time for r in ok])
        matched = [r.matched_eigs for r in ok if r.matched_eigs is not None]
        eig_summ = []
        if matched:
            M = np.vstack(matched)
            for i in range(M.shape[1]):
                col = M[:, i]
                se = lambda x: float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
                item = {
                    "truth": None if truth_eigs is None else [float(truth_eigs[i].real), float(truth_eigs[i].imag)],
                    "mean": [float(col.real.mean()), float(col.imag.mean())],
                    "stderr": [se(col.real), se(col.imag)],
                }
                if col.size >= 3:
                    e = confidence_ellipse(col, level)
                    item["ellipse"] = {
                        "level": level,
                        "center": [e.center.real, e.center.imag],
                        "semi_major": e.semi_major,
                        "semi_minor": e.semi_minor,
                        "angle": e.angle,
                    }
                eig_summ.append(item)
        entry["eigenvalues"] = eig_summ
        out.append(entry)
    return out


def _fmt(x):
    if x is None:
        return ""
    return repr(float(x))


def write_outputs(cfg, records, out_dir, truth_eigs=None):
    """Write ``trials.csv`` (one row per record) and ``summary.json`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    n_eigs = max((r.matched_eigs.size for r in records if r.matched_eigs is not None), default=0)
    header = ["example", "method", "m", "sigma2", "trial", "seed", "failed",
              "a_error", "eig_error", "recon_error"]
    if cfg.record_timing:
        header.append("wall_time")
    for i in range(n_eigs):
        header += [f"eig{i}_re", f"eig{i}_im"]
    header.append("error")
    csv_path = os.path.join(out_dir, "trials.csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in records:
            row = [cfg.example, r.method, r.m, _fmt(r.sigma2), r.trial, r.seed, int(r.failed),
                   _fmt(r.a_error), _fmt(r.eig_error), _fmt(r.recon_error)]
            if cfg.record_timing:
                row.append(_fmt(r.wall_time))
            eigs = r.matched_eigs if r.matched_eigs is not None else [None] * n_eigs
            for z in eigs:
                row += ["", ""] if z is None else [_fmt(z.real), _fmt(z.imag)]
            row.append(r.error)
            w.writerow(row)
    summary = {
        "config": {
            "example": cfg.example,
            "m_values": list(cfg.m_values),
            "sigma2_values": [float(s) for s in cfg.sigma2_values],
            "trials": cfg.trials,
            "rank": cfg.rank,
            "methods": list(cfg.methods),
            "seed": cfg.seed,
            "dt": cfg.dt,
        },
        "cells": summarize(records, truth_eigs, include_timing=cfg.record_timing),
    }
    json_path = os.path.join(out_dir, "summary.json")
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return csv_path, json_path
