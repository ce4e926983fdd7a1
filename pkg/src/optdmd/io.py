"""CSV snapshot files and JSON result files.

Snapshot CSV: a header row whose first column is ``t``, then one row per
snapshot (``t, x_1, ..., x_n``). Real values only. Result JSON follows the
``optdmd-result-v1`` schema in ``RESULT_SCHEMA``.
"""

import csv
import json

import numpy as np

from .errors import NonMonotoneTime, OptDmdError, ParseError
from .expbasis import TimeGrid
from .optimized import SnapshotSet

__all__ = [
    "SCHEMA_VERSION",
    "RESULT_SCHEMA",
    "load_snapshots_csv",
    "save_snapshots_csv",
    "result_to_dict",
    "save_result_json",
    "load_result_json",
]

SCHEMA_VERSION = "optdmd-result-v1"

_pair = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": SCHEMA_VERSION,
    "type": "object",
    "required": [
        "schema",
        "method",
        "rank",
        "eigenvalues",
        "modes",
        "amplitudes",
        "residual_history",
        "status",
    ],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "method": {"enum": ["exact", "fb", "tls", "optimized", "approx_optimized"]},
        "rank": {"type": "integer", "minimum": 1},
        "eigenvalues": {"type": "array", "items": _pair},
        "modes": {"type": "array", "items": {"type": "array", "items": _pair}},
        "amplitudes": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "residual_history": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "status": {"type": ["string", "null"]},
        "iterations": {"type": "integer", "minimum": 0},
    },
}


def load_snapshots_csv(path):
    """Read a snapshot CSV into a ``SnapshotSet`` (states are the transposed rows)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        header = [h.strip() for h in header]
        if not header or header[0] != "t":
            raise ParseError("first header column must be 't'", line=1)
        if len(header) < 2:
            raise ParseError("no state columns", line=1)
        times, rows = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=line)
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise ParseError(str(exc), line=line) from None
            if not np.all(np.isfinite(vals)):
                raise ParseError("non-finite value", line=line)
            if times and not vals[0] > times[-1]:
                raise NonMonotoneTime(f"line {line}: time {vals[0]!r} does not exceed {times[-1]!r}")
            times.append(vals[0])
            rows.append(vals[1:])
    if not rows:
        raise ParseError("no data rows", line=2)
    return SnapshotSet(np.array(rows, dtype=np.float64).T, TimeGrid(times))


def save_snapshots_csv(data, path, names=None):
    X = data.states
    if np.any(X.imag != 0):
        raise OptDmdError("CSV snapshot files hold real data only")
    names = names or [f"x{i}" for i in range(X.shape[0])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *names])
        for j, t in enumerate(data.times):
            w.writerow([repr(float(t)), *(repr(float(v)) for v in X[:, j].real)])


def _c(z):
    return [float(np.real(z)), float(np.imag(z))]


def result_to_dict(result, solution=None):
    modes = result.modes
    return {
        "schema": SCHEMA_VERSION,
        "method": result.method.value,
        "rank": int(result.eigenvalues.size),
        "eigenvalues": [_c(z) for z in result.eigenvalues],
        "modes": [[_c(z) for z in row] for row in modes],
        "amplitudes": [float(a) for a in result.amplitudes],
        "residual_history": [] if solution is None else [float(v) for v in solution.residual_history],
        "status": None if solution is None else solution.status.value,
        "iterations": 0 if solution is None else int(solution.iterations),
    }


def save_result_json(result, solution, path):
    doc = result_to_dict(result, solution)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return doc


def load_result_json(path):
    """Parse a result file back into arrays (eigenvalues, modes, amplitudes, ...)."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema {doc.get('schema')!r}")

    def cplx(a):
        a = np.asarray(a, dtype=np.float64)
        if a.size == 0:
            return np.zeros(a.shape[:-1] or (0,), dtype=np.complex128)
        return a[..., 0] + 1j * a[..., 1]

    out = dict(doc)
    out["eigenvalues"] = cplx(doc["eigenvalues"])
    out["modes"] = cplx(doc["modes"])
    out["amplitudes"] = np.asarray(doc["amplitudes"], dtype=np.float64)
    out["residual_history"] = np.asarray(doc["residual_history"], dtype=np.float64)
    return out
