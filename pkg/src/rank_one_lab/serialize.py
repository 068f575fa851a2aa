"""JSON and CSV encodings with round-trip readers.

Complex numbers are ``{"re": x, "im": y}``; infinite gaps are ``null``.
Floats are written with ``repr`` precision so a reload is lossless.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .clark import FiniteBlaschke
from .errors import InvariantError
from .hermitian import ComplexPolynomial
from .measures import REAL_LINE, AtomicMeasure
from .operators import SpectralDecomposition
from .spectral import VERDICTS, CyclicityEntry, CyclicityReport

SCHEMA = "rank-one-lab/1"
CSV_COLUMNS = ("parameter", "verdict", "min_coupling", "min_gap")


def complex_to_json(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def complex_from_json(d) -> complex:
    if isinstance(d, dict):
        if set(d) != {"re", "im"}:
            raise InvariantError(f"complex number needs exactly 're' and 'im', got {sorted(d)}")
        return complex(float(d["re"]), float(d["im"]))
    if isinstance(d, (int, float)) and not isinstance(d, bool):
        return complex(d)
    raise InvariantError(f"cannot read a complex number from {d!r}")


def _finite_or_null(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _null_to_inf(x):
    return float("inf") if x is None else float(x)


def measure_to_json(mu: AtomicMeasure) -> dict:
    if mu.kind == REAL_LINE:
        locs = [float(t) for t in mu.locations]
    else:
        locs = [complex_to_json(t) for t in mu.locations]
    return {"kind": mu.kind, "atoms": [{"loc": t, "w": float(w)} for t, w in zip(locs, mu.weights)]}


def measure_from_json(d: dict) -> AtomicMeasure:
    atoms = d["atoms"]
    if d["kind"] == REAL_LINE:
        locs = [float(a["loc"]) for a in atoms]
    else:
        locs = [complex_from_json(a["loc"]) for a in atoms]
    # merging is idempotent on an already-merged atom list
    return AtomicMeasure(d["kind"], np.array(locs), np.array([float(a["w"]) for a in atoms]))


def blaschke_to_json(theta: FiniteBlaschke) -> dict:
    return {"zeros": [complex_to_json(a) for a in theta.zeros], "constant": complex_to_json(theta.constant)}


def blaschke_from_json(d: dict) -> FiniteBlaschke:
    return FiniteBlaschke([complex_from_json(a) for a in d["zeros"]], complex_from_json(d["constant"]))


def polynomial_to_json(p: ComplexPolynomial) -> dict:
    return {"n": p.n, "coefficients": [complex_to_json(a) for a in p.coefficients]}


def polynomial_from_json(d: dict) -> ComplexPolynomial:
    return ComplexPolynomial([complex_from_json(a) for a in d["coefficients"]], d["n"])


def decomposition_to_json(dec: SpectralDecomposition) -> dict:
    vecs = dec.eigenvectors
    return {
        "kind": dec.kind,
        "eigenvalues": [complex_to_json(v) if dec.kind == "unitary" else float(v) for v in dec.eigenvalues],
        "eigenvectors": [[complex_to_json(x) for x in row] for row in vecs],
    }


def decomposition_from_json(d: dict) -> SpectralDecomposition:
    if d["kind"] == "unitary":
        lam = np.array([complex_from_json(v) for v in d["eigenvalues"]])
    else:
        lam = np.array(d["eigenvalues"], dtype=float)
    vecs = np.array([[complex_from_json(x) for x in row] for row in d["eigenvectors"]])
    return SpectralDecomposition(lam, vecs, d["kind"])


def _param_to_json(p):
    if p is None or isinstance(p, (int, np.integer)) and not isinstance(p, bool):
        return None if p is None else int(p)
    if isinstance(p, (complex, np.complexfloating)):
        return complex_to_json(p)
    return float(p)


def _param_from_json(p):
    if isinstance(p, dict):
        return complex_from_json(p)
    return p


def entry_to_json(e: CyclicityEntry) -> dict:
    return {
        "parameter": _param_to_json(e.parameter),
        "verdict": e.verdict,
        "min_coupling": float(e.min_coupling),
        "min_gap": _finite_or_null(e.min_gap),
    }


def entry_from_json(d: dict) -> CyclicityEntry:
    if d["verdict"] not in VERDICTS:
        raise InvariantError(f"unknown verdict {d['verdict']!r}")
    return CyclicityEntry(d["verdict"], float(d["min_coupling"]), _null_to_inf(d["min_gap"]),
                          _param_from_json(d["parameter"]))


def report_to_json(report: CyclicityReport) -> list:
    return [entry_to_json(e) for e in report.entries]


def report_from_json(rows) -> CyclicityReport:
    return CyclicityReport(tuple(entry_from_json(r) for r in rows))


def _csv_param(p) -> str:
    if isinstance(p, (complex, np.complexfloating)):
        return repr(complex(p)).strip("()")
    return "" if p is None else repr(p) if isinstance(p, float) else str(p)


def report_to_csv(report: CyclicityReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for e in report.entries:
        w.writerow([_csv_param(e.parameter), e.verdict, repr(float(e.min_coupling)), repr(float(e.min_gap))])
    return buf.getvalue()


def _csv_param_from(s: str):
    if s == "":
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return complex(s.replace(" ", ""))


def report_from_csv(text: str) -> CyclicityReport:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise InvariantError(f"CSV header must be {','.join(CSV_COLUMNS)}")
    entries = []
    for r in rows[1:]:
        if r[1] not in VERDICTS:
            raise InvariantError(f"unknown verdict {r[1]!r}")
        entries.append(CyclicityEntry(r[1], float(r[2]), float(r[3]), _csv_param_from(r[0])))
    return CyclicityReport(tuple(entries))


def to_jsonable(obj):
    """Recursively turn numpy scalars/arrays, complex values and non-finite floats into JSON values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _finite_or_null(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_to_json(obj)
    return obj


def dumps_body(body) -> str:
    """Canonical text for a report body: sorted keys, fixed separators."""
    return json.dumps(to_jsonable(body), sort_keys=True, indent=2, allow_nan=False)
