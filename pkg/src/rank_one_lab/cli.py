"""``rank-one-lab`` command line.

Every run writes ``{"schema", "header", "body"}``: the header holds the
resolved configuration and a timestamp, the body is deterministic for a
given invocation. Exit status is 0 on success, 2 when a checked identity
or theorem fails, 1 on bad input.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .anderson import (
    AndersonConfig,
    LatticeBox,
    PotentialDistribution,
    TestVector,
    affine_line_sweep,
    cyclicity_mc,
    sample_potential,
)
from .clark import FiniteBlaschke, TrigPolynomial, clark_measure, herglotz_residual, spectral_average
from .errors import PreconditionError, RankOneLabError
from .hermitian import (
    ComplexPolynomial,
    hermitian_from_roots,
    hermitian_symmetry_defect,
    level_set_theorem_check,
    pw_euler_decompose,
    pw_level_progression_check,
    random_paley_wiener,
    random_self_reciprocal,
    remark_roots,
    sample_entire,
)
from .operators import DEFAULT_TOLS, Tolerances, decompose, random_hermitian, random_unit_vector
from .serialize import SCHEMA, dumps_body, measure_to_json, report_to_csv, report_to_json, to_jsonable
from .spectral import (
    RankOneFamily,
    aronszajn_krein_residual,
    cyclicity_sweep,
    ratio_alpha_deviation,
    spectral_measure,
    uniform_grid,
)

OUTPUT_DIR_ENV = "RANK_ONE_LAB_OUTPUT_DIR"
CSV_COMMANDS = ("sweep-alpha", "affine-sweep")


class InputError(Exception):
    """Bad command-line or config input; ``field`` names the offending option."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError("arguments", message)


def parse_complex(text) -> complex:
    """Accepts ``i``, ``-i``, ``1+2i``, ``0.5-1j`` and plain reals."""
    if isinstance(text, (int, float, complex)):
        return complex(text)
    s = str(text).strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _complex_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [parse_complex(v) for v in text]
    return [parse_complex(v) for v in str(text).split(",") if v.strip()]


def _tol_override(text):
    key, sep, value = str(text).partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    return key.strip(), value.strip()


# per-subcommand options: name -> (type, default, help)
_COMMON = {
    "seed": (int, 0, "seed for every random draw"),
}
_SPECS = {
    "spectral-measure": {
        "dim": (int, 6, "matrix dimension"),
        "alpha": (float, 0.0, "coupling of the rank-one perturbation"),
        "grid": (int, 100, "off-axis points for the resolvent check"),
    },
    "sweep-alpha": {
        "dim": (int, 8, "matrix dimension"),
        "grid": (int, 10_000, "number of alpha values"),
        "lo": (float, -10.0, "smallest alpha"),
        "hi": (float, 10.0, "largest alpha"),
        "vector": (str, "orthogonal", "tested vector: phi | random | orthogonal (to one eigenvector of A)"),
    },
    "ak-check": {
        "dim": (int, 8, "matrix dimension"),
        "alpha": (float, 0.7, "first coupling"),
        "beta": (float, -1.3, "second coupling"),
        "grid": (int, 100, "off-axis evaluation points"),
        "guard": (float, 1e-6, "skip points whose denominator is below this"),
    },
    "clark": {
        "theta": (str, "zn", "inner function: zn | blaschke | random"),
        "n": (int, 4, "degree"),
        "zeros": (_complex_list, None, "comma separated zeros for --theta blaschke"),
        "gamma": (parse_complex, 1 + 0j, "unimodular Clark parameter"),
    },
    "average": {
        "n": (int, 5, "theta = z^n"),
        "degree": (int, 11, "degree of the random trigonometric polynomial"),
        "grid": (int, 64, "number of gamma nodes"),
    },
    "level-sets": {
        "n": (int, 8, "model space K_(z^n)"),
        "c": (parse_complex, None, "level; default p(xi0) for a seeded unimodular xi0"),
        "construction": (str, None, "random | two-sided (default: two-sided when c = 0)"),
        "coefficients": (_complex_list, None, "explicit coefficients a_0..a_(n-1)"),
    },
    "pw-euler": {
        "bandwidth": (float, 2.0, "exponential type a"),
        "span": (float, 20.0, "half-width of the sampled interval"),
        "c": (parse_complex, None, "level; default g1(x0) for a seeded x0"),
    },
    "anderson-mc": {
        "dim": (int, 30, "sites of the 1-D box (ignored with --config)"),
        "samples": (int, 200, "Monte Carlo samples"),
        "distribution": (str, "uniform", "uniform | gaussian | bernoulli (standard parameters)"),
        "vector": (str, "delta", "delta | random"),
        "workers": (int, 1, "threads"),
    },
    "affine-sweep": {
        "dim": (int, 10, "sites of the 1-D box"),
        "grid": (int, 1000, "number of alpha values"),
        "lo": (float, -5.0, "smallest alpha"),
        "hi": (float, 5.0, "largest alpha"),
        "direction": (str, "ones", "ones | site:K"),
        "site": (int, 0, "site of the delta test vector"),
    },
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rank-one-lab", description="Rank-one perturbation experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, table in _SPECS.items():
        p = sub.add_parser(name)
        for opt, (typ, _default, help_) in {**_COMMON, **table}.items():
            p.add_argument(f"--{opt}", type=typ, default=None, help=help_)
        p.add_argument("--tol", type=_tol_override, action="append", default=[], metavar="KEY=VALUE",
                       help=f"tolerance override, keys: {', '.join(f.name for f in dataclasses.fields(Tolerances))}")
        p.add_argument("--config", type=Path, help="JSON or TOML file of option values")
        p.add_argument("--output", type=Path, help="report path (default: stdout or $" + OUTPUT_DIR_ENV + ")")
        p.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def _load_file(path: Path) -> dict:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise InputError("config", str(exc)) from None
    try:
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            data = tomllib.loads(raw.decode())
        else:
            data = json.loads(raw)
    except ValueError as exc:
        raise InputError("config", f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise InputError("config", "top level must be a table/object")
    return data


def resolve(args) -> dict:
    """Merge defaults, config file and flags (flags win); unknown config keys are rejected."""
    table = {**_COMMON, **_SPECS[args.command]}
    opts = {k: v[1] for k, v in table.items()}
    tols = {}
    anderson = None
    if args.config is not None:
        data = _load_file(args.config)
        if args.command == "anderson-mc" and set(data) & set(AndersonConfig.KEYS):
            mc_keys = {k: data.pop(k) for k in list(data) if k in AndersonConfig.KEYS}
            try:
                anderson = AndersonConfig.from_dict(mc_keys)
            except RankOneLabError as exc:
                raise InputError("config", str(exc)) from None
        tols.update(data.pop("tol", {}) or {})
        unknown = set(data) - set(table)
        if unknown:
            raise InputError(sorted(unknown)[0], "unknown config key")
        for k, v in data.items():
            try:
                opts[k] = table[k][0](v) if v is not None else None
            except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
                raise InputError(k, str(exc)) from None
    for k in table:
        v = getattr(args, k)
        if v is not None:
            opts[k] = v
    for k, v in args.tol:
        tols[k] = v
    names = {f.name for f in dataclasses.fields(Tolerances)}
    for k, v in tols.items():
        if k not in names:
            raise InputError(f"tol.{k}", "unknown tolerance")
        try:
            tols[k] = float(v)
        except (TypeError, ValueError):
            raise InputError(f"tol.{k}", f"not a number: {v!r}") from None
        if not tols[k] > 0:
            raise InputError(f"tol.{k}", "must be positive")
    opts["tol"] = dataclasses.asdict(DEFAULT_TOLS.replace(**tols))
    if anderson is not None:
        opts["anderson"] = anderson.to_dict()
        opts["seed"] = anderson.seed
    return opts


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def _positive(opts, *names):
    for k in names:
        if opts[k] is None or opts[k] < 1:
            raise InputError(k, "must be a positive integer")


# -- subcommands: each returns (body, status, csv_text, summary_line) -------------------------


def run_spectral_measure(o, tols):
    _positive(o, "dim", "grid")
    rng = _rng(o["seed"])
    a = random_hermitian(o["dim"], rng)
    phi = random_unit_vector(o["dim"], rng)
    from .spectral import perturb_sa
    from .measures import cauchy_transform

    op = perturb_sa(a, phi, o["alpha"])
    mu = spectral_measure(op, phi, tols)
    z = rng.uniform(-3, 3, o["grid"]) + 1j * rng.choice([-1, 1], o["grid"]) * rng.uniform(0.1, 2, o["grid"])
    err = max(abs(cauchy_transform(mu, zk) - op.resolvent_pairing(phi, phi, zk)) for zk in z)
    ok = err < 1e-9 and abs(mu.total_mass - 1) < 1e-10
    return {"measure": measure_to_json(mu), "mass": mu.total_mass, "resolvent_max_error": err}, 0 if ok else 2, None, None


def _sweep_vector(kind, a: "HermitianOperator", phi, rng):
    if kind == "phi":
        return phi
    if kind == "random":
        return random_unit_vector(a.dim, rng)
    if kind == "orthogonal":
        u = decompose(a).eigenvectors[:, 0]
        f = random_unit_vector(a.dim, rng)
        f = f - np.vdot(u, f) * u
        return f / np.linalg.norm(f)
    raise InputError("vector", f"unknown choice {kind!r}")


def run_sweep_alpha(o, tols):
    _positive(o, "dim", "grid")
    if not o["lo"] < o["hi"]:
        raise InputError("lo", "must be below --hi")
    rng = _rng(o["seed"])
    a = random_hermitian(o["dim"], rng)
    phi = random_unit_vector(o["dim"], rng)
    f = _sweep_vector(o["vector"], a, phi, rng)
    rep = cyclicity_sweep(RankOneFamily(a, phi, uniform_grid(o["lo"], o["hi"], o["grid"])), f, tols)
    return {"summary": rep.summary(), "entries": report_to_json(rep)}, 0, report_to_csv(rep), None


def run_ak_check(o, tols):
    _positive(o, "dim", "grid")
    rng = _rng(o["seed"])
    a = random_hermitian(o["dim"], rng)
    phi = random_unit_vector(o["dim"], rng)
    f = random_unit_vector(o["dim"], rng)
    z = rng.uniform(-3, 3, o["grid"]) + 1j * rng.uniform(0.05, 2, o["grid"])
    res = aronszajn_krein_residual(a, phi, f, o["alpha"], o["beta"], z, guard=o["guard"], tols=tols)
    dev = ratio_alpha_deviation(a, phi, f, np.linspace(-2, 2, 20), z[:20], tols)
    ok = res.residual < 1e-9 and dev < 1e-9
    body = {"residual": res.residual, "ratio_residual": res.ratio_residual, "evaluated": res.evaluated,
            "skipped": res.skipped, "alpha_independence": dev}
    return body, 0 if ok else 2, None, None


def run_clark(o, tols):
    _positive(o, "n")
    kind = o["theta"]
    if kind == "zn":
        theta = FiniteBlaschke.power(o["n"])
    elif kind == "blaschke":
        if not o["zeros"]:
            raise InputError("zeros", "required with --theta blaschke")
        theta = FiniteBlaschke(o["zeros"])
    elif kind == "random":
        rng = _rng(o["seed"])
        r = np.sqrt(rng.uniform(0, 0.9, o["n"] - 1))
        theta = FiniteBlaschke(np.concatenate([[0], r * np.exp(2j * np.pi * rng.random(o["n"] - 1))]))
    else:
        raise InputError("theta", f"unknown choice {kind!r}")
    sigma = clark_measure(theta, o["gamma"], tols)
    res = herglotz_residual(theta, o["gamma"], sigma)
    body = {"theta": {"zeros": [complex(z) for z in theta.zeros], "constant": complex(theta.constant)},
            "gamma": o["gamma"], "measure": measure_to_json(sigma), "mass": sigma.total_mass,
            "herglotz_residual": res}
    ok = res < 1e-8 and abs(sigma.total_mass - 1) < 1e-8
    return body, 0 if ok else 2, None, None


def run_average(o, tols):
    _positive(o, "n", "grid")
    if o["degree"] < 0:
        raise InputError("degree", "must be non-negative")
    rng = _rng(o["seed"])
    d = o["degree"]
    coeffs = {k: complex(rng.standard_normal(), rng.standard_normal()) for k in range(-d, d + 1)}
    res = spectral_average(FiniteBlaschke.power(o["n"]), TrigPolynomial(coeffs), o["grid"], tols)
    err = abs(res.lebesgue_integral - res.averaged_integral)
    body = {"lebesgue_integral": res.lebesgue_integral, "averaged_integral": res.averaged_integral, "error": err}
    return body, 0 if err < 1e-10 else 2, None, None


def run_level_sets(o, tols):
    _positive(o, "n")
    n = o["n"]
    rng = _rng(o["seed"])
    c = o["c"]
    construction = o["construction"] or ("two-sided" if c == 0 else "random")
    if o["coefficients"] is not None:
        p = ComplexPolynomial(o["coefficients"], n)
    elif construction == "two-sided":
        if n < 2:
            raise InputError("n", "two-sided construction needs n >= 2")
        p = hermitian_from_roots(n, remark_roots(n, rng))
    elif construction == "random":
        p = random_self_reciprocal(n, rng)
    else:
        raise InputError("construction", f"unknown choice {construction!r}")
    if c is None:
        c = p(np.exp(2j * np.pi * rng.random()))
    try:
        rep = level_set_theorem_check(p, c)
    except PreconditionError as exc:
        raise InputError("coefficients", str(exc)) from None
    body = {"polynomial": [complex(a) for a in p.coefficients], "n": n, "construction": construction,
            "report": rep.body()}
    return body, 0 if rep.holds else 2, None, None


def run_pw_euler(o, tols):
    a, span = o["bandwidth"], o["span"]
    if not a > 0:
        raise InputError("bandwidth", "must be positive")
    if not span > 0:
        raise InputError("span", "must be positive")
    rng = _rng(o["seed"])
    f = random_paley_wiener(a, rng)
    big = sample_entire(lambda x: np.exp(1j * a * x) * f(x), a, -span, span)
    g1, g2 = pw_euler_decompose(big)
    recon = float(np.abs(g1.values + 1j * g2.values - big.values).max())
    c = o["c"]
    if c is None:
        c = complex(g1(np.array([rng.uniform(-span / 2, span / 2)]))[0])
    reps = [pw_level_progression_check(g, c) for g in (g1, g2)]
    body = {"reconstruction_error": recon,
            "symmetry_defect": [hermitian_symmetry_defect(g1), hermitian_symmetry_defect(g2)],
            "c": c, "g1": reps[0].body(), "g2": reps[1].body()}
    ok = recon <= 1e-14 * max(1.0, float(np.abs(big.values).max())) and all(r.holds for r in reps)
    return body, 0 if ok else 2, None, None


_DISTRIBUTIONS = {
    "uniform": PotentialDistribution.uniform,
    "gaussian": PotentialDistribution.gaussian,
    "bernoulli": PotentialDistribution.bernoulli,
}


def run_anderson_mc(o, tols):
    if "anderson" in o:
        cfg = AndersonConfig.from_dict(o["anderson"])
    else:
        _positive(o, "dim", "samples")
        if o["distribution"] not in _DISTRIBUTIONS:
            raise InputError("distribution", f"unknown choice {o['distribution']!r}")
        if o["vector"] not in ("delta", "random"):
            raise InputError("vector", f"unknown choice {o['vector']!r}")
        cfg = AndersonConfig(LatticeBox((o["dim"],)), _DISTRIBUTIONS[o["distribution"]](), o["samples"],
                             o["seed"], TestVector(o["vector"]))
        o["anderson"] = cfg.to_dict()
    rep = cyclicity_mc(cfg, tols=tols, workers=o["workers"])
    body = {
        "samples": rep.samples,
        "cyclic_count": rep.cyclic_count,
        "degenerate_count": rep.degenerate_count,
        "noncyclic_count": rep.noncyclic_count,
        "absolutely_continuous": rep.absolutely_continuous,
        "failures": [{"sample_index": i, "verdict": v, "min_coupling": mc, "min_gap": mg}
                     for i, v, mc, mg in rep.failures],
    }
    return body, 0, None, rep.summary()


def run_affine_sweep(o, tols):
    _positive(o, "dim", "grid")
    n = o["dim"]
    box = LatticeBox((n,))
    cfg = AndersonConfig(box, PotentialDistribution.uniform(), 1, o["seed"])
    omega0 = sample_potential(cfg, 0)
    d = o["direction"]
    if d == "ones":
        a = np.ones(n)
    elif d.startswith("site:"):
        try:
            k = int(d[5:])
        except ValueError:
            raise InputError("direction", f"bad site in {d!r}") from None
        if not 0 <= k < n:
            raise InputError("direction", f"site {k} outside the box")
        a = np.eye(n)[k]
    else:
        raise InputError("direction", f"unknown choice {d!r}")
    if not 0 <= o["site"] < n:
        raise InputError("site", "outside the box")
    if not o["lo"] < o["hi"]:
        raise InputError("lo", "must be below --hi")
    f = np.eye(n)[o["site"]]
    rep = affine_line_sweep(box, omega0, a, uniform_grid(o["lo"], o["hi"], o["grid"]), f, tols)
    return {"summary": rep.summary(), "entries": report_to_json(rep)}, 0, report_to_csv(rep), None


HANDLERS = {
    "spectral-measure": run_spectral_measure,
    "sweep-alpha": run_sweep_alpha,
    "ak-check": run_ak_check,
    "clark": run_clark,
    "average": run_average,
    "level-sets": run_level_sets,
    "pw-euler": run_pw_euler,
    "anderson-mc": run_anderson_mc,
    "affine-sweep": run_affine_sweep,
}


def render(command, opts, body, fmt, csv_text, timestamp) -> str:
    header = {"command": command, "config": to_jsonable(opts), "timestamp": timestamp, "version": __version__}
    if fmt == "csv":
        lines = [f"# schema: {SCHEMA}", f"# header: {json.dumps(header, sort_keys=True)}"]
        return "\n".join(lines) + "\n" + csv_text
    body_text = dumps_body(body)
    head = json.dumps({"schema": SCHEMA, "header": header}, sort_keys=True, indent=2)
    # splice so the body's bytes are exactly ``dumps_body(body)``, indented one level
    return head[:-2] + ',\n  "body": ' + body_text.replace("\n", "\n  ") + "\n}\n"


def extract_body(text: str) -> str:
    """The deterministic part of a rendered report, as canonical text."""
    if text.startswith("# schema:"):
        return "".join(line + "\n" for line in text.splitlines() if not line.startswith("# "))
    return dumps_body(json.loads(text)["body"])


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        opts = resolve(args)
        if args.format == "csv" and args.command not in CSV_COMMANDS:
            raise InputError("format", f"csv output is available for {', '.join(CSV_COMMANDS)}")
        tols = Tolerances(**opts["tol"])
        body, status, csv_text, summary = HANDLERS[args.command](opts, tols)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RankOneLabError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    text = render(args.command, opts, body, args.format, csv_text, stamp)
    out = args.output
    if out is None and os.environ.get(OUTPUT_DIR_ENV):
        out = Path(os.environ[OUTPUT_DIR_ENV]) / f"{args.command}.{args.format}"
    if out is None:
        sys.stdout.write(text)
        if summary:
            print(summary, file=sys.stderr)
    else:
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(text)
        except OSError as exc:
            print(f"error: output: {exc}", file=sys.stderr)
            return 1
        if summary:
            print(summary)
    return status


if __name__ == "__main__":
    sys.exit(main())
