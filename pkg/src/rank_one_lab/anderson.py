"""Discrete random Schroedinger operators on finite boxes and cyclicity experiments."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import InvariantError, PreconditionError
from .operators import DEFAULT_TOLS, HermitianOperator, Tolerances
from .spectral import CYCLIC, DEGENERATE, NOT_CYCLIC, CyclicityReport, _nonzero_vector, is_cyclic

SITE_CAP = 4096
TRUNCATED = "truncated"


@dataclass(frozen=True)
class LatticeBox:
    sides: tuple
    cap: int = field(default=SITE_CAP, compare=False)
    boundary: str = TRUNCATED

    def __post_init__(self):
        sides = tuple(int(s) for s in np.atleast_1d(self.sides))
        if not sides or min(sides) < 1:
            raise InvariantError("box sides must be positive integers")
        if self.boundary != TRUNCATED:
            raise InvariantError(f"unsupported boundary {self.boundary!r}; only 'truncated' is implemented")
        if math.prod(sides) > self.cap:
            raise InvariantError(f"box has {math.prod(sides)} sites, above the cap of {self.cap}")
        object.__setattr__(self, "sides", sides)

    @property
    def dimension(self) -> int:
        return len(self.sides)

    @property
    def sites(self) -> int:
        return math.prod(self.sides)


@lru_cache(maxsize=32)
def _laplacian_entries(sides: tuple) -> np.ndarray:
    n = math.prod(sides)
    m = 2.0 * len(sides) * np.eye(n)
    idx = np.arange(n).reshape(sides)
    for axis, s in enumerate(sides):
        lo = np.take(idx, range(s - 1), axis=axis).ravel()
        hi = np.take(idx, range(1, s), axis=axis).ravel()
        m[lo, hi] = -1.0
        m[hi, lo] = -1.0
    m.setflags(write=False)
    return m


def discrete_laplacian(box: LatticeBox) -> HermitianOperator:
    """``-sum (f(x + e) - f(x))`` over unit steps, restricted to the box (sites in C order)."""
    return HermitianOperator(_laplacian_entries(box.sides))


def hamiltonian(box: LatticeBox, omega) -> HermitianOperator:
    w = np.asarray(omega, dtype=float)
    if w.shape != (box.sites,):
        raise PreconditionError(f"potential needs {box.sites} entries, got shape {w.shape}")
    return HermitianOperator(_laplacian_entries(box.sides) + np.diag(w))


@dataclass(frozen=True)
class PotentialDistribution:
    kind: str
    params: tuple

    def __post_init__(self):
        p = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        if self.kind == "uniform":
            if len(p) != 2 or not p[0] < p[1]:
                raise InvariantError("uniform(a, b) needs a < b")
        elif self.kind == "gaussian":
            if len(p) != 2 or not p[1] > 0:
                raise InvariantError("gaussian(mean, sd) needs sd > 0")
        elif self.kind == "bernoulli":
            if len(p) != 3 or not 0 <= p[0] <= 1:
                raise InvariantError("bernoulli(p, v0, v1) needs 0 <= p <= 1")
        else:
            raise InvariantError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def uniform(cls, a=0.0, b=1.0):
        return cls("uniform", (a, b))

    @classmethod
    def gaussian(cls, mean=0.0, sd=1.0):
        return cls("gaussian", (mean, sd))

    @classmethod
    def bernoulli(cls, p=0.5, v0=0.0, v1=1.0):
        return cls("bernoulli", (p, v0, v1))

    @property
    def absolutely_continuous(self) -> bool:
        return self.kind != "bernoulli"

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(self.params[0], self.params[1], size)
        if self.kind == "gaussian":
            return rng.normal(self.params[0], self.params[1], size)
        p, v0, v1 = self.params
        return np.where(rng.random(size) < p, v1, v0)

    _NAMES = {"uniform": ("a", "b"), "gaussian": ("mean", "sd"), "bernoulli": ("p", "v0", "v1")}

    def to_dict(self) -> dict:
        return {"kind": self.kind, **dict(zip(self._NAMES[self.kind], self.params))}

    @classmethod
    def from_dict(cls, d: dict):
        d = dict(d)
        kind = d.pop("kind", None)
        if kind not in cls._NAMES:
            raise InvariantError(f"distribution.kind: unknown value {kind!r}")
        names = cls._NAMES[kind]
        extra = set(d) - set(names)
        if extra:
            raise InvariantError(f"distribution: unknown key(s) {sorted(extra)}")
        missing = set(names) - set(d)
        if missing:
            raise InvariantError(f"distribution: missing key(s) {sorted(missing)}")
        return cls(kind, tuple(d[k] for k in names))


@dataclass(frozen=True, eq=False)
class TestVector:
    """``delta`` at ``site`` (0-based), a ``random`` vector from its own stream, or ``user`` values."""

    __test__ = False  # keep pytest from collecting this

    kind: str = "delta"
    site: int = 0
    values: tuple = None

    def __post_init__(self):
        if self.kind not in ("delta", "random", "user"):
            raise InvariantError(f"test_vector.kind: unknown value {self.kind!r}")
        if self.kind == "user":
            if self.values is None:
                raise InvariantError("test_vector.values required for a user vector")
            object.__setattr__(self, "values", tuple(complex(v) for v in self.values))

    def to_dict(self) -> dict:
        if self.kind == "delta":
            return {"kind": "delta", "site": self.site}
        if self.kind == "random":
            return {"kind": "random"}
        from .serialize import complex_to_json

        return {"kind": "user", "values": [complex_to_json(v) for v in self.values]}


# spawn keys below this offset index samples; the random test vector draws from its own key
_VECTOR_KEY = 2**32


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one sample, independent of every other index."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def jacobi_end_cyclic(op: HermitianOperator, site: int = 0) -> bool:
    """Exact certificate that ``delta_site`` is cyclic, for ``site`` an end of a Jacobi matrix.

    If the matrix is tridiagonal with every off-diagonal entry non-zero, the
    Krylov vectors ``delta, H delta, ...`` of an end site form a triangular
    basis, so the vector is cyclic. This needs no coupling threshold, unlike
    :func:`is_cyclic`, whose couplings decay exponentially under strong
    disorder and drop below any fixed tolerance on long chains.
    """
    m = op.entries
    n = m.shape[0]
    if site not in (0, n - 1):
        return False
    band = np.abs(np.subtract.outer(np.arange(n), np.arange(n))) <= 1
    return bool(np.all(m[~band] == 0) and np.all(np.diagonal(m, 1) != 0))


@dataclass(frozen=True, eq=False)
class AndersonConfig:
    box: LatticeBox
    distribution: PotentialDistribution
    samples: int
    seed: int
    test_vector: TestVector = field(default_factory=TestVector)

    KEYS = ("box", "distribution", "samples", "seed", "test_vector")

    def __post_init__(self):
        if int(self.samples) < 1:
            raise InvariantError("samples must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise InvariantError("seed must be a 64-bit unsigned integer")
        if self.test_vector.kind == "delta" and not 0 <= self.test_vector.site < self.box.sites:
            raise InvariantError(f"test_vector.site {self.test_vector.site} outside the box")
        if self.test_vector.kind == "user" and len(self.test_vector.values) != self.box.sites:
            raise InvariantError("test_vector.values length must equal the number of sites")

    def to_dict(self) -> dict:
        return {
            "box": {"sides": list(self.box.sides)},
            "distribution": self.distribution.to_dict(),
            "samples": int(self.samples),
            "seed": int(self.seed),
            "test_vector": self.test_vector.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AndersonConfig":
        extra = set(d) - set(cls.KEYS)
        if extra:
            raise InvariantError(f"unknown config key(s) {sorted(extra)}")
        for key in ("box", "distribution", "samples", "seed"):
            if key not in d:
                raise InvariantError(f"missing config key {key!r}")
        box = d["box"]
        if not isinstance(box, dict) or set(box) - {"sides", "cap"} or "sides" not in box:
            raise InvariantError("box: expected a table with 'sides' (and optional 'cap')")
        tv = dict(d.get("test_vector", {"kind": "delta", "site": 0}))
        if set(tv) - {"kind", "site", "values"}:
            raise InvariantError(f"test_vector: unknown key(s) {sorted(set(tv) - {'kind', 'site', 'values'})}")
        if "values" in tv:
            from .serialize import complex_from_json

            tv["values"] = [complex_from_json(v) for v in tv["values"]]
        for key in ("samples", "seed"):
            if isinstance(d[key], bool) or not isinstance(d[key], int):
                raise InvariantError(f"{key}: expected an integer, got {d[key]!r}")
        return cls(
            box=LatticeBox(tuple(box["sides"]), cap=box.get("cap", SITE_CAP)),
            distribution=PotentialDistribution.from_dict(d["distribution"]),
            samples=d["samples"],
            seed=d["seed"],
            test_vector=TestVector(**tv),
        )

    @classmethod
    def from_file(cls, path) -> "AndersonConfig":
        path = Path(path)
        text = path.read_bytes()
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            data = tomllib.loads(text.decode())
        else:
            data = json.loads(text)
        return cls.from_dict(data)


def sample_potential(config: AndersonConfig, sample_index: int) -> np.ndarray:
    return config.distribution.sample(sample_rng(config.seed, sample_index), config.box.sites)


def sample_hamiltonian(config: AndersonConfig, sample_index: int) -> HermitianOperator:
    """``H_omega = Laplacian + diag(omega)`` with ``omega`` fixed by ``(seed, sample_index)``."""
    return hamiltonian(config.box, sample_potential(config, sample_index))


def test_vector(config: AndersonConfig) -> np.ndarray:
    tv, n = config.test_vector, config.box.sites
    if tv.kind == "delta":
        v = np.zeros(n)
        v[tv.site] = 1.0
        return v
    if tv.kind == "random":
        v = sample_rng(config.seed, _VECTOR_KEY).standard_normal(n)
        return v / np.linalg.norm(v)
    return np.asarray(tv.values, dtype=complex)


test_vector.__test__ = False


@dataclass(frozen=True)
class MCReport:
    samples: int
    cyclic_count: int
    degenerate_count: int
    noncyclic_count: int
    failures: tuple  # (sample_index, verdict, min_coupling, min_gap), sorted by index
    absolutely_continuous: bool

    @property
    def cyclic_fraction(self) -> float:
        return self.cyclic_count / self.samples

    def summary(self) -> str:
        return (
            f"cyclic {self.cyclic_count}/{self.samples}, degenerate {self.degenerate_count}, "
            f"not-cyclic {self.noncyclic_count}, absolutely continuous: {str(self.absolutely_continuous).lower()}"
        )


def cyclicity_mc(config: AndersonConfig, f=None, tols: Tolerances = DEFAULT_TOLS, workers: int | None = None) -> MCReport:
    """Cyclicity of ``f`` (default: the configured test vector) over sampled potentials."""
    vec = test_vector(config) if f is None else _nonzero_vector(f, config.box.sites, "f")

    def one(i):
        return i, is_cyclic(sample_hamiltonian(config, i), vec, tols, parameter=i)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, range(config.samples)))
    else:
        results = [one(i) for i in range(config.samples)]
    counts = {CYCLIC: 0, DEGENERATE: 0, NOT_CYCLIC: 0}
    failures = []
    for i, entry in results:
        counts[entry.verdict] += 1
        if entry.verdict != CYCLIC:
            failures.append((i, entry.verdict, entry.min_coupling, entry.min_gap))
    return MCReport(
        samples=config.samples,
        cyclic_count=counts[CYCLIC],
        degenerate_count=counts[DEGENERATE],
        noncyclic_count=counts[NOT_CYCLIC],
        failures=tuple(sorted(failures)),
        absolutely_continuous=config.distribution.absolutely_continuous,
    )


def affine_line_sweep(box: LatticeBox, omega0, direction, alpha_grid, f, tols: Tolerances = DEFAULT_TOLS,
                      workers: int | None = None) -> CyclicityReport:
    """Verdicts for ``H_{omega0 + alpha a}`` along the line through ``omega0`` in direction ``a``.

    The entries are formed as ``H_{omega0} + diag(alpha a)`` so that a
    single-site direction reproduces the rank-one family bit for bit.
    """
    a = np.asarray(direction, dtype=float)
    if a.shape != (box.sites,) or not np.any(a != 0):
        raise PreconditionError("direction must be a non-zero potential vector on the box")
    base = hamiltonian(box, omega0)
    vec = _nonzero_vector(f, box.sites, "f")
    grid = [float(v) for v in np.atleast_1d(np.asarray(alpha_grid, dtype=float))]

    def one(alpha):
        op = base if alpha == 0 else HermitianOperator(base.entries + np.diag(alpha * a))
        return is_cyclic(op, vec, tols, parameter=alpha)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            entries = list(pool.map(one, grid))
    else:
        entries = [one(alpha) for alpha in grid]
    return CyclicityReport(tuple(entries))
