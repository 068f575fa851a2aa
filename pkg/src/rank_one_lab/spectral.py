"""Rank-one perturbation families, spectral measures and cyclicity.

Inner products are linear in the first slot: ``<f, g> = sum f_i conj(g_i)``,
so the rank-one operator ``(., phi) phi`` is the matrix ``phi phi^*``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantError, PreconditionError, RepresentationError
from .limits import DEFAULT_LADDER, check_ladder, richardson_limit
from .measures import REAL_LINE, UNIT_CIRCLE, AtomicMeasure
from .operators import (
    DEFAULT_TOLS,
    HermitianOperator,
    Tolerances,
    UnitaryOperator,
    decompose,
)

CYCLIC = "cyclic"
NOT_CYCLIC = "not-cyclic"
DEGENERATE = "degenerate-spectrum"
VERDICTS = (CYCLIC, NOT_CYCLIC, DEGENERATE)


def _nonzero_vector(f, dim: int, name: str = "f") -> np.ndarray:
    v = np.asarray(f)
    if v.shape != (dim,):
        raise PreconditionError(f"{name} must have shape ({dim},), got {v.shape}")
    if not np.any(v):
        raise PreconditionError(f"{name} must be a non-zero vector")
    return v


def _unit_vector(v, dim: int, name: str) -> np.ndarray:
    v = _nonzero_vector(v, dim, name)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-12:
        raise PreconditionError(f"{name} must have unit norm, got |{name}| = {norm!r}")
    return v


def _unimodular(gamma) -> complex:
    g = complex(gamma)
    if abs(abs(g) - 1.0) > 1e-12:
        raise PreconditionError(f"gamma must be unimodular, got |gamma| = {abs(g)!r}")
    return g


def spectral_measure(op, phi, tols: Tolerances = DEFAULT_TOLS, decomposition=None) -> AtomicMeasure:
    """Spectral measure of ``op`` with respect to ``phi``.

    Atoms sit at the eigenvalues with weights ``|<phi, u_k>|^2``; the atoms
    of a repeated eigenvalue are merged, which gives the squared norm of
    the projection of ``phi`` onto the eigenspace.
    """
    phi = _nonzero_vector(phi, op.dim, "phi")
    dec = decomposition or decompose(op, tols)
    weights = np.abs(dec.couplings(phi)) ** 2
    if isinstance(op, UnitaryOperator):
        lam = dec.eigenvalues / np.abs(dec.eigenvalues)
        return AtomicMeasure(UNIT_CIRCLE, lam, weights, merge_tol=tols.atom_merge)
    return AtomicMeasure(REAL_LINE, dec.eigenvalues, weights, merge_tol=tols.atom_merge)


def perturb_sa(a: HermitianOperator, phi, alpha: float) -> HermitianOperator:
    """``A + alpha (., phi) phi``."""
    phi = _unit_vector(phi, a.dim, "phi")
    alpha = float(alpha)
    if alpha == 0.0:
        return a
    return HermitianOperator(a.entries + alpha * np.outer(phi, phi.conj()))


def perturb_unitary(u: UnitaryOperator, b, gamma) -> UnitaryOperator:
    """``U + (gamma - 1) (., U^{-1} b) b``; unitary for every unimodular gamma."""
    b = _unit_vector(b, u.dim, "b")
    gamma = _unimodular(gamma)
    if gamma == 1:
        return u
    u_inv_b = u.entries.conj().T @ b
    return UnitaryOperator(u.entries + (gamma - 1.0) * np.outer(b, u_inv_b.conj()))


@dataclass(frozen=True)
class CyclicityEntry:
    verdict: str
    min_coupling: float
    min_gap: float
    parameter: object = None


def is_cyclic(op, f, tols: Tolerances = DEFAULT_TOLS, decomposition=None, parameter=None) -> CyclicityEntry:
    """Finite-dimensional cyclicity: simple spectrum and ``<f, u_k> != 0`` for all k.

    A spectrum with a gap at or below ``tols.gap * |op|`` is reported as
    degenerate; no vector can be cyclic then, and the coupling witness is
    basis dependent.
    """
    f = _nonzero_vector(f, op.dim)
    dec = decomposition or decompose(op, tols)
    min_gap = dec.min_gap()
    min_coupling = float(np.abs(dec.couplings(f)).min())
    if not min_gap > tols.gap * op.norm:
        verdict = DEGENERATE
    elif min_coupling > tols.cyc * np.linalg.norm(f):
        verdict = CYCLIC
    else:
        verdict = NOT_CYCLIC
    return CyclicityEntry(verdict, min_coupling, min_gap, parameter)


@dataclass(frozen=True)
class CyclicityReport:
    entries: tuple

    def __len__(self):
        return len(self.entries)

    def count(self, verdict: str) -> int:
        return sum(e.verdict == verdict for e in self.entries)

    @property
    def cyclic_count(self) -> int:
        return self.count(CYCLIC)

    @property
    def noncyclic_count(self) -> int:
        return self.count(NOT_CYCLIC)

    @property
    def degenerate_count(self) -> int:
        return self.count(DEGENERATE)

    def exceptional_parameters(self) -> list:
        return [e.parameter for e in self.entries if e.verdict != CYCLIC]

    def summary(self) -> dict:
        return {
            "points": len(self.entries),
            "cyclic": self.cyclic_count,
            "not_cyclic": self.noncyclic_count,
            "degenerate": self.degenerate_count,
        }


@dataclass(frozen=True, eq=False)
class Representation:
    """Values of ``f_alpha = V_alpha f`` on the atoms of ``mu_alpha``."""

    eigenvalues: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def cauchy(self, z, weighted: bool = True):
        """``K_{f_alpha mu_alpha}(z)`` (or ``K_{mu_alpha}`` with ``weighted=False``)."""
        z = np.asarray(z, dtype=complex)
        num = self.weights * (self.values if weighted else 1.0)
        return (num / (self.eigenvalues - z[..., None])).sum(axis=-1)


def require_cyclic(op, phi, tols: Tolerances = DEFAULT_TOLS, name: str = "phi") -> CyclicityEntry:
    entry = is_cyclic(op, phi, tols)
    if entry.verdict != CYCLIC:
        raise PreconditionError(
            f"{name} is not cyclic for the base operator ({entry.verdict}; "
            f"min_coupling={entry.min_coupling:.3e}, min_gap={entry.min_gap:.3e})"
        )
    return entry


def spectral_representation(a: HermitianOperator, phi, alpha: float, f, tols: Tolerances = DEFAULT_TOLS,
                            check_base: bool = True) -> Representation:
    """``f_alpha(lambda_k) = <f, u_k> / <phi, u_k>`` for the eigenpairs of ``A_alpha``.

    Dividing by ``<phi, u_k>`` fixes the only eigenvector normalisation for
    which ``V_alpha phi = 1``.
    """
    f = _nonzero_vector(f, a.dim)
    if check_base:
        require_cyclic(a, phi, tols)
    a_alpha = perturb_sa(a, phi, alpha)
    dec = decompose(a_alpha, tols)
    if not dec.min_gap() > tols.gap * a_alpha.norm:
        raise RepresentationError(f"spectrum of A_alpha is not simple (min gap {dec.min_gap():.3e})")
    c_phi = dec.couplings(phi)
    if np.abs(c_phi).min() < tols.cyc:
        raise RepresentationError(
            f"coupling of phi to an eigenvector of A_alpha is {np.abs(c_phi).min():.3e} < {tols.cyc:.1e}"
        )
    return Representation(dec.eigenvalues, np.abs(c_phi) ** 2, dec.couplings(f) / c_phi)


def boundary_ratio(op: HermitianOperator, f, phi, x: float, ladder=DEFAULT_LADDER) -> complex:
    """Limit of ``<(A - z)^{-1} f, phi> / <(A - z)^{-1} phi, phi>`` as ``z = x + iy``, ``y -> 0``.

    Computed from linear solves only, without eigenvectors.
    """
    h = check_ladder(ladder)
    vals = [op.resolvent_pairing(f, phi, x + 1j * y) / op.resolvent_pairing(phi, phi, x + 1j * y) for y in h]
    return richardson_limit(h, vals)


@dataclass(frozen=True)
class AronszajnKreinResult:
    residual: float
    ratio_residual: float
    evaluated: int
    skipped: tuple = field(default=())


def aronszajn_krein_residual(a: HermitianOperator, phi, f, alpha: float, beta: float, z_grid,
                             guard: float = 1e-12, tols: Tolerances = DEFAULT_TOLS) -> AronszajnKreinResult:
    """Check ``K_{f_a mu_a} = K_{f_b mu_b} / (1 + (a - b) K_{mu_b})`` on ``z_grid``.

    Both sides come from separate eigendecompositions of ``A_alpha`` and
    ``A_beta``. Also reports the deviation of ``K_{f_a mu_a} / K_{mu_a}``
    from the unperturbed ratio ``K_{f_0 mu_0} / K_{mu_0}``. Grid points where
    the denominator is below ``guard`` are skipped.
    """
    z = np.atleast_1d(np.asarray(z_grid, dtype=complex))
    if np.any(z.imag == 0):
        raise PreconditionError("z_grid must lie off the real axis")
    require_cyclic(a, phi, tols)
    rep_a = spectral_representation(a, phi, alpha, f, tols, check_base=False)
    rep_b = rep_a if beta == alpha else spectral_representation(a, phi, beta, f, tols, check_base=False)
    rep_0 = rep_a if alpha == 0 else spectral_representation(a, phi, 0.0, f, tols, check_base=False)

    denom = 1.0 + (alpha - beta) * rep_b.cauchy(z, weighted=False)
    k_mu_a = rep_a.cauchy(z, weighted=False)
    k_mu_0 = rep_0.cauchy(z, weighted=False)
    keep = (np.abs(denom) >= guard) & (np.abs(k_mu_a) >= guard) & (np.abs(k_mu_0) >= guard)
    zk = z[keep]
    if zk.size == 0:
        return AronszajnKreinResult(0.0, 0.0, 0, tuple(z.tolist()))
    lhs = rep_a.cauchy(zk)
    rhs = rep_b.cauchy(zk) / denom[keep]
    ratio_a = lhs / k_mu_a[keep]
    ratio_0 = rep_0.cauchy(zk) / k_mu_0[keep]
    return AronszajnKreinResult(
        residual=float(np.abs(lhs - rhs).max()),
        ratio_residual=float(np.abs(ratio_a - ratio_0).max()),
        evaluated=int(zk.size),
        skipped=tuple(z[~keep].tolist()),
    )


def ratio_alpha_deviation(a: HermitianOperator, phi, f, alphas, z_grid, tols: Tolerances = DEFAULT_TOLS) -> float:
    """Max over ``alphas`` and ``z_grid`` of ``|K_{f_a mu_a}/K_{mu_a} - K_{f_0 mu_0}/K_{mu_0}|``."""
    z = np.atleast_1d(np.asarray(z_grid, dtype=complex))
    require_cyclic(a, phi, tols)
    rep_0 = spectral_representation(a, phi, 0.0, f, tols, check_base=False)
    ref = rep_0.cauchy(z) / rep_0.cauchy(z, weighted=False)
    worst = 0.0
    for alpha in alphas:
        rep = spectral_representation(a, phi, alpha, f, tols, check_base=False)
        ratio = rep.cauchy(z) / rep.cauchy(z, weighted=False)
        worst = max(worst, float(np.abs(ratio - ref).max()))
    return worst


def ad_disjointness(a: HermitianOperator, phi, alpha: float, beta: float, tols: Tolerances = DEFAULT_TOLS) -> float:
    """Smallest distance between an eigenvalue of ``A_alpha`` and one of ``A_beta``."""
    require_cyclic(a, phi, tols)
    lam_a = np.linalg.eigvalsh(perturb_sa(a, phi, alpha).entries)
    lam_b = np.linalg.eigvalsh(perturb_sa(a, phi, beta).entries)
    return float(np.abs(lam_a[:, None] - lam_b[None, :]).min())


@dataclass(frozen=True, eq=False)
class RankOneFamily:
    """``{A + alpha (., phi) phi}`` over real alphas, or ``{U_gamma}`` over unimodular gammas."""

    base: object
    direction: np.ndarray
    parameter_grid: tuple

    def __post_init__(self):
        if not isinstance(self.base, (HermitianOperator, UnitaryOperator)):
            raise InvariantError("base must be a HermitianOperator or UnitaryOperator")
        d = np.asarray(self.direction)
        try:
            _unit_vector(d, self.base.dim, "direction")
        except PreconditionError as exc:
            raise InvariantError(str(exc)) from exc
        grid = np.atleast_1d(np.asarray(self.parameter_grid))
        if self.unitary:
            grid = grid.astype(complex)
            if grid.size and np.abs(np.abs(grid) - 1).max() > 1e-12:
                raise InvariantError("unitary family parameters must be unimodular")
        else:
            if np.iscomplexobj(grid):
                raise InvariantError("self-adjoint family parameters must be real")
            grid = grid.astype(float)
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "parameter_grid", tuple(grid.tolist()))

    @property
    def unitary(self) -> bool:
        return isinstance(self.base, UnitaryOperator)

    def operator(self, parameter):
        if self.unitary:
            return perturb_unitary(self.base, self.direction, parameter)
        return perturb_sa(self.base, self.direction, parameter)


def uniform_grid(lo: float, hi: float, n: int, jitter: float = 0.0, seed=None) -> np.ndarray:
    """``n`` equispaced points on ``[lo, hi]``, optionally shifted by seeded jitter.

    ``jitter`` is a fraction of the spacing; endpoints stay inside the interval.
    """
    grid = np.linspace(lo, hi, n)
    if jitter and n > 1:
        rng = np.random.default_rng(seed)
        step = (hi - lo) / (n - 1)
        grid = np.clip(grid + jitter * step * rng.uniform(-0.5, 0.5, n), lo, hi)
    return grid


def unit_circle_grid(n: int, offset: float = 0.0) -> np.ndarray:
    """``exp(2 pi i (k + offset) / n)`` for ``k = 0..n-1``."""
    return np.exp(2j * np.pi * (np.arange(n) + offset) / n)


def cyclicity_sweep(family: RankOneFamily, f, tols: Tolerances = DEFAULT_TOLS, workers: int | None = None,
                    check_base: bool = True) -> CyclicityReport:
    """Cyclicity verdict of ``f`` for every operator in the family, in grid order."""
    f = _nonzero_vector(f, family.base.dim)
    if check_base:
        require_cyclic(family.base, family.direction, tols, name="direction")

    def one(param):
        return is_cyclic(family.operator(param), f, tols, parameter=param)

    params = family.parameter_grid
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = tuple(pool.map(one, params))
    else:
        entries = tuple(one(p) for p in params)
    return CyclicityReport(entries)
