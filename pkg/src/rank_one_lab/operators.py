"""Dense Hermitian and unitary operators and their eigendecompositions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DecompositionError, InvariantError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by every operation.

    ``gap`` and ``eig`` are relative to the operator norm; the rest are
    absolute (``cyc`` is multiplied by the norm of the tested vector).
    """

    hermiticity: float = 1e-12
    unitarity: float = 1e-12
    atom_merge: float = 1e-10
    eig: float = 1e-10
    cyc: float = 1e-8
    gap: float = 1e-10

    def replace(self, **changes) -> "Tolerances":
        values = {**self.__dict__, **changes}
        return Tolerances(**values)


DEFAULT_TOLS = Tolerances()


def _frozen_square(entries, name: str) -> np.ndarray:
    arr = np.array(entries)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvariantError(f"{name} entries must form a non-empty square matrix, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.number) or np.issubdtype(arr.dtype, np.integer):
        arr = arr.astype(np.complex128 if np.iscomplexobj(arr) else np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvariantError(f"{name} entries must be finite")
    arr.setflags(write=False)
    return arr


def operator_norm(entries: np.ndarray) -> float:
    """Cheap operator-norm bound: the maximum absolute row sum."""
    return float(np.abs(entries).sum(axis=1).max())


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A self-adjoint matrix. Real input stays real (faster real eigensolver)."""

    entries: np.ndarray
    tol: float = field(default=DEFAULT_TOLS.hermiticity, repr=False, compare=False)

    def __post_init__(self):
        arr = _frozen_square(self.entries, "HermitianOperator")
        asym = float(np.abs(arr - arr.conj().T).max())
        if asym > self.tol * operator_norm(arr):
            raise InvariantError(f"matrix is not Hermitian: max|A - A*| = {asym:.3e}")
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def norm(self) -> float:
        return operator_norm(self.entries)

    def resolvent_pairing(self, f, g, z: complex) -> complex:
        """``<(A - z)^{-1} f, g>`` by a direct linear solve."""
        f = np.asarray(f, dtype=complex)
        g = np.asarray(g, dtype=complex)
        x = np.linalg.solve(self.entries - z * np.eye(self.dim), f)
        return complex(np.vdot(g, x))


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    entries: np.ndarray
    tol: float = field(default=DEFAULT_TOLS.unitarity, repr=False, compare=False)

    def __post_init__(self):
        arr = _frozen_square(self.entries, "UnitaryOperator").astype(complex)
        arr.setflags(write=False)
        defect = unitarity_defect(arr)
        if defect > self.tol:
            raise InvariantError(f"matrix is not unitary: max|U*U - I| = {defect:.3e}")
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def norm(self) -> float:
        return 1.0


def unitarity_defect(entries) -> float:
    u = np.asarray(entries)
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())


def circle_arg(z) -> np.ndarray:
    """Principal argument mapped into ``[0, 2pi)``."""
    t = np.mod(np.angle(z), TWO_PI)
    # angle(1 - tiny*i) would otherwise sort last
    return np.where(t > TWO_PI - 1e-14, 0.0, t)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues in canonical order with orthonormal eigenvector columns.

    Hermitian spectra are ascending; unitary spectra are ordered by
    argument in ``[0, 2pi)``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kind: str

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def couplings(self, f) -> np.ndarray:
        """Inner products ``<f, u_k>`` for every eigenvector ``u_k``."""
        return self.eigenvectors.conj().T @ np.asarray(f)

    def min_gap(self) -> float:
        """Smallest distance between two eigenvalues (``inf`` in dimension one)."""
        lam = self.eigenvalues
        if len(lam) < 2:
            return float("inf")
        if self.kind == "hermitian":
            return float(np.diff(lam).min())
        diffs = np.abs(lam - np.roll(lam, 1))
        return float(diffs.min())


def decompose(op, tols: Tolerances = DEFAULT_TOLS) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian or unitary operator.

    Unitary operators go through the complex Schur form, which is diagonal
    for normal matrices and always yields orthonormal vectors, so clusters
    of nearby eigenvalues keep an orthonormal basis.
    """
    a = op.entries
    try:
        if isinstance(op, HermitianOperator):
            lam, vecs = np.linalg.eigh(a)
            kind = "hermitian"
        elif isinstance(op, UnitaryOperator):
            t, vecs = scipy.linalg.schur(a, output="complex")
            lam = np.diag(t)
            order = np.argsort(circle_arg(lam), kind="stable")
            lam, vecs = lam[order], vecs[:, order]
            kind = "unitary"
        else:
            raise TypeError(f"expected HermitianOperator or UnitaryOperator, got {type(op).__name__}")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise DecompositionError(
            f"eigensolver failed on a {a.shape[0]}x{a.shape[0]} matrix "
            f"(condition number {np.linalg.cond(a):.3e}): {exc}"
        ) from exc

    scale = max(op.norm, 1.0)
    residual = float(np.linalg.norm(a @ vecs - vecs * lam, axis=0).max())
    if residual > tols.eig * scale:
        raise DecompositionError(
            f"eigen-residual {residual:.3e} exceeds {tols.eig * scale:.3e} "
            f"(condition number {np.linalg.cond(a):.3e})"
        )
    ortho = float(np.abs(vecs.conj().T @ vecs - np.eye(len(lam))).max())
    if ortho > 1e-10:
        raise DecompositionError(f"eigenvectors not orthonormal: defect {ortho:.3e}")
    return SpectralDecomposition(lam, vecs, kind)


def random_hermitian(dim: int, rng: np.random.Generator, real: bool = False) -> HermitianOperator:
    g = rng.standard_normal((dim, dim))
    if not real:
        g = g + 1j * rng.standard_normal((dim, dim))
    return HermitianOperator((g + g.conj().T) / 2)


def random_unitary(dim: int, rng: np.random.Generator) -> UnitaryOperator:
    """Haar-distributed unitary via QR with the phase correction."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return UnitaryOperator(q * (d / np.abs(d)))


def random_unit_vector(dim: int, rng: np.random.Generator, real: bool = False) -> np.ndarray:
    v = rng.standard_normal(dim)
    if not real:
        v = v + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)
