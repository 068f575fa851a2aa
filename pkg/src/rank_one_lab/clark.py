"""Clark measures of finite Blaschke products and the model space ``K_{z^n}``.

Sign convention: a Clark measure satisfies
``(gamma + theta(z)) / (gamma - theta(z)) = int (xi + z) / (xi - z) dsigma_gamma(xi)``,
which makes ``sigma_gamma`` a probability measure when ``theta(0) = 0`` and
is equivalent to ``K_{sigma_gamma}(z) = 1 / (1 - conj(gamma) theta(z))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import InvariantError, PoleError, PreconditionError, RootFindingError, VerificationError
from .limits import DEFAULT_LADDER, check_ladder, richardson_limit
from .measures import UNIT_CIRCLE, AtomicMeasure, disk_cauchy_transform, herglotz_transform
from .operators import DEFAULT_TOLS, TWO_PI, Tolerances, UnitaryOperator, circle_arg, decompose
from .spectral import _unimodular, perturb_unitary

HERGLOTZ_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FiniteBlaschke:
    """``theta(z) = c prod_k (z - a_k) / (1 - conj(a_k) z)``."""

    zeros: tuple
    constant: complex = 1.0

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.zeros, dtype=complex))
        if a.size == 0:
            raise InvariantError("a Blaschke product needs at least one zero")
        if np.abs(a).max() >= 1 - 1e-12:
            raise InvariantError(f"zeros must lie in the open disk, max |a| = {np.abs(a).max()!r}")
        c = complex(self.constant)
        if abs(abs(c) - 1) > 1e-12:
            raise InvariantError(f"constant must be unimodular, got |c| = {abs(c)!r}")
        a.setflags(write=False)
        object.__setattr__(self, "zeros", a)
        object.__setattr__(self, "constant", c)

    @classmethod
    def power(cls, n: int) -> "FiniteBlaschke":
        """``theta(z) = z^n``."""
        if n < 1:
            raise InvariantError("degree must be at least 1")
        return cls(np.zeros(n))

    @property
    def degree(self) -> int:
        return len(self.zeros)

    @property
    def vanishes_at_origin(self) -> bool:
        return bool(np.any(np.abs(self.zeros) < 1e-15))

    def _factors(self, z):
        z = np.asarray(z, dtype=complex)[..., None]
        a = self.zeros
        return (z - a) / (1 - np.conj(a) * z), (1 - np.abs(a) ** 2) / (1 - np.conj(a) * z) ** 2

    def __call__(self, z):
        b, _ = self._factors(z)
        out = self.constant * b.prod(axis=-1)
        return complex(out) if out.ndim == 0 else out

    def derivative(self, z):
        """``theta'(z)`` by the product rule over the Moebius factors."""
        b, db = self._factors(z)
        n = self.degree
        total = 0
        for k in range(n):
            others = np.prod(np.delete(b, k, axis=-1), axis=-1) if n > 1 else 1.0
            total = total + db[..., k] * others
        out = self.constant * np.asarray(total)
        return complex(out) if out.ndim == 0 else out

    def boundary_argument(self, t):
        """Continuous lift of ``arg theta(e^{it})``, strictly increasing by ``2 pi n`` per turn.

        Uses ``arg b_a(e^{it}) = t + 2 Arg(1 - a e^{-it})``; the principal
        branch is continuous because ``Re(1 - a e^{-it}) > 0``.
        """
        t = np.asarray(t, dtype=float)
        w = 1 - self.zeros * np.exp(-1j * t)[..., None]
        return np.angle(self.constant) + self.degree * t + 2 * np.angle(w).sum(axis=-1)


def interior_grid(n: int = 200, radius: float = 0.95) -> np.ndarray:
    """Deterministic sunflower-pattern points filling the disk of the given radius."""
    k = np.arange(n)
    golden = np.pi * (3 - np.sqrt(5))
    return radius * np.sqrt((k + 0.5) / n) * np.exp(1j * golden * k)


def herglotz_residual(theta: FiniteBlaschke, gamma, sigma: AtomicMeasure, z_grid=None, clearance: float = 1e-6) -> float:
    """Max over the grid of ``|H_sigma(z) - (gamma + theta) / (gamma - theta)|``."""
    z = interior_grid() if z_grid is None else np.asarray(z_grid, dtype=complex)
    th = theta(z)
    keep = np.abs(gamma - th) >= clearance
    lhs = herglotz_transform(sigma, z[keep])
    rhs = (gamma + th[keep]) / (gamma - th[keep])
    return float(np.abs(lhs - rhs).max()) if keep.any() else 0.0


def clark_points(theta: FiniteBlaschke, gamma) -> np.ndarray:
    """The ``n`` solutions of ``theta(xi) = gamma`` on the circle, by bracketed root finding
    on the lifted boundary argument."""
    gamma = _unimodular(gamma)
    n = theta.degree
    phi0 = float(theta.boundary_argument(0.0))
    winding = (float(theta.boundary_argument(TWO_PI)) - phi0) / TWO_PI
    if abs(winding - n) > 1e-6:
        raise RootFindingError(f"boundary winding number {winding:.6f} differs from degree {n}")
    target0 = np.angle(gamma) + TWO_PI * np.ceil((phi0 - np.angle(gamma)) / TWO_PI)
    ts = []
    for j in range(n):
        target = target0 + TWO_PI * j
        g = lambda t: float(theta.boundary_argument(t)) - target  # noqa: E731
        lo, hi = g(0.0), g(TWO_PI)
        if lo == 0:
            ts.append(0.0)
            continue
        if not (lo < 0 < hi):
            raise RootFindingError(f"target {j} not bracketed on [0, 2pi] (winding number {winding:.6f})")
        ts.append(brentq(g, 0.0, TWO_PI, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
    xi = np.exp(1j * np.array(ts))
    miss = np.abs(theta(xi) - gamma).max()
    if miss > 1e-10 or len(np.unique(np.round(ts, 12))) != n:
        raise RootFindingError(
            f"isolated {len(np.unique(np.round(ts, 12)))} of {n} roots, max |theta - gamma| = {miss:.3e} "
            f"(winding number {winding:.6f})"
        )
    return xi


def clark_measure(theta: FiniteBlaschke, gamma, tols: Tolerances = DEFAULT_TOLS, verify: bool = True) -> AtomicMeasure:
    """Clark measure ``sigma_gamma`` of a finite Blaschke product with ``theta(0) = 0``.

    Atoms solve ``theta(xi) = gamma``; weights are ``1 / |theta'(xi)|``. The
    weights are only returned after the Herglotz identity holds to
    ``1e-8`` on a fixed interior grid.
    """
    if not theta.vanishes_at_origin:
        raise PreconditionError("Clark families are generated from inner functions with theta(0) = 0")
    gamma = _unimodular(gamma)
    xi = clark_points(theta, gamma)
    weights = 1.0 / np.abs(theta.derivative(xi))
    sigma = AtomicMeasure(UNIT_CIRCLE, xi, weights, merge_tol=tols.atom_merge)
    if verify:
        res = herglotz_residual(theta, gamma, sigma)
        if not res < HERGLOTZ_TOL:
            raise VerificationError(f"Herglotz identity residual {res:.3e} >= {HERGLOTZ_TOL:.0e}")
    return sigma


@dataclass(frozen=True, eq=False)
class ClarkFamily:
    theta: FiniteBlaschke
    gamma_grid: tuple

    def __post_init__(self):
        object.__setattr__(self, "gamma_grid", tuple(_unimodular(g) for g in np.atleast_1d(self.gamma_grid)))

    def measures(self, tols: Tolerances = DEFAULT_TOLS) -> list:
        return [clark_measure(self.theta, g, tols) for g in self.gamma_grid]


def circle_ad_distance(theta: FiniteBlaschke, gamma, eta) -> float:
    """Smallest distance between an atom of ``sigma_gamma`` and one of ``sigma_eta``."""
    a = clark_points(theta, gamma)
    b = clark_points(theta, eta)
    return float(np.abs(a[:, None] - b[None, :]).min())


def model_perturbation_matrix(n: int, gamma) -> UnitaryOperator:
    """Clark's unitary ``S_theta + gamma (., S* theta) 1`` on ``K_{z^n}``, basis ``1, z, ..., z^{n-1}``.

    The compressed shift sends ``z^k`` to ``z^{k+1}`` and kills ``z^{n-1}``;
    since ``S* z^n = z^{n-1}``, the rank-one term sends ``z^{n-1}`` to ``gamma``.
    """
    if n < 1:
        raise PreconditionError("n must be at least 1")
    gamma = _unimodular(gamma)
    m = np.zeros((n, n), dtype=complex)
    m[np.arange(1, n), np.arange(n - 1)] = 1.0
    m[0, n - 1] += gamma
    return UnitaryOperator(m)


@dataclass(frozen=True)
class TrigPolynomial:
    """``f(xi) = sum_k c_k xi^k`` over integer ``k`` (negative powers allowed)."""

    coefficients: dict = field(default_factory=dict)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=complex)
        out = np.zeros(xi.shape, dtype=complex)
        for k, c in self.coefficients.items():
            out = out + c * xi ** k
        return out

    @property
    def degree(self) -> int:
        return max((abs(k) for k, c in self.coefficients.items() if c != 0), default=0)

    @property
    def mean(self) -> complex:
        return complex(self.coefficients.get(0, 0))

    @classmethod
    def from_samples(cls, values) -> "TrigPolynomial":
        """Trigonometric interpolant of samples at ``exp(2 pi i j / M)``, ``j = 0..M-1``."""
        v = np.asarray(values, dtype=complex)
        m = len(v)
        if m == 0:
            raise PreconditionError("no samples")
        c = np.fft.fft(v) / m
        ks = np.fft.fftfreq(m, 1.0 / m).astype(int)
        return cls({int(k): complex(ck) for k, ck in zip(ks, c)})


class SpectralAverage(NamedTuple):
    lebesgue_integral: complex
    averaged_integral: complex


def _uniform_circle_grid(gamma_quadrature) -> np.ndarray:
    if np.ndim(gamma_quadrature) == 0:
        m = int(gamma_quadrature)
        if m < 1:
            raise PreconditionError("gamma quadrature must have at least one point")
        return np.exp(2j * np.pi * np.arange(m) / m)
    g = np.asarray(gamma_quadrature, dtype=complex)
    if g.size == 0:
        raise PreconditionError("gamma quadrature must have at least one point")
    if np.abs(np.abs(g) - 1).max() > 1e-12:
        raise PreconditionError("gamma quadrature points must be unimodular")
    args = np.sort(circle_arg(g))
    steps = np.diff(np.append(args, args[0] + TWO_PI))
    if np.abs(steps - TWO_PI / g.size).max() > 1e-9:
        raise PreconditionError("gamma quadrature must be a uniform grid on the circle")
    return g


def spectral_average(theta: FiniteBlaschke, f, gamma_quadrature, tols: Tolerances = DEFAULT_TOLS) -> SpectralAverage:
    """Both sides of ``int f dm = int (int f dsigma_gamma) dm(gamma)``.

    ``f`` is a :class:`TrigPolynomial` (Lebesgue side exact) or a vectorised
    callable on the circle (Lebesgue side by the uniform rule on the
    quadrature grid). The averaged side is the uniform rule in ``gamma``.
    """
    grid = _uniform_circle_grid(gamma_quadrature)
    if isinstance(f, TrigPolynomial):
        lebesgue = f.mean
    else:
        lebesgue = complex(np.mean(f(grid)))
    inner = [clark_measure(theta, g, tols).integrate(f) for g in grid]
    return SpectralAverage(lebesgue, complex(np.mean(inner)))


def normalized_cauchy(mu: AtomicMeasure, values, z, pole_tol: float = 1e-12):
    """``K_{f mu}(z) / K_mu(z)`` with the disk Cauchy transform."""
    z_arr = np.asarray(z, dtype=complex)
    if np.any(np.abs(z_arr) >= 1):
        raise PreconditionError("normalized Cauchy transform is evaluated inside the disk")
    den = np.asarray(disk_cauchy_transform(mu, z_arr))
    if np.any(np.abs(den) < pole_tol):
        raise PoleError("K_mu vanishes at the evaluation point")
    out = np.asarray(disk_cauchy_transform(mu, z_arr, values)) / den
    return complex(out) if out.ndim == 0 else out


def radial_boundary_value(mu: AtomicMeasure, values, xi, ladder=DEFAULT_LADDER) -> complex:
    """Limit of the normalized Cauchy transform along the radius to ``xi``."""
    h = check_ladder(ladder)
    return richardson_limit(h, [normalized_cauchy(mu, values, (1 - y) * xi) for y in h])


@dataclass(frozen=True)
class GridCheck:
    residual: float
    evaluated: int
    skipped: tuple = ()


def kernel_identity_residual(theta: FiniteBlaschke, gamma, z_grid, clearance: float = 1e-6,
                             tols: Tolerances = DEFAULT_TOLS) -> GridCheck:
    """Max of ``|K_{sigma_gamma}(z) (1 - conj(gamma) theta(z)) - 1|`` over the grid.

    Points within ``clearance`` of the level set ``theta = gamma`` are skipped.
    """
    gamma = _unimodular(gamma)
    sigma = clark_measure(theta, gamma, tols)
    z = np.atleast_1d(np.asarray(z_grid, dtype=complex))
    th = theta(z)
    keep = np.abs(th - gamma) >= clearance
    if not keep.any():
        return GridCheck(0.0, 0, tuple(z.tolist()))
    k = np.asarray(disk_cauchy_transform(sigma, z[keep]))
    res = np.abs(k * (1 - np.conj(gamma) * th[keep]) - 1).max()
    return GridCheck(float(res), int(keep.sum()), tuple(z[~keep].tolist()))


@dataclass(frozen=True, eq=False)
class CircleRepresentation:
    """``f_gamma`` on the atoms of ``sigma_gamma`` (a transported function)."""

    atoms: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def cauchy(self, z, weighted: bool = True):
        z = np.asarray(z, dtype=complex)
        num = self.weights * (self.values if weighted else 1.0)
        return (num / (1 - np.conj(self.atoms) * z[..., None])).sum(axis=-1)


def clark_unitary_model(theta: FiniteBlaschke, gamma, tols: Tolerances = DEFAULT_TOLS):
    """``U_gamma = U_1 + (gamma - 1)(., U_1^* 1) 1`` on ``L^2(sigma_1)`` in an orthonormal atom basis.

    Returns ``(U_gamma, b, sigma_1)``; ``b`` is the image of ``1``, i.e. the
    square roots of the ``sigma_1`` weights.
    """
    sigma1 = clark_measure(theta, 1.0, tols)
    w = sigma1.weights / sigma1.total_mass
    b = np.sqrt(w).astype(complex)
    u1 = UnitaryOperator(np.diag(sigma1.locations))
    return perturb_unitary(u1, b, gamma), b, sigma1


def transport(theta: FiniteBlaschke, gamma, f, tols: Tolerances = DEFAULT_TOLS) -> CircleRepresentation:
    """``f_gamma = Phi_gamma Phi_1^* f`` for ``f`` given on the atoms of ``sigma_1``.

    Eigenvector formula ``f_gamma(eta_k) = <F, v_k> / <b, v_k>`` where ``F``
    is ``f`` in the orthonormal atom basis.
    """
    u_gamma, b, sigma1 = clark_unitary_model(theta, gamma, tols)
    f = np.asarray(f, dtype=complex)
    if f.shape != b.shape:
        raise PreconditionError(f"f must have one value per atom of sigma_1 ({len(b)}), got shape {f.shape}")
    dec = decompose(u_gamma, tols)
    c_b = dec.couplings(b)
    if np.abs(c_b).min() < tols.cyc:
        raise PreconditionError("1 is numerically not cyclic for U_gamma")
    values = dec.couplings(f * b) / c_b
    atoms = dec.eigenvalues / np.abs(dec.eigenvalues)
    return CircleRepresentation(atoms, np.abs(c_b) ** 2, values)


@dataclass(frozen=True)
class DouglasCheck:
    f_discrepancy: float
    g_discrepancy: float
    fg_discrepancy: float
    evaluated: int
    skipped: tuple = ()


def douglas_ratio_check(theta: FiniteBlaschke, gamma, f, g, z_grid, guard: float = 1e-6,
                        tols: Tolerances = DEFAULT_TOLS) -> DouglasCheck:
    """Compare ``K_{f_gamma sigma_gamma} / K_{f sigma_1}`` with ``(1 - theta) / (1 - conj(gamma) theta)``.

    Done for both ``f`` and ``g``; ``fg_discrepancy`` is the largest gap
    between the two ratios, which should not depend on the function.
    """
    gamma = _unimodular(gamma)
    z = np.atleast_1d(np.asarray(z_grid, dtype=complex))
    sigma1 = clark_measure(theta, 1.0, tols)
    th = theta(z)
    expected_den = 1 - np.conj(gamma) * th
    ratios = []
    keep = np.abs(expected_den) >= guard
    for h in (f, g):
        rep = transport(theta, gamma, h, tols)
        k1 = np.asarray(disk_cauchy_transform(sigma1, z, h))
        keep &= np.abs(k1) >= guard
        ratios.append(rep.cauchy(z) / np.where(k1 == 0, 1, k1))
    if not keep.any():
        return DouglasCheck(0.0, 0.0, 0.0, 0, tuple(z.tolist()))
    expected = (1 - th[keep]) / expected_den[keep]
    rf, rg = ratios[0][keep], ratios[1][keep]
    return DouglasCheck(
        f_discrepancy=float(np.abs(rf - expected).max()),
        g_discrepancy=float(np.abs(rg - expected).max()),
        fg_discrepancy=float(np.abs(rf - rg).max()),
        evaluated=int(keep.sum()),
        skipped=tuple(z[~keep].tolist()),
    )
