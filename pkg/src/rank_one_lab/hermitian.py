"""Hermitian elements of ``K_{z^n}`` and of the Paley-Wiener model.

For ``theta = z^n`` the tilde involution ``f -> theta conj(f)`` acts on
coefficients by ``b_m = conj(a_{n-m})``; its fixed points are exactly the
self-reciprocal polynomials. On the real line the inner function is
``exp(2iax)`` and ``F -> exp(2iax) conj(F)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .clark import FiniteBlaschke, clark_measure, model_perturbation_matrix
from .errors import DegenerateElementError, InvariantError, PreconditionError, VerificationError
from .operators import DEFAULT_TOLS, Tolerances, circle_arg
from .spectral import CYCLIC, _unimodular, is_cyclic, unit_circle_grid

log = logging.getLogger(__name__)

COEFF_TOL = 1e-12
ROOT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ComplexPolynomial:
    """``p(z) = sum_m a_m z^m`` viewed as an element of ``K_{z^n}`` (needs ``len(a) <= n``)."""

    coefficients: np.ndarray
    n: int = None

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        n = len(a) if self.n is None else int(self.n)
        if len(a) > n:
            if np.any(a[n:] != 0):
                raise InvariantError(f"{len(a)} coefficients do not fit in K_(z^{n})")
            a = a[:n]
        a = np.concatenate([a, np.zeros(n - len(a), dtype=complex)])
        a.setflags(write=False)
        object.__setattr__(self, "coefficients", a)
        object.__setattr__(self, "n", n)

    def __call__(self, z):
        out = np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), self.coefficients)
        return complex(out) if np.ndim(out) == 0 else out

    def derivative(self, z):
        d = np.polynomial.polynomial.polyder(self.coefficients) if self.n > 1 else np.zeros(1)
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), d)

    def __add__(self, other: "ComplexPolynomial") -> "ComplexPolynomial":
        if other.n != self.n:
            raise InvariantError("polynomials live in different model spaces")
        return ComplexPolynomial(self.coefficients + other.coefficients, self.n)

    def __sub__(self, other: "ComplexPolynomial") -> "ComplexPolynomial":
        return self + ComplexPolynomial(-other.coefficients, other.n)

    def scaled(self, s: complex) -> "ComplexPolynomial":
        return ComplexPolynomial(s * self.coefficients, self.n)


@dataclass(frozen=True)
class SelfReciprocity:
    ok: bool
    violations: tuple = ()

    def __bool__(self):
        return self.ok


def is_self_reciprocal(p: ComplexPolynomial, tol: float = COEFF_TOL) -> SelfReciprocity:
    """``a_0 = 0`` and ``a_m = conj(a_{n-m})`` for ``m = 1..n-1``; violating indices as witness."""
    a = p.coefficients
    bad = []
    if abs(a[0]) > tol:
        bad.append(0)
    for m in range(1, p.n):
        if abs(a[m] - np.conj(a[p.n - m])) > tol:
            bad.append(m)
    return SelfReciprocity(not bad, tuple(bad))


def tilde_transform(p: ComplexPolynomial) -> ComplexPolynomial:
    """``z^n conj(p)`` on the circle, as an element of ``K_{z^n}``."""
    a = p.coefficients
    if abs(a[0]) > COEFF_TOL:
        raise PreconditionError("tilde transform needs p(0) = 0 to stay in K_(z^n)")
    b = np.zeros(p.n, dtype=complex)
    b[1:] = np.conj(a[1:][::-1])
    return ComplexPolynomial(b, p.n)


def hermitian_from_roots(n: int, roots, scale: complex = 1.0, retry: bool = True) -> ComplexPolynomial:
    """``q = p + p~`` for ``p = scale * z * prod_k (z - beta_k)``.

    ``p`` has degree ``n - 1`` with roots ``0, beta_1..beta_{n-2}``; ``p~``
    vanishes at the same points, so ``q`` is a Hermitian element with that
    zero set. If ``q = 0`` then ``p`` is anti-Hermitian and the scale is
    multiplied by ``1j`` (which cannot fail again); with ``retry=False``
    the collapse raises :class:`DegenerateElementError` instead.
    """
    beta = np.atleast_1d(np.asarray(roots, dtype=complex)) if len(roots) else np.zeros(0, dtype=complex)
    if n < 2 or len(beta) != n - 2:
        raise PreconditionError(f"need n >= 2 and n - 2 = {n - 2} roots, got {len(beta)}")
    if beta.size and np.abs(np.abs(beta) - 1).max() > 1e-12:
        raise PreconditionError("roots must be unimodular")
    monic = np.poly(beta) if beta.size else np.ones(1)
    p = ComplexPolynomial(np.concatenate([[0], scale * monic[::-1]]), n)
    q = p + tilde_transform(p)
    if np.abs(q.coefficients).max() <= 1e-14 * np.abs(p.coefficients).max():
        if not retry:
            raise DegenerateElementError("p + p~ vanishes identically; retry with a rescaled p")
        log.debug("p + p~ collapsed at scale %r, retrying with %r", scale, 1j * scale)
        return hermitian_from_roots(n, beta, 1j * scale, retry=False)
    if beta.size and np.abs(q(beta)).max() > 1e-10:
        raise VerificationError(f"constructed element misses its roots by {np.abs(q(beta)).max():.3e}")
    return q


def remark_roots(n: int, rng: np.random.Generator, min_separation: float = 1e-2) -> np.ndarray:
    """``n - 2`` unimodular points whose ``n``-th powers are pairwise separated."""
    while True:
        beta = np.exp(2j * np.pi * rng.random(n - 2))
        powers = beta ** n
        if n - 2 < 2 or np.abs(powers[:, None] - powers[None, :])[np.triu_indices(n - 2, 1)].min() > min_separation:
            return beta


def random_self_reciprocal(n: int, rng: np.random.Generator) -> ComplexPolynomial:
    """A random element of ``K_{z^n}`` fixed by the tilde involution."""
    a = np.zeros(n, dtype=complex)
    for m in range(1, n // 2 + 1):
        k = n - m
        if m == k:
            a[m] = rng.standard_normal()
        else:
            a[m] = rng.standard_normal() + 1j * rng.standard_normal()
            a[k] = np.conj(a[m])
    return ComplexPolynomial(a, n)


def _roots_on_circle(p: ComplexPolynomial, c: complex, tol: float = ROOT_TOL) -> np.ndarray:
    coeffs = p.coefficients.copy()
    coeffs[0] -= c
    nz = np.flatnonzero(coeffs)
    if nz.size == 0 or nz[-1] == 0:
        return np.zeros(0, dtype=complex)
    roots = np.roots(coeffs[: nz[-1] + 1][::-1])
    for _ in range(3):
        d = p.derivative(roots)
        step = np.where(np.abs(d) > 1e-300, (p(roots) - c) / np.where(d == 0, 1, d), 0)
        cand = roots - step
        better = np.abs(p(cand) - c) < np.abs(p(roots) - c)
        roots = np.where(better, cand, roots)
    keep = (np.abs(np.abs(roots) - 1) <= tol) & (np.abs(p(roots) - c) <= tol)
    found = roots[keep]
    found = found[np.argsort(circle_arg(found), kind="stable")]
    uniq = []
    for z in found:
        if not uniq or abs(z - uniq[-1]) > tol:
            uniq.append(z)
    return np.array(uniq, dtype=complex)


def level_set_on_circle(p: ComplexPolynomial, c: complex) -> np.ndarray:
    """Unimodular solutions of ``p(z) = c``: companion-matrix roots of ``p - c``, Newton-polished,
    kept when ``||z| - 1| <= 1e-8`` and ``|p(z) - c| <= 1e-8``."""
    c = complex(c)
    if c == 0:
        raise PreconditionError("level sets are taken at c != 0")
    return _roots_on_circle(p, c)


@dataclass(frozen=True)
class LevelSetReport:
    holds: bool
    c: complex
    exceptional_gamma: complex | None
    roots: tuple
    deviations: tuple
    violators: tuple
    charged_parameters: tuple = ()

    def body(self) -> dict:
        from .serialize import complex_to_json

        return {
            "holds": self.holds,
            "c": complex_to_json(self.c),
            "exceptional_gamma": None if self.exceptional_gamma is None else complex_to_json(self.exceptional_gamma),
            "roots": [complex_to_json(z) for z in self.roots],
            "deviations": list(self.deviations),
            "violators": [complex_to_json(z) for z in self.violators],
            "charged_parameters": [
                {"gamma": complex_to_json(g), "mass": m} for g, m in self.charged_parameters
            ],
        }


def _charged(roots: np.ndarray, n: int) -> tuple:
    """Clark parameters ``gamma = z^n`` hit by the roots, with their ``sigma_gamma`` mass."""
    out = []
    for g in roots ** n:
        for i, (h, m) in enumerate(out):
            if abs(g - h) <= ROOT_TOL:
                out[i] = (h, m + 1.0 / n)
                break
        else:
            out.append((complex(g), 1.0 / n))
    return tuple(out)


def level_set_theorem_check(p: ComplexPolynomial, c: complex, tol: float = ROOT_TOL) -> LevelSetReport:
    """Every unimodular root of ``p - c`` must satisfy ``z^n = exp(2i arg c)``.

    With ``c = 0`` there is no exceptional parameter, so any zero of ``p``
    on the circle is a violator; for the two-sided construction of
    :func:`hermitian_from_roots` the check therefore fails, and
    ``charged_parameters`` lists the ``n - 2`` Clark parameters whose
    measures give the zero set mass ``1/n``.
    """
    if not is_self_reciprocal(p):
        raise PreconditionError("level-set check needs a self-reciprocal polynomial")
    c = complex(c)
    roots = _roots_on_circle(p, c)
    if c == 0:
        gamma_star = None
        dev = np.full(len(roots), np.inf)
    else:
        gamma_star = np.exp(2j * np.angle(c))
        dev = np.abs(roots ** p.n - gamma_star)
    bad = roots[~(dev <= tol)]
    return LevelSetReport(
        holds=bad.size == 0,
        c=c,
        exceptional_gamma=None if gamma_star is None else complex(gamma_star),
        roots=tuple(complex(z) for z in roots),
        deviations=tuple(float(d) for d in dev),
        violators=tuple(complex(z) for z in bad),
        charged_parameters=_charged(roots, p.n),
    )


@dataclass(frozen=True)
class HermiteAngleReport:
    max_deviation: float
    integral_magnitude: float
    skipped_zeros: int


def hermite_angle_check(p: ComplexPolynomial, gamma, zero_tol: float = 1e-10) -> HermiteAngleReport:
    """``|sin(arg p(xi) - arg(gamma)/2)|`` over the atoms of ``sigma_gamma`` and ``|int p dsigma_gamma|``.

    Atoms where ``|p| <= zero_tol`` have no argument and are counted separately.
    """
    if not is_self_reciprocal(p):
        raise PreconditionError("angle check needs a Hermitian element (self-reciprocal polynomial)")
    gamma = _unimodular(gamma)
    sigma = clark_measure(FiniteBlaschke.power(p.n), gamma)
    vals = p(sigma.locations)
    live = np.abs(vals) > zero_tol
    dev = np.abs(np.sin(np.angle(vals[live]) - np.angle(gamma) / 2))
    return HermiteAngleReport(
        max_deviation=float(dev.max()) if dev.size else 0.0,
        integral_magnitude=abs(sigma.integrate(vals)),
        skipped_zeros=int((~live).sum()),
    )


@dataclass(frozen=True)
class ShiftedCyclicity:
    min_coupling: float
    checked: int
    excluded: int
    failures: tuple


def shifted_cyclicity_check(p: ComplexPolynomial, c: complex, n_gamma: int = 720, exclusion: float = 1e-3,
                            tols: Tolerances = DEFAULT_TOLS) -> ShiftedCyclicity:
    """Cyclicity of ``p - c 1`` for the Clark unitaries on ``K_{z^n}``.

    Sweeps ``gamma`` over ``n_gamma`` points, skipping the arc of radius
    ``exclusion`` around ``exp(2i arg c)``.
    """
    c = complex(c)
    if c == 0:
        raise PreconditionError("c must be non-zero")
    v = p.coefficients.copy()
    v[0] -= c
    gamma_star = np.exp(2j * np.angle(c))
    worst, checked, excluded, failures = np.inf, 0, 0, []
    for g in unit_circle_grid(n_gamma, offset=0.5):
        if abs(g - gamma_star) < exclusion:
            excluded += 1
            continue
        entry = is_cyclic(model_perturbation_matrix(p.n, g), v, tols, parameter=complex(g))
        checked += 1
        worst = min(worst, entry.min_coupling)
        if entry.verdict != CYCLIC:
            failures.append(entry)
    return ShiftedCyclicity(float(worst), checked, excluded, tuple(failures))


# -- Paley-Wiener ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampledEntireFunction:
    """Samples of an entire function of exponential type on a uniform real grid.

    ``func``, when given, evaluates the function off the grid and is used to
    refine level crossings.
    """

    grid: np.ndarray
    values: np.ndarray
    bandwidth: float
    func: object = field(default=None, repr=False)

    def __post_init__(self):
        x = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if self.bandwidth <= 0:
            raise InvariantError("bandwidth must be positive")
        if x.ndim != 1 or x.shape != v.shape or x.size < 2:
            raise InvariantError("grid and values must be 1-d arrays of equal length >= 2")
        h = np.diff(x)
        if np.any(h <= 0) or np.ptp(h) > 1e-9 * h.mean():
            raise InvariantError("grid must be uniform and increasing")
        if not h[0] < np.pi / (4 * self.bandwidth):
            raise InvariantError(f"grid spacing {h[0]:.4g} not below pi/(4a) = {np.pi / (4 * self.bandwidth):.4g}")
        for arr in (x, v):
            arr.setflags(write=False)
        object.__setattr__(self, "grid", x)
        object.__setattr__(self, "values", v)

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def __call__(self, x):
        if self.func is None:
            raise PreconditionError("no evaluator attached to this sampled function")
        return self.func(x)


def sample_entire(func, bandwidth: float, lo: float, hi: float, oversampling: int = 8) -> SampledEntireFunction:
    """Sample ``func`` with spacing ``pi / (oversampling * bandwidth)``."""
    h = np.pi / (oversampling * bandwidth)
    x = lo + h * np.arange(int(np.floor((hi - lo) / h)) + 1)
    return SampledEntireFunction(x, func(x), bandwidth, func)


def random_paley_wiener(bandwidth: float, rng: np.random.Generator, terms: int = 6, spread: float = 10.0):
    """``f(x) = sum_k c_k sinc(a (x - x_k))`` with complex ``c_k``: an element of ``PW_a``."""
    c = rng.standard_normal(terms) + 1j * rng.standard_normal(terms)
    centers = rng.uniform(-spread, spread, terms)

    def f(x):
        x = np.asarray(x, dtype=float)
        u = bandwidth * (x[..., None] - centers) / np.pi
        return (c * np.sinc(u)).sum(axis=-1)

    return f


def pw_euler_decompose(big_f: SampledEntireFunction):
    """Split ``F = exp(iax) f`` into ``g1 + i g2`` with both parts fixed by ``g -> exp(2iax) conj(g)``.

    ``g1 = (F + t)/2`` and ``g2 = (F - t)/(2i)`` with ``t = exp(2iax) conj(F)``.
    """
    a = big_f.bandwidth

    def parts(x, v):
        t = np.exp(2j * a * x) * np.conj(v)
        return (v + t) * 0.5, (v - t) * (-0.5j)

    g1v, g2v = parts(big_f.grid, big_f.values)
    g1f = g2f = None
    if big_f.func is not None:
        g1f = lambda x: parts(np.asarray(x, dtype=float), big_f.func(x))[0]  # noqa: E731
        g2f = lambda x: parts(np.asarray(x, dtype=float), big_f.func(x))[1]  # noqa: E731
    return (
        SampledEntireFunction(big_f.grid, g1v, a, g1f),
        SampledEntireFunction(big_f.grid, g2v, a, g2f),
    )


def hermitian_symmetry_defect(g: SampledEntireFunction) -> float:
    """Max over the grid of ``|exp(2iax) conj(g) - g|``."""
    return float(np.abs(np.exp(2j * g.bandwidth * g.grid) * np.conj(g.values) - g.values).max())


@dataclass(frozen=True)
class ProgressionReport:
    holds: bool
    c: complex
    crossings: tuple  # (x, nearest progression point, distance)
    unresolved: tuple
    max_distance: float
    alt_max_distance: float

    def body(self) -> dict:
        from .serialize import complex_to_json

        return {
            "holds": self.holds,
            "c": complex_to_json(self.c),
            "crossings": [{"x": x, "nearest": p, "distance": d} for x, p, d in self.crossings],
            "unresolved": list(self.unresolved),
            "max_distance": self.max_distance,
            "alt_max_distance": self.alt_max_distance,
        }


def _nearest(x: float, offset: float, step: float) -> float:
    return offset + step * np.round((x - offset) / step)


def pw_level_progression_check(g: SampledEntireFunction, c: complex, tol: float = 1e-6) -> ProgressionReport:
    """Locate real solutions of ``g(x) = c`` and measure their distance to ``{arg(c)/a + pi k/a}``.

    Candidates are sign changes of ``Re(g - c)`` and of ``Im(g - c)`` between
    samples, refined by Brent's method; a root of one part is a crossing
    when the other part vanishes there as well. Near misses are refined
    by minimising ``|g - c|`` and reported as unresolved if that stagnates.
    The distance to the variant progression ``{2 arg c + 2 pi k / a}`` is
    logged for comparison.
    """
    c = complex(c)
    if c == 0:
        raise PreconditionError("c must be non-zero")
    a = g.bandwidth
    accept = 1e-9 * (1 + abs(c))
    near = 1e-3 * (1 + abs(c))
    x, r = g.grid, g.values - c
    crossings, unresolved = [], []

    def add(xc):
        if all(abs(xc - y) > 1e-7 for y in crossings):
            crossings.append(float(xc))

    for part in (np.real, np.imag):
        s = part(r)
        idx = np.flatnonzero((s[:-1] == 0) | (s[:-1] * s[1:] < 0))
        for i in idx:
            if g.func is None:
                # no evaluator: only exact sample hits count, other brackets are unrefined
                if s[i] == 0 and abs(r[i]) <= accept:
                    add(x[i])
                else:
                    t = s[i] / (s[i] - s[i + 1])
                    # the other part, interpolated, must be within the local sample variation
                    if abs(r[i] + t * (r[i + 1] - r[i])) <= abs(r[i + 1] - r[i]):
                        unresolved.append(float(x[i] + t * (x[i + 1] - x[i])))
                continue
            fpart = lambda t: float(part(g(np.array([t]))[0] - c))  # noqa: E731
            xr = x[i] if s[i] == 0 else brentq(fpart, x[i], x[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps)
            miss = abs(g(np.array([xr]))[0] - c)
            if miss <= accept:
                add(xr)
            elif miss <= near:
                h = x[1] - x[0]
                res = minimize_scalar(lambda t: abs(g(np.array([t]))[0] - c), bounds=(xr - h, xr + h),
                                      method="bounded", options={"xatol": 1e-13})
                if res.fun <= accept:
                    add(res.x)
                else:
                    unresolved.append(float(xr))
    crossings.sort()
    step, offset = np.pi / a, np.angle(c) / a
    rows = []
    for xc in crossings:
        p = _nearest(xc, offset, step)
        rows.append((xc, float(p), float(abs(xc - p))))
    max_d = max((d for _, _, d in rows), default=0.0)
    alt = max((abs(xc - _nearest(xc, 2 * np.angle(c), 2 * np.pi / a)) for xc in crossings), default=0.0)
    if crossings and alt > tol:
        log.info(
            "variant progression {2 arg c + 2 pi k / a} misses crossings by up to %.3g "
            "(progression {arg c / a + pi k / a}: %.3g)", alt, max_d,
        )
    return ProgressionReport(
        holds=max_d <= tol,
        c=c,
        crossings=tuple(rows),
        unresolved=tuple(sorted(unresolved)),
        max_distance=float(max_d),
        alt_max_distance=float(alt),
    )
