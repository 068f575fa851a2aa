"""Atomic measures on the line and the circle and their integral transforms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantError, PoleError, PreconditionError
from .limits import check_ladder, richardson_limit
from .operators import DEFAULT_TOLS, circle_arg

REAL_LINE = "real-line"
UNIT_CIRCLE = "unit-circle"
KINDS = (REAL_LINE, UNIT_CIRCLE)


def _merge_sorted(locs, weights, tol, circular):
    """Merge consecutive atoms closer than ``tol``; weights are summed."""
    groups = [[0]]
    for i in range(1, len(locs)):
        if abs(locs[i] - locs[groups[-1][-1]]) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    if circular and len(groups) > 1 and abs(locs[0] - locs[-1]) <= tol:
        groups[0] = groups.pop() + groups[0]
    out_locs, out_w = [], []
    for g in groups:
        w = weights[g]
        total = w.sum()
        if len(g) == 1:
            loc = locs[g[0]]
        else:
            loc = (locs[g] * w).sum() / total if total > 0 else locs[g].mean()
            if circular:
                loc = loc / abs(loc)
        out_locs.append(loc)
        out_w.append(total)
    return np.array(out_locs), np.array(out_w, dtype=float)


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """A finite positive measure with finitely many atoms.

    Atoms are stored sorted (ascending on the line, by argument in
    ``[0, 2pi)`` on the circle) after merging any two closer than
    ``merge_tol``. Zero-weight atoms are kept: they record eigenvalues the
    generating vector does not see.
    """

    kind: str
    locations: np.ndarray
    weights: np.ndarray
    merge_tol: float = field(default=DEFAULT_TOLS.atom_merge, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvariantError(f"measure kind must be one of {KINDS}, got {self.kind!r}")
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if self.kind == REAL_LINE:
            locs = np.atleast_1d(np.asarray(self.locations))
            if np.iscomplexobj(locs):
                if np.any(np.abs(locs.imag) > 0):
                    raise InvariantError("real-line atoms must be real")
                locs = locs.real
            locs = locs.astype(float)
        else:
            locs = np.atleast_1d(np.asarray(self.locations, dtype=complex))
            off = np.abs(np.abs(locs) - 1.0)
            if off.size and off.max() > 1e-12:
                raise InvariantError(f"unit-circle atom off the circle by {off.max():.3e}")
        if locs.shape != w.shape:
            raise InvariantError("locations and weights must have equal length")
        if w.size and (np.any(~np.isfinite(w)) or w.min() < 0):
            raise InvariantError("weights must be finite and nonnegative")
        if locs.size:
            order = np.argsort(locs if self.kind == REAL_LINE else circle_arg(locs), kind="stable")
            locs, w = _merge_sorted(locs[order], w[order], self.merge_tol, self.kind == UNIT_CIRCLE)
        for arr in (locs, w):
            arr.setflags(write=False)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def atoms(self):
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    def integrate(self, values) -> complex:
        """``sum_k values[k] * w_k``; ``values`` may be a callable of the location."""
        v = values(self.locations) if callable(values) else np.asarray(values)
        return complex(np.sum(v * self.weights))

    def nearest_atom_distance(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.abs(z[..., None] - self.locations).min(axis=-1)


def _weighted(mu: AtomicMeasure, values):
    if values is None:
        return mu.weights
    v = np.asarray(values, dtype=complex)
    if v.shape != mu.weights.shape:
        raise PreconditionError(f"expected {len(mu)} values on the atoms, got shape {v.shape}")
    return v * mu.weights


def cauchy_transform(mu: AtomicMeasure, z, values=None, pole_tol: float = 1e-12):
    """``K(z) = sum_k v_k w_k / (t_k - z)`` for a measure on the real line.

    No ``1/pi`` prefactor: this is the resolvent convention,
    ``K(z) = <(A - z)^{-1} phi, phi>``. ``values`` turns it into the
    transform of the measure ``v dmu``. ``z`` may be an array.
    """
    if mu.kind != REAL_LINE:
        raise PreconditionError("cauchy_transform needs a real-line measure")
    z_arr = np.asarray(z, dtype=complex)
    if len(mu) and np.any(mu.nearest_atom_distance(z_arr) <= pole_tol):
        raise PoleError("Cauchy transform evaluated at an atom")
    out = (_weighted(mu, values) / (mu.locations - z_arr[..., None])).sum(axis=-1)
    return complex(out) if out.ndim == 0 else out


def herglotz_transform(sigma: AtomicMeasure, z, pole_tol: float = 1e-10):
    """``sum_k w_k (xi_k + z) / (xi_k - z)`` for a measure on the circle."""
    if sigma.kind != UNIT_CIRCLE:
        raise PreconditionError("herglotz_transform needs a unit-circle measure")
    z_arr = np.asarray(z, dtype=complex)
    if len(sigma) and np.any(sigma.nearest_atom_distance(z_arr) <= pole_tol):
        raise PoleError("Herglotz transform evaluated within pole tolerance of an atom")
    xi = sigma.locations
    out = (sigma.weights * (xi + z_arr[..., None]) / (xi - z_arr[..., None])).sum(axis=-1)
    return complex(out) if out.ndim == 0 else out


def disk_cauchy_transform(sigma: AtomicMeasure, z, values=None, pole_tol: float = 1e-12):
    """``sum_k v_k w_k / (1 - conj(xi_k) z)`` for a measure on the circle."""
    if sigma.kind != UNIT_CIRCLE:
        raise PreconditionError("disk_cauchy_transform needs a unit-circle measure")
    z_arr = np.asarray(z, dtype=complex)
    denom = 1.0 - np.conj(sigma.locations) * z_arr[..., None]
    if denom.size and np.abs(denom).min() <= pole_tol:
        raise PoleError("disk Cauchy transform evaluated at an atom")
    out = (_weighted(sigma, values) / denom).sum(axis=-1)
    return complex(out) if out.ndim == 0 else out


def density_cauchy_transform(grid, density, z):
    """Cauchy transform of the piecewise-linear interpolant of a sampled density.

    Each segment is integrated in closed form,
    ``int (w0 + s (t - t0)) / (t - z) dt
    = (w0 + s (z - t0)) log((t1 - z) / (t0 - z)) + s (t1 - t0)``,
    so the result has no quadrature error however close ``z`` is to the
    axis. The density is zero outside ``grid``.
    """
    t = np.asarray(grid, dtype=float)
    w = np.asarray(density, dtype=float)
    if t.ndim != 1 or t.shape != w.shape or t.size < 2:
        raise PreconditionError("grid and density must be 1-d arrays of equal length >= 2")
    if np.any(np.diff(t) <= 0):
        raise PreconditionError("grid must be strictly increasing")
    z_arr = np.asarray(z, dtype=complex)
    if np.any(z_arr.imag == 0):
        raise PreconditionError("density Cauchy transform needs Im z != 0")
    t0, t1 = t[:-1], t[1:]
    slope = np.diff(w) / np.diff(t)
    zz = z_arr[..., None]
    # Im(t - z) has a fixed sign along each segment, so principal logs are continuous.
    logs = np.log(t1 - zz) - np.log(t0 - zz)
    out = ((w[:-1] + slope * (zz - t0)) * logs + slope * (t1 - t0)).sum(axis=-1)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class JumpEstimate:
    jump: complex
    density_estimate: complex
    density_value: float
    error: float
    ladder: tuple
    raw_jumps: tuple


def privalov_jump(grid, density, x: float, ladder=(1e-1, 1e-2, 1e-3, 1e-4)) -> JumpEstimate:
    """Boundary jump of the Cauchy transform of a density at ``x``.

    Evaluates ``K(x + iy) - K(x - iy)`` down the ``y`` ladder and
    extrapolates to ``y = 0``; in this convention the limit is
    ``2 pi i w(x)``. ``error`` is ``|jump / (2 pi i) - w(x)|`` with ``w(x)``
    read off the piecewise-linear interpolant.
    """
    h = check_ladder(ladder)
    t = np.asarray(grid, dtype=float)
    if not (t[0] < x < t[-1]):
        raise PreconditionError(f"x = {x} is not interior to the density support [{t[0]}, {t[-1]}]")
    upper = density_cauchy_transform(t, density, x + 1j * h)
    lower = density_cauchy_transform(t, density, x - 1j * h)
    raw = upper - lower
    jump = richardson_limit(h, raw)
    estimate = jump / (2j * np.pi)
    w_x = float(np.interp(x, t, np.asarray(density, dtype=float)))
    return JumpEstimate(
        jump=jump,
        density_estimate=estimate,
        density_value=w_x,
        error=float(abs(estimate - w_x)),
        ladder=tuple(h.tolist()),
        raw_jumps=tuple(complex(v) for v in raw),
    )
