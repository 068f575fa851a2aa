"""Boundary-limit extrapolation on a fixed ladder of distances."""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError

#: Distances from the boundary used by every nontangential/radial limit check.
DEFAULT_LADDER = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


def check_ladder(ladder) -> np.ndarray:
    h = np.asarray(ladder, dtype=float)
    if h.ndim != 1 or h.size == 0:
        raise PreconditionError("ladder must be a non-empty sequence")
    if np.any(h <= 0) or np.any(np.diff(h) >= 0):
        raise PreconditionError(f"ladder must be positive and strictly decreasing, got {h.tolist()}")
    return h


def richardson_limit(ladder, values) -> complex:
    """Extrapolate ``values[k] = F(ladder[k])`` to ``F(0)``.

    Neville's scheme for the interpolating polynomial in the distance,
    evaluated at zero. Exact when ``F`` is a polynomial of degree below
    ``len(ladder)``.
    """
    h = check_ladder(ladder)
    p = np.array(values, dtype=complex)
    if p.shape != h.shape:
        raise PreconditionError("ladder and values must have the same length")
    n = len(h)
    for k in range(1, n):
        p[: n - k] = (h[: n - k] * p[1 : n - k + 1] - h[k:] * p[: n - k]) / (h[: n - k] - h[k:])
    return complex(p[0])
