"""Finite-difference stencils and small numeric helpers shared across modules.

All stencils assume a uniform grid; accuracy orders are chosen to match the
integrators they validate (4th order throughout).
"""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError


def grid_spacing(x: np.ndarray, rtol: float = 1e-9) -> float:
    """Spacing of a uniform strictly increasing grid; raises if non-uniform."""
    dx = np.diff(x)
    if len(dx) == 0 or np.any(dx <= 0):
        raise PreconditionError("grid must be strictly increasing")
    h = float(dx[0])
    if np.max(np.abs(dx - h)) > rtol * h:
        raise PreconditionError("grid must be uniform")
    return h


def derivative_o4(f: np.ndarray, h: float) -> np.ndarray:
    """First derivative, 4th-order centered with one-sided endpoint stencils."""
    f = np.asarray(f, dtype=float)
    if f.size < 5:
        raise PreconditionError("derivative_o4 needs at least 5 samples")
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
    d[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * h)
    d[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * h)
    return d


def second_difference(f: np.ndarray, h: float) -> np.ndarray:
    """Centered second difference on interior points; returns array of len n-2."""
    f = np.asarray(f, dtype=float)
    if f.size < 3:
        raise PreconditionError("second_difference needs at least 3 samples")
    return (f[2:] - 2.0 * f[1:-1] + f[:-2]) / (h * h)


def point_derivative_o4(fn, x: float, step: float) -> float:
    """4th-order centered first derivative of a callable at one point.

    The step is a free parameter: widen it when fn carries correlated
    round-off noise (trades H^4 truncation for 1/H noise amplification).
    """
    return float(
        (fn(x - 2.0 * step) - 8.0 * fn(x - step) + 8.0 * fn(x + step) - fn(x + 2.0 * step))
        / (12.0 * step)
    )


def richardson_central(value_h, value_half):
    """One Richardson level for an O(h^2) central-difference pair."""
    return value_half + (value_half - value_h) / 3.0
