"""Pairs of independent real solutions of the stationary Schrodinger equation.

A SolutionBasis holds two real solutions (phi1, phi2) of

    phi'' = (2m/hbar^2) (V(x) - E) phi

on a uniform grid, together with first-derivative arrays and the Wronskian
W = phi1' phi2 - phi1 phi2'. W is recorded as computed, not renormalized:
the sin/cos pair carries W = k, and the k**-1 rescaled pair W = 1, and that
difference is physically meaningful downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import (
    IntegrationFailureError,
    PreconditionError,
    UnsupportedEnergyError,
)
from .numerics import derivative_o4, grid_spacing, second_difference
from .potentials import NATURAL_UNITS, PhysicalConstants, PotentialSpec

#: relative Wronskian drift allowed for analytically constructed bases
ANALYTIC_DRIFT_TOL = 1e-8
#: relative Wronskian drift allowed for Numerov bases
NUMERIC_DRIFT_TOL = 1e-6


@dataclass(frozen=True)
class SolutionBasis:
    """Two independent real Schrodinger solutions at one energy."""

    energy: float
    grid: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    dphi1: np.ndarray
    dphi2: np.ndarray
    wronskian: float
    source: str = "unspecified"

    def __post_init__(self):
        n = len(self.grid)
        for name in ("phi1", "phi2", "dphi1", "dphi2"):
            if len(getattr(self, name)) != n:
                raise PreconditionError(f"{name} length does not match grid")
        if self.wronskian == 0.0:
            raise PreconditionError("Wronskian must be nonzero (independent solutions)")

    def wronskian_drift(self) -> float:
        """Max relative deviation of the pointwise Wronskian from the recorded one."""
        w = self.dphi1 * self.phi2 - self.phi1 * self.dphi2
        return float(np.max(np.abs(w - self.wronskian)) / abs(self.wronskian))


@dataclass(frozen=True)
class BasisTransform:
    """Linear recombination theta1 = mu phi1 + nu phi2, theta2 = alpha phi1 + beta phi2.

    Nondegeneracy requires mu*beta != nu*alpha.
    """

    mu: float
    nu: float
    alpha: float
    beta: float

    @property
    def det(self) -> float:
        return self.mu * self.beta - self.nu * self.alpha

    def __post_init__(self):
        scale = max(abs(self.mu), abs(self.nu), abs(self.alpha), abs(self.beta), 1e-30)
        if abs(self.det) <= 1e-12 * scale * scale:
            raise PreconditionError("degenerate transform: mu*beta == nu*alpha")

    def at_energy(self, energy: float, consts: PhysicalConstants) -> "BasisTransform":
        return self

    def compose(self, first: "BasisTransform") -> "BasisTransform":
        """Transform equivalent to applying `first`, then this one (matrix product)."""
        return BasisTransform(
            mu=self.mu * first.mu + self.nu * first.alpha,
            nu=self.mu * first.nu + self.nu * first.beta,
            alpha=self.alpha * first.mu + self.beta * first.alpha,
            beta=self.alpha * first.nu + self.beta * first.beta,
        )


IDENTITY_TRANSFORM = BasisTransform(1.0, 0.0, 0.0, 1.0)


def _zero(_k: float) -> float:
    return 0.0


@dataclass(frozen=True)
class FreeFormTransform:
    """Free-particle recombination theta1 = sin kx + g(k) cos kx, theta2 = cos kx + f(k) sin kx.

    f and g are functions of the wavenumber k; df/dk must be supplied because
    the time-parametrization analysis differentiates through it. Requires
    f(k) g(k) != 1 at every energy it is evaluated at.
    """

    f: Callable[[float], float]
    dfdk: Callable[[float], float]
    g: Callable[[float], float] = _zero

    def at_wavenumber(self, k: float) -> BasisTransform:
        fv, gv = float(self.f(k)), float(self.g(k))
        if abs(1.0 - fv * gv) <= 1e-12 * max(1.0, abs(fv * gv)):
            raise PreconditionError("degenerate free-form transform: f*g == 1")
        return BasisTransform(mu=1.0, nu=gv, alpha=fv, beta=1.0)

    def at_energy(self, energy: float, consts: PhysicalConstants) -> BasisTransform:
        return self.at_wavenumber(consts.wavenumber(energy))


@dataclass(frozen=True)
class RescalingTransform:
    """The explicit k**-1 rescaling phi1 -> phi1 / k that keeps the E -> 0 limit finite."""

    def at_energy(self, energy: float, consts: PhysicalConstants) -> BasisTransform:
        k = consts.wavenumber(energy)
        if k == 0.0:
            raise PreconditionError("rescaling undefined at E = 0")
        return BasisTransform(mu=1.0 / k, nu=0.0, alpha=0.0, beta=1.0)


def analytic_free_basis(
    energy: float,
    consts: PhysicalConstants = NATURAL_UNITS,
    grid: np.ndarray | None = None,
    rescaled: bool = False,
) -> SolutionBasis:
    """Closed-form free-particle basis on a grid.

    E > 0: (sin kx, cos kx) with W = k, or the rescaled pair
    (sin kx / k, cos kx) with W = 1. E = 0: the limit pair (x, 1), W = 1.
    """
    if grid is None or len(grid) == 0:
        raise PreconditionError("analytic_free_basis needs a nonempty grid")
    if energy < 0:
        raise UnsupportedEnergyError(
            "E < 0 unsupported: bound/tunnelling regimes are out of scope"
        )
    x = np.asarray(grid, dtype=float)
    if energy == 0.0:
        return SolutionBasis(
            energy=0.0,
            grid=x,
            phi1=x.copy(),
            phi2=np.ones_like(x),
            dphi1=np.ones_like(x),
            dphi2=np.zeros_like(x),
            wronskian=1.0,
            source="analytic-free-E0",
        )
    k = consts.wavenumber(energy)
    s, c = np.sin(k * x), np.cos(k * x)
    if rescaled:
        return SolutionBasis(
            energy=float(energy),
            grid=x,
            phi1=s / k,
            phi2=c,
            dphi1=c,
            dphi2=-k * s,
            wronskian=1.0,
            source="analytic-free-rescaled",
        )
    return SolutionBasis(
        energy=float(energy),
        grid=x,
        phi1=s,
        phi2=c,
        dphi1=k * c,
        dphi2=-k * s,
        wronskian=float(k),
        source="analytic-free",
    )


def _rk4_first_step(v0, d0, x0, h, q_of_x, nsub=8):
    """Advance (phi, phi') over one grid interval with RK4 substeps.

    Only used to seed the Numerov recurrence; accuracy well beyond the
    scheme's O(h^4) global order.
    """
    y = np.array([v0, d0], dtype=float)
    hs = h / nsub
    x = x0
    for _ in range(nsub):
        k1 = np.array([y[1], q_of_x(x) * y[0]])
        y2 = y + 0.5 * hs * k1
        k2 = np.array([y2[1], q_of_x(x + 0.5 * hs) * y2[0]])
        y3 = y + 0.5 * hs * k2
        k3 = np.array([y3[1], q_of_x(x + 0.5 * hs) * y3[0]])
        y4 = y + hs * k3
        k4 = np.array([y4[1], q_of_x(x + hs) * y4[0]])
        y = y + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        x += hs
    return y[0]


def _numerov_sweep(q: np.ndarray, h: float, y0: float, y1: float) -> np.ndarray:
    """Numerov recurrence for y'' = q y from the first two values."""
    n = len(q)
    y = np.empty(n)
    y[0], y[1] = y0, y1
    h2 = h * h
    a = 1.0 - (h2 / 12.0) * q
    b = 2.0 + (5.0 * h2 / 6.0) * q
    for i in range(1, n - 1):
        y[i + 1] = (b[i] * y[i] - a[i - 1] * y[i - 1]) / a[i + 1]
    return y


def numeric_basis(
    potential: PotentialSpec,
    energy: float,
    consts: PhysicalConstants = NATURAL_UNITS,
    grid: np.ndarray | None = None,
    seeds=((0.0, 1.0), (1.0, 0.0)),
    anchor: str = "xmin",
    drift_tol: float = NUMERIC_DRIFT_TOL,
) -> SolutionBasis:
    """Numerov integration of both solutions from seed values (phi, phi').

    anchor selects where the seeds apply: "xmin" (default) or "center"
    (midpoint sample; useful on symmetric grids where an even/odd pair is
    wanted). The recurrence is O(h^4) globally; first steps are seeded by
    RK4 substeps of matching accuracy. The Wronskian is recorded from the
    seeds and verified constant across the grid.
    """
    if grid is None or len(grid) < 5:
        raise PreconditionError("numeric_basis needs a grid with at least 5 points")
    x = np.asarray(grid, dtype=float)
    h = grid_spacing(x)  # raises on non-uniform grids
    (v1, d1), (v2, d2) = seeds
    w_seed = float(d1 * v2 - v1 * d2)
    scale = max(abs(v1), abs(d1), abs(v2), abs(d2), 1e-30)
    if abs(w_seed) <= 1e-12 * scale * scale:
        raise PreconditionError("seed condition pairs must be linearly independent")

    if anchor == "xmin":
        i0 = 0
    elif anchor == "center":
        i0 = (len(x) - 1) // 2
    else:
        raise PreconditionError("anchor must be 'xmin' or 'center'")

    pref = 2.0 * consts.mass / consts.hbar**2
    q = pref * (np.asarray(potential(x), dtype=float) - energy)

    def q_of_x(xx):
        return pref * (float(potential(xx)) - energy)

    def integrate(v0, d0):
        y = np.empty_like(x)
        y[i0] = v0
        # rightward sweep
        if i0 < len(x) - 1:
            y_next = _rk4_first_step(v0, d0, x[i0], h, q_of_x)
            right = _numerov_sweep(q[i0:], h, v0, y_next)
            y[i0:] = right
        # leftward sweep (mirror recurrence)
        if i0 > 0:
            y_prev = _rk4_first_step(v0, d0, x[i0], -h, q_of_x)
            left = _numerov_sweep(q[: i0 + 1][::-1], h, v0, y_prev)
            y[: i0 + 1] = left[::-1]
        return y

    phi1 = integrate(v1, d1)
    phi2 = integrate(v2, d2)
    basis = SolutionBasis(
        energy=float(energy),
        grid=x,
        phi1=phi1,
        phi2=phi2,
        dphi1=derivative_o4(phi1, h),
        dphi2=derivative_o4(phi2, h),
        wronskian=w_seed,
        source="numeric",
    )
    drift = basis.wronskian_drift()
    if drift > drift_tol:
        raise IntegrationFailureError(
            f"Wronskian drift {drift:.3e} exceeds {drift_tol:.1e}; "
            "integration not trusted at this resolution"
        )
    return basis


def transform_basis(
    basis: SolutionBasis,
    transform,
    consts: PhysicalConstants = NATURAL_UNITS,
) -> SolutionBasis:
    """Apply a linear recombination; the Wronskian scales by det(T).

    Accepts a BasisTransform, a FreeFormTransform (resolved at the basis
    wavenumber), or any object exposing at_energy(E, consts).
    """
    t = transform.at_energy(basis.energy, consts)
    return replace(
        basis,
        phi1=t.mu * basis.phi1 + t.nu * basis.phi2,
        phi2=t.alpha * basis.phi1 + t.beta * basis.phi2,
        dphi1=t.mu * basis.dphi1 + t.nu * basis.dphi2,
        dphi2=t.alpha * basis.dphi1 + t.beta * basis.dphi2,
        wronskian=t.det * basis.wronskian,
        source=f"{basis.source}|T({t.mu:g},{t.nu:g},{t.alpha:g},{t.beta:g})",
    )


def schrodinger_residual(
    basis: SolutionBasis,
    potential: PotentialSpec,
    consts: PhysicalConstants = NATURAL_UNITS,
) -> float:
    """Max |phi'' - (2m/hbar^2)(V - E) phi| over interior grid points, both solutions.

    phi'' comes from centered second differences, so this gates the basis
    against the equation it claims to solve without trusting its own
    derivative arrays.
    """
    x = basis.grid
    h = grid_spacing(x)
    q = (2.0 * consts.mass / consts.hbar**2) * (
        np.asarray(potential(x), dtype=float) - basis.energy
    )
    r1 = second_difference(basis.phi1, h) - q[1:-1] * basis.phi1[1:-1]
    r2 = second_difference(basis.phi2, h) - q[1:-1] * basis.phi2[1:-1]
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))
