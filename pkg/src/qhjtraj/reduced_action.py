"""Reduced action, conjugate momentum, quantum potential and quantum coordinate.

For a microstate (E, a, b, lambda, t0) over a solution basis (phi1, phi2),
the reduced action is

    S0(x) = hbar * [arctan(a phi1/phi2 + b) + n(x) pi] + hbar lambda

with the integer winding n(x) chosen so S0 is continuous across zeros of
phi2 (n = 0 at the left edge of the grid). Writing N = a phi1 + b phi2,
D = phi2 and G = N^2 + D^2, the conjugate momentum has the closed form

    P = dS0/dx = hbar a W / G

which never vanishes for a != 0, W != 0. Derivatives of P are obtained
analytically from G' and G'', where G'' uses phi'' = (2m/hbar^2)(V - E) phi
so no second-derivative arrays are ever differenced.

The quantum potential is Q = (hbar^2/4m) [P''/P - (3/2)(P'/P)^2], and the
stationary Hamilton-Jacobi closure P^2/2m + V + Q = E holds identically up
to Wronskian drift of the basis; its residual is the module's quality gate.

The quantum coordinate follows from dxhat/dx = P / sqrt(2m(E - V)) by
cumulative Simpson quadrature, anchored at xhat(x_min) = x_min. It exists
only where E > V.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .basis import SolutionBasis
from .errors import DomainError, PreconditionError, TurningPointError
from .numerics import grid_spacing
from .potentials import NATURAL_UNITS, PhysicalConstants, PotentialSpec

#: default floor on E - V for quantum-coordinate construction (energy units)
TURNING_FLOOR = 1e-9


@dataclass(frozen=True)
class Microstate:
    """Integration-constant set selecting one trajectory.

    a and b are the non-classical constants; `phase` is the additive
    angle lambda and t0 the time offset. a = 0 is rejected: it collapses
    the arctangent argument to a constant and annihilates P.
    """

    energy: float
    a: float
    b: float = 0.0
    phase: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        if self.a == 0.0:
            raise PreconditionError("microstate requires a != 0")

    def with_energy(self, energy: float) -> "Microstate":
        return Microstate(energy, self.a, self.b, self.phase, self.t0)

    def constants_equal(self, other: "Microstate") -> bool:
        """Same held-fixed constants (a, b, phase, t0); energy may differ."""
        return (
            self.a == other.a
            and self.b == other.b
            and self.phase == other.phase
            and self.t0 == other.t0
        )


def conjugate_momentum(
    basis: SolutionBasis, a: float, b: float, consts: PhysicalConstants = NATURAL_UNITS
) -> np.ndarray:
    """P = hbar a W / ((a phi1 + b phi2)^2 + phi2^2) on the basis grid."""
    if a == 0.0:
        raise PreconditionError("conjugate momentum undefined for a = 0")
    n = a * basis.phi1 + b * basis.phi2
    d = basis.phi2
    return consts.hbar * a * basis.wronskian / (n * n + d * d)


def unwrapped_phase(basis: SolutionBasis, a: float, b: float) -> np.ndarray:
    """Branch-continuous arctan(a phi1/phi2 + b), zero winding at the left edge.

    Zeros of phi2 are poles of the argument; successive samples are pulled
    onto the same branch by pi-steps (np.unwrap with period pi).
    """
    n = a * basis.phi1 + b * basis.phi2
    d = basis.phi2
    with np.errstate(divide="ignore"):
        raw = np.arctan(n / d)
    return np.unwrap(raw, period=np.pi)


@dataclass(frozen=True)
class ReducedActionField:
    """Grids of S0, P, P', P'', Q and optionally xhat for one microstate.

    xhat is None when the grid contains classically forbidden points; the
    first offending position is then recorded in `turning_point`.
    """

    grid: np.ndarray
    s0: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    d2p: np.ndarray
    q: np.ndarray
    v: np.ndarray
    xhat: Optional[np.ndarray]
    microstate: Microstate
    constants: PhysicalConstants
    basis_id: str
    turning_point: Optional[float] = None

    @property
    def energy(self) -> float:
        return self.microstate.energy

    def _spline(self, name: str) -> CubicSpline:
        cache = self.__dict__.setdefault("_splines", {})
        if name not in cache:
            values = getattr(self, name)
            if values is None:
                raise PreconditionError(f"field has no {name} data")
            cache[name] = CubicSpline(self.grid, values)
        return cache[name]

    def _eval(self, name: str, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.grid[0] - 1e-12) or np.any(x > self.grid[-1] + 1e-12):
            raise DomainError(f"{name} lookup outside the field grid")
        out = self._spline(name)(x)
        return float(out) if out.ndim == 0 else out

    def s0_at(self, x):
        return self._eval("s0", x)

    def p_at(self, x):
        return self._eval("p", x)

    def q_at(self, x):
        return self._eval("q", x)

    def v_at(self, x):
        return self._eval("v", x)

    def xhat_at(self, x):
        return self._eval("xhat", x)

    def x_of_xhat(self, xhat_value):
        """Invert the monotone map x -> xhat by cubic interpolation."""
        if self.xhat is None:
            raise PreconditionError("field has no quantum-coordinate grid")
        xv = np.asarray(xhat_value, dtype=float)
        lo, hi = self.xhat[0], self.xhat[-1]
        if np.any(xv < lo - 1e-12) or np.any(xv > hi + 1e-12):
            raise DomainError("quantum-coordinate value outside the field range")
        cache = self.__dict__.setdefault("_splines", {})
        if "_inverse_xhat" not in cache:
            if np.any(np.diff(self.xhat) <= 0):
                raise PreconditionError("xhat grid is not strictly increasing")
            cache["_inverse_xhat"] = CubicSpline(self.xhat, self.grid)
        out = cache["_inverse_xhat"](xv)
        return float(out) if out.ndim == 0 else out


def quantum_potential_arrays(
    p: np.ndarray, dp: np.ndarray, d2p: np.ndarray, consts: PhysicalConstants
) -> np.ndarray:
    """Q = (hbar^2/4m) [P''/P - (3/2)(P'/P)^2] per grid point."""
    rp = dp / p
    return (consts.hbar**2 / (4.0 * consts.mass)) * (d2p / p - 1.5 * rp * rp)


def quantum_potential(field: ReducedActionField) -> np.ndarray:
    """Quantum potential grid recomputed from the field's P, P', P''."""
    return quantum_potential_arrays(field.p, field.dp, field.d2p, field.constants)


def quantum_coordinate(
    field: ReducedActionField,
    potential: PotentialSpec,
    consts: PhysicalConstants | None = None,
    floor: float = TURNING_FLOOR,
) -> np.ndarray:
    """xhat(x) = x_min + integral of P / sqrt(2m(E - V)) dx (composite Simpson).

    Requires E > V + floor on the whole grid; otherwise raises
    TurningPointError naming the first offending position.
    """
    consts = consts or field.constants
    x = field.grid
    margin = field.energy - np.asarray(potential(x), dtype=float)
    bad = np.nonzero(margin <= floor)[0]
    if bad.size:
        i = int(bad[0])
        raise TurningPointError(x[i], margin[i])
    integrand = field.p / np.sqrt(2.0 * consts.mass * margin)
    h = grid_spacing(x)
    return x[0] + cumulative_simpson(integrand, dx=h, initial=0.0)


def build_reduced_action(
    basis: SolutionBasis,
    microstate: Microstate,
    potential: PotentialSpec,
    consts: PhysicalConstants = NATURAL_UNITS,
    compute_xhat: bool = True,
    turning_floor: float = TURNING_FLOOR,
) -> ReducedActionField:
    """Assemble the full reduced-action field for one microstate."""
    if abs(basis.energy - microstate.energy) > 1e-12 * max(1.0, abs(microstate.energy)):
        raise PreconditionError(
            f"basis energy {basis.energy!r} does not match microstate energy "
            f"{microstate.energy!r}"
        )
    a, b = microstate.a, microstate.b
    hbar, mass = consts.hbar, consts.mass
    x = basis.grid
    v = np.asarray(potential(x), dtype=float)

    theta = unwrapped_phase(basis, a, b)
    s0 = hbar * (theta + microstate.phase)

    n = a * basis.phi1 + b * basis.phi2
    d = basis.phi2
    dn = a * basis.dphi1 + b * basis.dphi2
    dd = basis.dphi2
    g = n * n + d * d
    gp = 2.0 * (n * dn + d * dd)
    q_sch = (2.0 * mass / hbar**2) * (v - microstate.energy)
    gpp = 2.0 * (dn * dn + dd * dd) + 2.0 * q_sch * g

    c = hbar * a * basis.wronskian
    p = c / g
    dp = -c * gp / (g * g)
    d2p = c * (2.0 * gp * gp - gpp * g) / (g * g * g)
    q = quantum_potential_arrays(p, dp, d2p, consts)

    field = ReducedActionField(
        grid=x,
        s0=s0,
        p=p,
        dp=dp,
        d2p=d2p,
        q=q,
        v=v,
        xhat=None,
        microstate=microstate,
        constants=consts,
        basis_id=basis.source,
    )
    if not compute_xhat:
        return field
    try:
        xhat = quantum_coordinate(field, potential, consts, floor=turning_floor)
    except TurningPointError as err:
        return ReducedActionField(
            grid=x, s0=s0, p=p, dp=dp, d2p=d2p, q=q, v=v, xhat=None,
            microstate=microstate, constants=consts, basis_id=basis.source,
            turning_point=err.x,
        )
    return ReducedActionField(
        grid=x, s0=s0, p=p, dp=dp, d2p=d2p, q=q, v=v, xhat=xhat,
        microstate=microstate, constants=consts, basis_id=basis.source,
    )


def qshje_residual(
    field: ReducedActionField,
    potential: PotentialSpec,
    consts: PhysicalConstants | None = None,
) -> float:
    """Max |P^2/2m + V + Q - E| over the grid (stationary HJ closure)."""
    consts = consts or field.constants
    v = np.asarray(potential(field.grid), dtype=float)
    res = field.p**2 / (2.0 * consts.mass) + v + field.q - field.energy
    return float(np.max(np.abs(res)))


def lagrangian_along(
    field: ReducedActionField,
    x: float,
    xdot: float,
    potential: PotentialSpec | None = None,
    consts: PhysicalConstants | None = None,
):
    """L = P xdot - P^2/2m - V - Q at a point, fields cubically interpolated.

    This is the higher-derivative Lagrangian reduced with the quantum
    potential; along the equation-of-motion flow it collapses to E - 2V.
    """
    consts = consts or field.constants
    p = field.p_at(x)
    q = field.q_at(x)
    v = potential(x) if potential is not None else field.v_at(x)
    return p * xdot - p * p / (2.0 * consts.mass) - v - q
