"""Trajectory laws and their cross-checks.

Three time parametrizations are produced and compared:

  BD            dx/dt = 2 (E - V(x)) / P(x), integrated as an ODE.
  FloydJacobi   t - t0 = [dS0/dE] at fixed x, constants (a, b, lambda) held
                fixed, by central differences over an energy stencil.
  XhatJacobi    t - t0 = [dS0hat/dE] at fixed xhat, evaluated by tracking a
                fixed quantum-coordinate value across the stencil.

The difference of the last two obeys an exact chain-rule identity

  floyd - xhat = sqrt(2m(E - V(x))) * [dxhat/dE at fixed x]

whose numerical closure is one of the acceptance gates, as is the
conjugate-momentum relation P = m (1 - dQ/dE) xdot_Floyd.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy.integrate import solve_ivp

from .basis import SolutionBasis, analytic_free_basis, numeric_basis
from .errors import (
    DomainError,
    PreconditionError,
    SingularConfigurationError,
    SingularVelocityError,
    StencilInconsistencyError,
    TurningPointError,
)
from .numerics import grid_spacing, point_derivative_o4, richardson_central
from .potentials import NATURAL_UNITS, PhysicalConstants, PotentialSpec
from .reduced_action import (
    Microstate,
    ReducedActionField,
    build_reduced_action,
)

#: default relative energy step of the stencil and its absolute floor
STENCIL_DELTA_SCALE = 1e-6
STENCIL_DELTA_MIN = 1e-9
#: default output cadence of integrated trajectories (time units)
SAMPLE_CADENCE = 1e-2
#: default per-step error tolerance of the adaptive integrator
STEP_TOL = 1e-10


class Law(str, enum.Enum):
    BD = "bd"
    FLOYD_JACOBI = "floyd"
    XHAT_JACOBI = "xhat"


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered (t, x) samples of one integrated trajectory."""

    law: Law
    times: np.ndarray
    positions: np.ndarray
    microstate: Microstate
    action: np.ndarray
    diagnostics: dict

    def __post_init__(self):
        if len(self.times) != len(self.positions):
            raise PreconditionError("times and positions must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise PreconditionError("trajectory times must be strictly increasing")


@dataclass(frozen=True)
class LawTimes:
    """Times-of-position under one law, for aligned comparisons."""

    law: Law
    positions: np.ndarray
    times: np.ndarray
    microstate: Microstate


def bd_velocity(field: ReducedActionField, x):
    """Equation-of-motion velocity 2 (E - V(x)) / P(x)."""
    return 2.0 * (field.energy - field.v_at(x)) / field.p_at(x)


def integrate_bd(
    field: ReducedActionField,
    x0: float,
    t_span: float,
    potential: PotentialSpec | None = None,
    consts: PhysicalConstants | None = None,
    step_tol: float = STEP_TOL,
    cadence: float = SAMPLE_CADENCE,
    turning_floor: float = 1e-9,
) -> Trajectory:
    """Integrate dx/dt = 2(E - V)/P with the action accumulated alongside.

    Adaptive RK45 with dense output; samples are emitted on a fixed cadence
    for reproducible tables. The trajectory is truncated with a flag when it
    reaches within `turning_floor` of a classical turning point or leaves
    the field grid.
    """
    consts = consts or field.constants
    grid = field.grid
    if not (grid[0] <= x0 <= grid[-1]):
        raise DomainError(f"start position {x0!r} outside the field grid")
    margin0 = field.energy - field.v_at(x0)
    if margin0 <= turning_floor:
        raise TurningPointError(x0, margin0)

    p_spl = field._spline("p")
    q_spl = field._spline("q")
    v_spl = field._spline("v")
    energy = field.energy
    mass = consts.mass
    lo, hi = float(grid[0]), float(grid[-1])

    def rhs(_t, y):
        # clamp so trial stages past a terminal event stay evaluable
        x = min(max(y[0], lo), hi)
        p = float(p_spl(x))
        v = float(v_spl(x))
        xdot = 2.0 * (energy - v) / p
        lagr = p * xdot - p * p / (2.0 * mass) - v - float(q_spl(x))
        return (xdot, lagr)

    def turning(_t, y):
        x = min(max(y[0], lo), hi)
        return energy - float(v_spl(x)) - turning_floor

    def edge_hi(_t, y):
        return hi - y[0]

    def edge_lo(_t, y):
        return y[0] - lo

    for ev in (turning, edge_hi, edge_lo):
        ev.terminal = True
        ev.direction = -1
    t_start = field.microstate.t0
    t_end = t_start + float(t_span)
    sol = solve_ivp(
        rhs,
        (t_start, t_end),
        (float(x0), 0.0),
        method="RK45",
        rtol=step_tol,
        atol=step_tol,
        dense_output=True,
        events=(turning, edge_hi, edge_lo),
    )
    if not sol.success:
        raise PreconditionError(f"trajectory integration failed: {sol.message}")

    truncated = None
    if sol.status == 1:
        for flag, hits in zip(("turning-point", "left-domain", "left-domain"), sol.t_events):
            if len(hits):
                truncated = flag
                break
    t_final = float(sol.t[-1])
    ts = t_start + np.arange(0.0, t_final - t_start + 0.5 * cadence, cadence)
    ts = ts[ts <= t_final]
    if len(ts) == 0 or t_final - ts[-1] > 1e-12:
        ts = np.append(ts, t_final)
    states = sol.sol(ts)
    xs = np.clip(states[0], lo, hi)
    action = states[1]

    # equation-of-motion residual from locally differenced sample velocities
    if len(ts) >= 3:
        xdot_fd = np.gradient(xs, ts)
        res = np.abs(
            xdot_fd * np.asarray(field.p_at(xs)) - 2.0 * (energy - np.asarray(field.v_at(xs)))
        )
        max_residual = float(np.max(res[1:-1])) if len(res) > 2 else float(np.max(res))
    else:
        max_residual = 0.0

    return Trajectory(
        law=Law.BD,
        times=ts,
        positions=xs,
        microstate=field.microstate,
        action=action,
        diagnostics={
            "truncated": truncated,
            "max_eom_residual": max_residual,
            "nfev": int(sol.nfev),
        },
    )


def bd_law_times(trajectory: Trajectory) -> LawTimes:
    """Reindex an integrated BD trajectory as times-of-position."""
    xs = trajectory.positions
    if np.any(np.diff(xs) <= 0):
        raise PreconditionError("BD positions not monotone; cannot align by x")
    return LawTimes(Law.BD, xs, trajectory.times, trajectory.microstate)


# ---------------------------------------------------------------------------
# energy stencils


@dataclass(frozen=True)
class EnergyStencil:
    """Reduced-action fields at E and E +/- delta (and +/- delta/2 when the
    Richardson level is on), all sharing (a, b, lambda) and the grid."""

    members: Mapping[float, ReducedActionField]
    bases: Mapping[float, SolutionBasis]
    delta: float
    richardson: bool
    potential: PotentialSpec
    constants: PhysicalConstants

    @property
    def center(self) -> ReducedActionField:
        return self.members[0.0]

    @property
    def offsets(self):
        if self.richardson:
            return (self.delta, 0.5 * self.delta)
        return (self.delta,)


def free_basis_builder(
    consts: PhysicalConstants, grid: np.ndarray, rescaled: bool = False
) -> Callable[[float], SolutionBasis]:
    def build(energy: float) -> SolutionBasis:
        return analytic_free_basis(energy, consts, grid, rescaled=rescaled)

    return build


def numeric_basis_builder(
    potential: PotentialSpec,
    consts: PhysicalConstants,
    grid: np.ndarray,
    seeds=((0.0, 1.0), (1.0, 0.0)),
    anchor: str = "xmin",
) -> Callable[[float], SolutionBasis]:
    def build(energy: float) -> SolutionBasis:
        return numeric_basis(potential, energy, consts, grid, seeds=seeds, anchor=anchor)

    return build


def build_energy_stencil(
    basis_builder: Callable[[float], SolutionBasis],
    microstate: Microstate,
    potential: PotentialSpec,
    consts: PhysicalConstants = NATURAL_UNITS,
    delta: float | None = None,
    delta_scale: float = STENCIL_DELTA_SCALE,
    delta_min: float = STENCIL_DELTA_MIN,
    richardson: bool = True,
    compute_xhat: bool = True,
) -> EnergyStencil:
    """Build bases and fields at the stencil energies with constants held fixed.

    All members come from the same constructor with the same convention, so
    (a, b) keep one meaning across energies; that choice is exactly what the
    fixed-constants energy derivative requires.
    """
    energy = microstate.energy
    d = float(delta) if delta is not None else max(delta_scale * abs(energy), delta_min)
    if d <= 0:
        raise PreconditionError("stencil delta must be positive")
    if energy - d < 0:
        raise PreconditionError("stencil would cross E = 0; reduce delta")
    offsets = [0.0, -d, d]
    if richardson:
        offsets += [-0.5 * d, 0.5 * d]
    bases = {}
    members = {}
    for off in offsets:
        bases[off] = basis_builder(energy + off)
        members[off] = build_reduced_action(
            bases[off],
            microstate.with_energy(energy + off),
            potential,
            consts,
            compute_xhat=compute_xhat,
        )
    return EnergyStencil(
        members=members,
        bases=bases,
        delta=d,
        richardson=richardson,
        potential=potential,
        constants=consts,
    )


def _check_stencil(stencil: EnergyStencil, need_xhat: bool = False):
    center = stencil.center
    hbar = stencil.constants.hbar
    for off, member in stencil.members.items():
        if not member.microstate.constants_equal(center.microstate):
            raise StencilInconsistencyError(
                "stencil members must hold (a, b, phase, t0) fixed across energies"
            )
        if member.grid.shape != center.grid.shape or not np.array_equal(
            member.grid, center.grid
        ):
            raise StencilInconsistencyError("stencil members must share one grid")
        if need_xhat and member.xhat is None:
            raise PreconditionError(
                "stencil member lacks a quantum-coordinate grid "
                f"(turning point at {member.turning_point})"
            )
    for d in stencil.offsets:
        jump = abs(stencil.members[d].s0[0] - stencil.members[-d].s0[0])
        if jump >= 0.5 * np.pi * hbar:
            raise StencilInconsistencyError(
                "winding mismatch between stencil members at the grid anchor"
            )


def _stencil_derivative(stencil: EnergyStencil, evaluate) -> float | np.ndarray:
    """Central difference of `evaluate(field)` across the stencil in E,
    with one Richardson level when half-step members are present."""

    def central(d):
        return (evaluate(stencil.members[d]) - evaluate(stencil.members[-d])) / (2.0 * d)

    full = central(stencil.delta)
    if not stencil.richardson:
        return full
    half = central(0.5 * stencil.delta)
    return richardson_central(full, half)


def floyd_time(stencil: EnergyStencil, x):
    """t - t0 = [dS0/dE] at fixed x with (a, b, lambda) held fixed."""
    _check_stencil(stencil)
    return _stencil_derivative(stencil, lambda f: f.s0_at(x))


def floyd_time_closed_free(
    x, k: float, a: float, b: float, consts: PhysicalConstants = NATURAL_UNITS
):
    """Closed-form fixed-x time for the free particle over the (sin, cos) basis.

    t - t0 = (m a / hbar k) x / [(1+b^2) cos^2 kx + a^2 sin^2 kx
                                 + 2ab sin kx cos kx]
    """
    x = np.asarray(x, dtype=float)
    s, c = np.sin(k * x), np.cos(k * x)
    den = (1.0 + b * b) * c * c + a * a * s * s + 2.0 * a * b * s * c
    if np.any(den <= 0.0):
        raise SingularConfigurationError("nonpositive denominator in closed-form time")
    out = (consts.mass * a / (consts.hbar * k)) * x / den
    return float(out) if out.ndim == 0 else out


def floyd_time_closed_transformed(
    x,
    k: float,
    a_t: float,
    b_t: float,
    f_value: float,
    dfdk: float,
    consts: PhysicalConstants = NATURAL_UNITS,
):
    """Closed-form fixed-x time over the recombined free basis
    (sin kx, cos kx + f(k) sin kx), constants (a_t, b_t) held fixed.

    The df/dk term in the numerator is the basis-choice imprint this
    module exists to quantify; with f identically zero the expression
    collapses to floyd_time_closed_free.
    """
    x = np.asarray(x, dtype=float)
    s, c = np.sin(k * x), np.cos(k * x)
    f = f_value
    den = (
        (1.0 + b_t * b_t) * c * c
        + (a_t * a_t + b_t * b_t * f * f + f * f + 2.0 * a_t * b_t * f) * s * s
        + 2.0 * (f + a_t * b_t + b_t * b_t * f) * s * c
    )
    if np.any(den <= 0.0):
        raise SingularConfigurationError("nonpositive denominator in closed-form time")
    out = (consts.mass * a_t / (consts.hbar * k)) * (x - dfdk * s * s) / den
    return float(out) if out.ndim == 0 else out


def xhat_jacobi_time(stencil: EnergyStencil, x_ref):
    """t - t0 = [dS0hat/dE] at fixed xhat.

    The quantum-coordinate value xhat* = xhat(x_ref; E) is located in each
    stencil member by inverting its monotone xhat grid; S0 is then read at
    the shifted positions.
    """
    _check_stencil(stencil, need_xhat=True)
    xstar = stencil.center.xhat_at(x_ref)

    def evaluate(field: ReducedActionField):
        return field.s0_at(field.x_of_xhat(xstar))

    return _stencil_derivative(stencil, evaluate)


def dxhat_denergy(stencil: EnergyStencil, x):
    """[dxhat/dE] at fixed x by central differences across the stencil."""
    _check_stencil(stencil, need_xhat=True)
    return _stencil_derivative(stencil, lambda f: f.xhat_at(x))


def jacobi_time_gap(stencil: EnergyStencil, x):
    """Measured gap floyd_time - xhat_jacobi_time at x."""
    return floyd_time(stencil, x) - xhat_jacobi_time(stencil, x)


def gap_identity_residual(stencil: EnergyStencil, x):
    """|gap - sqrt(2m(E - V)) dxhat/dE|: closure of the two-Jacobi identity."""
    center = stencil.center
    consts = stencil.constants
    momentum_cl = np.sqrt(
        2.0 * consts.mass * (center.energy - np.asarray(center.v_at(x), dtype=float))
    )
    out = np.abs(jacobi_time_gap(stencil, x) - momentum_cl * dxhat_denergy(stencil, x))
    return float(out) if np.ndim(out) == 0 else out


def fm_relation_check(stencil: EnergyStencil, x: float, stride: int = 16) -> float:
    """Relative residual of P = m (1 - dQ/dE) xdot at one point.

    dQ/dE comes from the stencil; the velocity is the reciprocal of a local
    x-derivative of floyd_time (widened stencil, `stride` grid spacings) so
    the check stays independent of the relation it verifies.
    """
    _check_stencil(stencil)
    center = stencil.center
    h = grid_spacing(center.grid)
    lo, hi = center.grid[0], center.grid[-1]
    s_eff = min(stride, int((x - lo) / (2 * h)), int((hi - x) / (2 * h)))
    if s_eff < 1:
        raise DomainError("point too close to the grid edge for local differencing")
    dqde = _stencil_derivative(stencil, lambda f: f.q_at(x))
    dtdx = point_derivative_o4(lambda xx: floyd_time(stencil, xx), x, s_eff * h)
    if abs(dtdx) < 1e-300:
        raise SingularVelocityError("locally differenced time is flat; velocity undefined")
    xdot = 1.0 / dtdx
    p = center.p_at(x)
    return abs(p - stencil.constants.mass * (1.0 - dqde) * xdot) / abs(p)


def hamiltonian_along(
    field: ReducedActionField,
    trajectory: Trajectory,
    potential: PotentialSpec | None = None,
    consts: PhysicalConstants | None = None,
):
    """Hamiltonian and canonical velocity sampled along a BD trajectory.

    H = (P^2/2m) (dx/dxhat)^2 + V with (dx/dxhat)^2 = 2m(E - V)/P^2, and the
    canonical velocity is dH/dP = (P/m)(dx/dxhat)^2. Both are evaluated
    literally so that H = E and dH/dP = bd_velocity are genuine checks.
    """
    if trajectory.law is not Law.BD:
        raise PreconditionError("hamiltonian_along expects a BD-law trajectory")
    consts = consts or field.constants
    xs = trajectory.positions
    p = np.asarray(field.p_at(xs), dtype=float)
    v = (
        np.asarray(potential(xs), dtype=float)
        if potential is not None
        else np.asarray(field.v_at(xs), dtype=float)
    )
    jac_sq = 2.0 * consts.mass * (field.energy - v) / (p * p)
    h_values = (p * p / (2.0 * consts.mass)) * jac_sq + v
    v_canonical = (p / consts.mass) * jac_sq
    return h_values, v_canonical


def sample_law_times(stencil: EnergyStencil, xs, law: Law) -> LawTimes:
    """Times-of-position under a Jacobi-theorem law at the given positions."""
    ms = stencil.center.microstate
    if law is Law.FLOYD_JACOBI:
        t = floyd_time(stencil, xs)
    elif law is Law.XHAT_JACOBI:
        t = xhat_jacobi_time(stencil, xs)
    else:
        raise PreconditionError("sample_law_times handles the Jacobi-theorem laws only")
    return LawTimes(law, np.asarray(xs, dtype=float), ms.t0 + np.asarray(t), ms)
