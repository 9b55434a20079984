"""Quantum Hamilton-Jacobi trajectories for 1-D potentials.

Builds reduced-action fields from pairs of real Schrodinger solutions and
compares the competing time-parametrization laws (equation of motion,
fixed-x Jacobi theorem, quantum-coordinate Jacobi theorem), including the
basis-(in)dependence analysis of the fixed-x law.
"""

from .basis import (
    BasisTransform,
    FreeFormTransform,
    IDENTITY_TRANSFORM,
    RescalingTransform,
    SolutionBasis,
    analytic_free_basis,
    numeric_basis,
    schrodinger_residual,
    transform_basis,
)
from .errors import (
    AlignmentError,
    ConfigError,
    DomainError,
    IntegrationFailureError,
    NoMatchError,
    PreconditionError,
    QhjError,
    SingularConfigurationError,
    SingularVelocityError,
    StencilInconsistencyError,
    TurningPointError,
    UnsupportedEnergyError,
)
from .invariance import (
    ContradictionReport,
    MatchedConstants,
    bd_invariance_check,
    contradiction_sweep,
    floyd_contradiction,
    fm_proposal_time,
    match_constants,
    rescaling_bd_invariance,
    rescaling_extra_term,
)
from .potentials import (
    NATURAL_UNITS,
    PhysicalConstants,
    PotentialKind,
    PotentialSpec,
    free_potential,
    harmonic_potential,
    linear_potential,
    load_tabulated_csv,
    make_grid,
    tabulated_potential,
)
from .reduced_action import (
    Microstate,
    ReducedActionField,
    build_reduced_action,
    conjugate_momentum,
    lagrangian_along,
    qshje_residual,
    quantum_coordinate,
    quantum_potential,
)
from .trajectories import (
    EnergyStencil,
    Law,
    LawTimes,
    Trajectory,
    bd_law_times,
    bd_velocity,
    build_energy_stencil,
    dxhat_denergy,
    floyd_time,
    floyd_time_closed_free,
    floyd_time_closed_transformed,
    fm_relation_check,
    free_basis_builder,
    gap_identity_residual,
    hamiltonian_along,
    integrate_bd,
    jacobi_time_gap,
    numeric_basis_builder,
    sample_law_times,
    xhat_jacobi_time,
)

__version__ = "0.1.0"
