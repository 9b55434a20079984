import numpy as np
import pytest

import qhjtraj as q

E_FREE = 0.5  # k = 1 in natural units
E_HARM = 2.0


@pytest.fixture(scope="session")
def consts():
    return q.NATURAL_UNITS


@pytest.fixture(scope="session")
def free_grid():
    return q.make_grid(0.0, 3.6, 4001)


@pytest.fixture(scope="session")
def free_potential(free_grid):
    return q.free_potential(float(free_grid[0]), float(free_grid[-1]))


@pytest.fixture(scope="session")
def free_basis(consts, free_grid):
    return q.analytic_free_basis(E_FREE, consts, free_grid)


@pytest.fixture(scope="session")
def classical_field(free_basis, free_potential, consts):
    return q.build_reduced_action(
        free_basis, q.Microstate(E_FREE, 1.0, 0.0), free_potential, consts
    )


@pytest.fixture(scope="session")
def a2_field(free_basis, free_potential, consts):
    return q.build_reduced_action(
        free_basis, q.Microstate(E_FREE, 2.0, 0.0), free_potential, consts
    )


@pytest.fixture(scope="session")
def a2_stencil(consts, free_grid, free_potential):
    return q.build_energy_stencil(
        q.free_basis_builder(consts, free_grid),
        q.Microstate(E_FREE, 2.0, 0.0),
        free_potential,
        consts,
    )


@pytest.fixture(scope="session")
def harmonic_grid():
    return q.make_grid(-1.5, 1.5, 3001)  # h = 1e-3


@pytest.fixture(scope="session")
def harmonic_pot(harmonic_grid):
    return q.harmonic_potential(float(harmonic_grid[0]), float(harmonic_grid[-1]), 1.0)


@pytest.fixture(scope="session")
def harmonic_basis(harmonic_pot, consts, harmonic_grid):
    return q.numeric_basis(harmonic_pot, E_HARM, consts, harmonic_grid)


@pytest.fixture(scope="session")
def harmonic_field(harmonic_basis, harmonic_pot, consts):
    return q.build_reduced_action(
        harmonic_basis, q.Microstate(E_HARM, 2.0, 0.0), harmonic_pot, consts
    )


@pytest.fixture(scope="session")
def harmonic_stencil(harmonic_pot, consts, harmonic_grid):
    return q.build_energy_stencil(
        q.numeric_basis_builder(harmonic_pot, consts, harmonic_grid),
        q.Microstate(E_HARM, 2.0, 0.0),
        harmonic_pot,
        consts,
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(20240809)
