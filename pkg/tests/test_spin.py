import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boundary_thermo.densemat import TensorSpace, commutator, partial_trace, random_density_matrix
from boundary_thermo.exceptions import ContractError, StructureError
from boundary_thermo.spin import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    BathSpec,
    ChainLayout,
    ChainSpec,
    boundary_coupling,
    chain_hamiltonian,
    site_op,
    thermal_spin,
    uniform_field_generator,
)

floats = st.floats(-3, 3, allow_nan=False)


def test_site_op_first_site_z():
    assert np.array_equal(site_op(TensorSpace.qubits(2), 0, "z"), np.diag([1, 1, -1, -1]))


def test_site_op_out_of_range():
    with pytest.raises(StructureError):
        site_op(TensorSpace.qubits(2), 2, "z")


def test_ladder_algebra():
    assert np.allclose(SIGMA_PLUS @ SIGMA_MINUS + SIGMA_MINUS @ SIGMA_PLUS, np.eye(2))
    assert np.allclose(commutator(SIGMA_Z, SIGMA_PLUS), 2 * SIGMA_PLUS)
    assert np.allclose(commutator(SIGMA_Z, SIGMA_MINUS), -2 * SIGMA_MINUS)
    # sigma^+ raises |down> = |1> to |up> = |0>
    assert np.allclose(SIGMA_PLUS @ [0, 1], [1, 0])


def test_chain_spec_validation():
    with pytest.raises(StructureError):
        ChainSpec((), 1.0, 1.0)
    assert ChainSpec.uniform(3, 0.5, 1.0).h == (0.5, 0.5, 0.5)


def test_single_site_hamiltonian():
    assert np.allclose(chain_hamiltonian(ChainSpec((1.0,), 1.0, 1.0)), SIGMA_Z / 2)


def test_two_site_zero_field_spectrum():
    evals = np.linalg.eigvalsh(chain_hamiltonian(ChainSpec((0.0, 0.0), 1.5, 1.5)))
    assert np.allclose(evals, [-3, 0, 0, 3])


@pytest.mark.parametrize("n", [2, 3, 5])
def test_xx_uniform_field_conserves_magnetization(n):
    h_s = chain_hamiltonian(ChainSpec.uniform(n, 0.7, 1.3))
    assert np.linalg.norm(commutator(h_s, uniform_field_generator(n, 0.7))) == 0.0


def test_xy_chain_breaks_magnetization_conservation():
    h_s = chain_hamiltonian(ChainSpec.uniform(3, 1.0, 1.0, 2.0))
    assert np.linalg.norm(commutator(h_s, uniform_field_generator(3, 1.0))) > 1.0


@given(st.lists(floats, min_size=1, max_size=4), floats, floats)
def test_chain_hamiltonian_hermitian(h, jx, jy):
    ham = chain_hamiltonian(ChainSpec(tuple(h), jx, jy))
    assert np.linalg.norm(ham - ham.conj().T) == 0.0


def test_boundary_coupling_ladder_form():
    layout = ChainLayout(1, left_copy=True)
    v = boundary_coupling(layout, "L", 0.8)
    expected = 2 * 0.8 * (np.kron(SIGMA_PLUS, SIGMA_MINUS) + np.kron(SIGMA_MINUS, SIGMA_PLUS))
    assert np.allclose(v, expected)
    assert np.array_equal(boundary_coupling(layout, "L", 0.0), np.zeros((4, 4)))


@pytest.mark.parametrize("side", ["L", "R"])
def test_boundary_coupling_locality(side):
    # v acts on (copy, boundary site) only: it commutes with every operator elsewhere
    layout = ChainLayout(3, left_copy=True, right_copy=True)
    v = boundary_coupling(layout, side, 1.0)
    touched = {layout.copy(side), layout.site(layout.boundary_site(side))}
    for k in range(layout.space.n_factors):
        for p in "xyz":
            commutes = np.allclose(commutator(v, site_op(layout.space, k, p)), 0)
            assert commutes == (k not in touched)


@given(st.floats(0, 5), st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_coupling_first_moment_vanishes(beta, h, seed):
    layout = ChainLayout(1, left_copy=True)
    v = boundary_coupling(layout, "L", 1.0)
    rho_s = random_density_matrix(2, np.random.default_rng(seed))
    joint = np.kron(thermal_spin(beta, h).matrix, rho_s)
    assert np.linalg.norm(partial_trace(v @ joint, layout.space, [1])) < 1e-12


def test_thermal_spin_infinite_temperature():
    s = thermal_spin(0.0, 3.0)
    assert np.allclose(s.matrix, np.eye(2) / 2)
    assert s.magnetization == 0.0


def test_thermal_spin_unit_values():
    assert math.isclose(thermal_spin(1.0, 1.0).magnetization, -0.46211715726000974, rel_tol=1e-12)


def test_thermal_spin_zero_field():
    assert np.allclose(thermal_spin(7.0, 0.0).matrix, np.eye(2) / 2)


@given(st.floats(0, 50), st.floats(-50, 50))
def test_thermal_spin_invariants(beta, h):
    s = thermal_spin(beta, h)
    assert math.isclose(np.trace(s.matrix).real, 1.0, rel_tol=1e-14)
    assert abs(np.trace(SIGMA_Z @ s.matrix).real - s.magnetization) < 1e-12
    if beta * h > 1e-300:
        assert s.magnetization < 0


def test_thermal_spin_extreme_is_finite():
    s = thermal_spin(1e4, 1e4)
    assert np.all(np.isfinite(s.matrix))
    assert s.magnetization == -1.0


def test_bath_spec_validation_and_default_field():
    chain = ChainSpec((1.0, 2.0, 3.0), 1.0, 1.0)
    assert BathSpec("L", 1.0, 1.0).field_for(chain) == 1.0
    assert BathSpec("R", 1.0, 1.0).field_for(chain) == 3.0
    assert BathSpec("R", 1.0, 1.0, h=0.5).field_for(chain) == 0.5
    with pytest.raises(ContractError):
        BathSpec("L", 1.0, 0.0)
    with pytest.raises(ContractError):
        BathSpec("L", -1.0, 1.0)
    with pytest.raises(StructureError):
        BathSpec("X", 1.0, 1.0)
