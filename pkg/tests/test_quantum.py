import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fockwalk.core.entities import DimensionMismatchError, InvalidStateError
from fockwalk.core.quantum import (
    EXCITED,
    GROUND,
    SIGMA_X,
    DensityMatrix,
    SystemSpace,
    apply_coin_operator,
    coin_excited_population,
    fidelity,
    fock_populations,
    fock_projector,
    kron,
    partial_trace_coin,
    projector,
    random_density_matrix,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_density_matrix_rejects_invalid_states():
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.diag([0.6, 0.6]))
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.diag([1.2, -0.2]))
    with pytest.raises(DimensionMismatchError):
        DensityMatrix(np.ones((2, 3)) / 2)


def test_density_matrix_is_read_only():
    rho = DensityMatrix(np.diag([0.25, 0.75]))
    with pytest.raises(ValueError):
        rho.mat[0, 0] = 1.0


def test_from_ket_normalizes():
    rho = DensityMatrix.from_ket([1.0, 1.0j])
    assert rho.is_pure()
    assert_allclose(rho.mat, [[0.5, -0.5j], [0.5j, 0.5]], atol=1e-15)
    assert projector([0, 2]).is_pure()


def test_space_layout():
    space = SystemSpace(n_max=3)
    assert space.dim == 8
    assert space.index(EXCITED, 2) == 2
    assert space.index(GROUND, 2) == 6
    assert_allclose(space.adag @ space.a, space.number)
    assert list(space.excitation_numbers()) == [1, 2, 3, 4, 0, 1, 2, 3]
    assert SystemSpace.for_dim(8) == space
    with pytest.raises(DimensionMismatchError):
        SystemSpace.for_dim(7)


def test_partial_trace_of_product_state():
    rng = np.random.default_rng(1)
    space = SystemSpace(n_max=4)
    walker = random_density_matrix(space.fock_dim, rng)
    coin = random_density_matrix(2, rng)
    rho = space.product_state(coin, walker)
    assert_allclose(partial_trace_coin(rho).mat, walker.mat, atol=1e-12)
    assert_allclose(fock_populations(rho), np.diag(walker.mat).real, atol=1e-12)
    assert coin_excited_population(rho) == pytest.approx(coin.mat[0, 0].real)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_kron_is_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))
    assert_allclose(kron(kron(a, b), c), kron(a, kron(b, c)), atol=1e-12)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_coin_operator_matches_kronecker_conjugation(seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(10, rng)
    op = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    lifted = np.kron(op, np.eye(5))
    assert_allclose(apply_coin_operator(rho.mat, op), lifted @ rho.mat @ lifted.conj().T, atol=1e-12)


def test_fidelity_with_fock_projector():
    target = fock_projector(5, 3)
    assert fidelity(target, target) == pytest.approx(1.0)
    assert fidelity(fock_projector(5, 2), target) == pytest.approx(0.0)
    with pytest.raises(DimensionMismatchError):
        fock_projector(5, 5)


def test_flip_moves_ground_to_excited():
    space = SystemSpace(n_max=2)
    rho = space.basis_state(GROUND, 1)
    flipped = DensityMatrix(apply_coin_operator(rho.mat, SIGMA_X))
    assert coin_excited_population(flipped) == pytest.approx(1.0)


def test_random_density_matrix_rank():
    rng = np.random.default_rng(7)
    rho = random_density_matrix(6, rng, rank=2)
    eigenvalues = np.linalg.eigvalsh(rho.mat)
    assert np.sum(eigenvalues > 1e-10) == 2
    assert np.trace(rho.mat).real == pytest.approx(1.0)
