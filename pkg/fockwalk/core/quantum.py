"""
Dense complex-matrix kernel shared by the walk, Lindblad and protocol layers.

Basis ordering is coin ⊗ Fock with the coin index 0 = |e>, 1 = |g>, so the
state |c, n> sits at index c * fock_dim + n.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import numpy.typing as npt
import scipy.linalg
from loguru import logger
from pydantic import BaseModel, validator

from fockwalk.core.entities import DimensionMismatchError, InvalidStateError
from fockwalk.utils.config.server import (
    EIGENVALUE_TOLERANCE,
    HERMITIAN_TOLERANCE,
    TRACE_TOLERANCE,
)

CMatrix = npt.NDArray[np.complex128]

EXCITED = 0
GROUND = 1
COIN_DIM = 2

SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |g><e|
SIGMA_PLUS = SIGMA_MINUS.conj().T
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)  # |e><e| - |g><g|
IDENTITY_2 = np.eye(2, dtype=complex)


def as_cmatrix(values) -> CMatrix:
    mat = np.array(values, dtype=complex)
    if mat.ndim != 2 or mat.size == 0:
        raise DimensionMismatchError(f"Expected a non-empty 2-d matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise InvalidStateError("Matrix has non-finite entries")
    return mat


@dataclass(frozen=True)
class DensityMatrix:
    mat: CMatrix

    def __post_init__(self):
        mat = as_cmatrix(self.mat)
        rows, cols = mat.shape
        if rows != cols:
            raise DimensionMismatchError(f"Density matrix must be square, got {mat.shape}")
        hermitian_error = np.max(np.abs(mat - mat.conj().T))
        if hermitian_error > HERMITIAN_TOLERANCE:
            raise InvalidStateError(f"Density matrix is not Hermitian (max |rho - rho^dag| = {hermitian_error:.3e})")
        trace = np.trace(mat).real
        if abs(trace - 1.0) > TRACE_TOLERANCE:
            raise InvalidStateError(f"Density matrix trace is {trace!r}, expected 1")
        min_eigenvalue = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))[0]
        if min_eigenvalue < -EIGENVALUE_TOLERANCE:
            raise InvalidStateError(f"Density matrix has eigenvalue {min_eigenvalue:.3e}")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def from_ket(cls, ket) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex).reshape(-1)
        ket = ket / np.linalg.norm(ket)
        return cls(np.outer(ket, ket.conj()))

    def is_pure(self, atol: float = 1e-10) -> bool:
        return abs(np.trace(self.mat @ self.mat).real - 1.0) <= atol


class SystemSpace(BaseModel):
    """
    Coin (two levels) ⊗ Fock ladder |0> .. |n_max>.
    """

    n_max: int

    class Config:
        frozen = True

    @validator("n_max")
    def ladder_has_two_levels(cls, n_max):
        if n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {n_max}")
        return n_max

    @classmethod
    def for_dim(cls, dim: int) -> "SystemSpace":
        if dim % COIN_DIM or dim < 2 * COIN_DIM:
            raise DimensionMismatchError(f"Dimension {dim} is not 2 * fock_dim with fock_dim >= 2")
        return cls(n_max=dim // COIN_DIM - 1)

    @property
    def fock_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return COIN_DIM * self.fock_dim

    def index(self, coin: int, n: int) -> int:
        return coin * self.fock_dim + n

    @property
    def a(self) -> CMatrix:
        return annihilation(self.fock_dim)

    @property
    def adag(self) -> CMatrix:
        return annihilation(self.fock_dim).conj().T

    @property
    def number(self) -> CMatrix:
        return np.diag(np.arange(self.fock_dim)).astype(complex)

    def lift_coin(self, op) -> CMatrix:
        return np.kron(op, np.eye(self.fock_dim))

    def lift_fock(self, op) -> CMatrix:
        return np.kron(IDENTITY_2, op)

    def excitation_numbers(self) -> np.ndarray:
        # |e, n> carries n + 1 excitations, |g, n> carries n
        n = np.arange(self.fock_dim)
        return np.concatenate([n + 1, n])

    def ket(self, coin: int, n: int) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index(coin, n)] = 1.0
        return psi

    def basis_state(self, coin: int, n: int) -> DensityMatrix:
        return DensityMatrix.from_ket(self.ket(coin, n))

    def product_state(self, coin_state, walker_state) -> DensityMatrix:
        coin_mat = coin_state.mat if isinstance(coin_state, DensityMatrix) else as_cmatrix(coin_state)
        walker_mat = walker_state.mat if isinstance(walker_state, DensityMatrix) else as_cmatrix(walker_state)
        if coin_mat.shape != (COIN_DIM, COIN_DIM) or walker_mat.shape != (self.fock_dim, self.fock_dim):
            raise DimensionMismatchError("Coin or walker state does not match the space")
        return DensityMatrix(kron(coin_mat, walker_mat))


@lru_cache(maxsize=None)
def annihilation(fock_dim: int) -> CMatrix:
    a = np.diag(np.sqrt(np.arange(1, fock_dim)), k=1).astype(complex)
    a.setflags(write=False)
    return a


def kron(a, b) -> CMatrix:
    return np.kron(as_cmatrix(a), as_cmatrix(b))


def expm(m) -> CMatrix:
    m = as_cmatrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expm needs a square matrix, got {m.shape}")
    # Pade scaling-and-squaring (Al-Mohy & Higham)
    return scipy.linalg.expm(m)


def trace_out_coin(mat) -> CMatrix:
    dim = mat.shape[0]
    fock_dim = dim // COIN_DIM
    blocks = np.asarray(mat).reshape(COIN_DIM, fock_dim, COIN_DIM, fock_dim)
    return blocks[EXCITED, :, EXCITED, :] + blocks[GROUND, :, GROUND, :]


def partial_trace_coin(rho: DensityMatrix) -> DensityMatrix:
    SystemSpace.for_dim(rho.dim)
    return DensityMatrix(trace_out_coin(rho.mat))


def fock_populations(rho: DensityMatrix) -> np.ndarray:
    fock_dim = rho.dim // COIN_DIM
    diagonal = np.diag(rho.mat).real
    return diagonal[:fock_dim] + diagonal[fock_dim:]


def coin_excited_population(rho: DensityMatrix) -> float:
    fock_dim = rho.dim // COIN_DIM
    return float(np.diag(rho.mat).real[:fock_dim].sum())


def projector(ket) -> DensityMatrix:
    return DensityMatrix.from_ket(ket)


def fock_projector(fock_dim: int, n: int) -> DensityMatrix:
    if not 0 <= n < fock_dim:
        raise DimensionMismatchError(f"Fock level {n} outside 0..{fock_dim - 1}")
    ket = np.zeros(fock_dim, dtype=complex)
    ket[n] = 1.0
    return DensityMatrix.from_ket(ket)


def fidelity(rho: DensityMatrix, target: DensityMatrix) -> float:
    if rho.dim != target.dim:
        raise DimensionMismatchError(f"Cannot compare states of dimension {rho.dim} and {target.dim}")
    overlap = np.sum(rho.mat * target.mat.T)
    if abs(overlap.imag) > 1e-10:
        logger.warning(f"Discarding imaginary overlap {overlap.imag:.3e}")
    return float(overlap.real)


def apply_coin_operator(mat, op) -> CMatrix:
    """
    (op ⊗ I) mat (op ⊗ I)^dag without forming the Kronecker product.
    """
    dim = mat.shape[0]
    fock_dim = dim // COIN_DIM
    blocks = np.asarray(mat).reshape(COIN_DIM, fock_dim, COIN_DIM, fock_dim)
    out = np.einsum("ac,cidj,bd->aibj", op, blocks, op.conj())
    return out.reshape(dim, dim)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    rank = dim if rank is None else rank
    ginibre = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    mat = ginibre @ ginibre.conj().T
    mat = 0.5 * (mat + mat.conj().T)
    return DensityMatrix(mat / np.trace(mat).real)
