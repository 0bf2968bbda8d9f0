"""
Lindblad generators and their exact propagation.

Vectorization is column stacking, vec(A rho B) = (B^T ⊗ A) vec(rho). Each
collapse operator C at rate r contributes r (C rho C^dag - {C^dag C, rho} / 2),
the same as the r/2 (2 C rho C^dag - C^dag C rho - rho C^dag C) form.
"""

import numpy as np
import scipy.linalg
from loguru import logger
from pydantic import BaseModel, root_validator, validator

from fockwalk.core.entities import ConfigError, DimensionMismatchError, InvalidStateError, ProtocolParams
from fockwalk.core.quantum import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    CMatrix,
    DensityMatrix,
    SystemSpace,
    as_cmatrix,
    expm,
)


class Lindbladian(BaseModel):
    hamiltonian: np.ndarray
    collapses: list[tuple[np.ndarray, float]] = []

    class Config:
        arbitrary_types_allowed = True

    @validator("hamiltonian", pre=True)
    def hamiltonian_is_hermitian(cls, hamiltonian):
        hamiltonian = as_cmatrix(hamiltonian)
        if hamiltonian.shape[0] != hamiltonian.shape[1]:
            raise DimensionMismatchError(f"Hamiltonian must be square, got {hamiltonian.shape}")
        if np.max(np.abs(hamiltonian - hamiltonian.conj().T)) > 1e-10:
            raise InvalidStateError("Hamiltonian is not Hermitian")
        return hamiltonian

    @validator("collapses", pre=True)
    def rates_non_negative(cls, collapses):
        checked = []
        for op, rate in collapses:
            if rate < 0:
                raise ConfigError(f"Collapse rate must be non-negative, got {rate}")
            checked.append((as_cmatrix(op), float(rate)))
        return checked

    @root_validator(skip_on_failure=True)
    def operators_share_dimension(cls, values):
        dim = values["hamiltonian"].shape[0]
        for op, _ in values["collapses"]:
            if op.shape != (dim, dim):
                raise DimensionMismatchError(f"Collapse operator of shape {op.shape} on a {dim}-dim space")
        return values

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def rhs(self, mat) -> CMatrix:
        out = -1j * (self.hamiltonian @ mat - mat @ self.hamiltonian)
        for op, rate in self.collapses:
            decay = op.conj().T @ op
            out += rate * (op @ mat @ op.conj().T - 0.5 * (decay @ mat + mat @ decay))
        return out


class SystemHamiltonian(BaseModel):
    """
    H_s = -(delta_g + delta_s) a^dag a + g (a^dag sigma_- + sigma_+ a), hbar = 1.
    delta_s = -delta_g puts the coin on resonance with the cavity.
    """

    g: float
    delta_g: float = 0.0
    delta_s: float = 0.0

    class Config:
        frozen = True

    def build(self, space: SystemSpace) -> CMatrix:
        detuning = -(self.delta_g + self.delta_s) * space.lift_fock(space.number)
        coupling = self.g * (np.kron(SIGMA_MINUS, space.adag) + np.kron(SIGMA_PLUS, space.a))
        return detuning + coupling


def system_hamiltonian(space: SystemSpace, g: float, delta_g: float = 0.0, delta_s: float = 0.0) -> CMatrix:
    return SystemHamiltonian(g=g, delta_g=delta_g, delta_s=delta_s).build(space)


def decay_lindbladian(space: SystemSpace, p: ProtocolParams) -> Lindbladian:
    """
    Decay phase: coupling switched off (detuned by delta_g), STED-enhanced
    coin decay and cavity loss.
    """
    if p.decay_hamiltonian:
        hamiltonian = SystemHamiltonian(g=p.g, delta_g=p.delta_g).build(space)
    else:
        hamiltonian = np.zeros((space.dim, space.dim), dtype=complex)
    return Lindbladian(
        hamiltonian=hamiltonian,
        collapses=[
            (space.lift_coin(SIGMA_MINUS), p.gamma_sted),
            (space.lift_fock(space.a), p.gamma_c),
        ],
    )


def jc_lindbladian(space: SystemSpace, p: ProtocolParams) -> Lindbladian:
    """
    Lossy JC phase: resonant coupling with natural coin decay and cavity loss.
    """
    return Lindbladian(
        hamiltonian=SystemHamiltonian(g=p.g, delta_g=p.delta_g, delta_s=-p.delta_g).build(space),
        collapses=[
            (space.lift_coin(SIGMA_MINUS), p.gamma),
            (space.lift_fock(space.a), p.gamma_c),
        ],
    )


def vec(mat) -> np.ndarray:
    return np.asarray(mat).reshape(-1, order="F")


def unvec(vector, dim: int) -> CMatrix:
    return np.asarray(vector).reshape(dim, dim, order="F")


def liouvillian_matrix(lindbladian: Lindbladian) -> CMatrix:
    h = lindbladian.hamiltonian
    eye = np.eye(lindbladian.dim)
    generator = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for op, rate in lindbladian.collapses:
        decay = op.conj().T @ op
        generator += rate * (np.kron(op.conj(), op) - 0.5 * (np.kron(eye, decay) + np.kron(decay.T, eye)))
    return generator


def propagate(lindbladian: Lindbladian, rho: DensityMatrix, t: float) -> DensityMatrix:
    if t < 0:
        raise ConfigError(f"Propagation time must be non-negative, got {t}")
    if rho.dim != lindbladian.dim:
        raise DimensionMismatchError(f"State of dimension {rho.dim} for a {lindbladian.dim}-dim generator")
    if t == 0:
        return rho
    evolved = expm(liouvillian_matrix(lindbladian) * t) @ vec(rho.mat)
    try:
        return DensityMatrix(unvec(evolved, rho.dim))
    except InvalidStateError as e:
        logger.error(f"Propagation over t = {t} produced an invalid state: {e}")
        raise


def integrate_rk4(lindbladian: Lindbladian, rho: DensityMatrix, t: float, steps: int = 1000) -> DensityMatrix:
    """
    Fixed-step fourth-order Runge-Kutta in operator form. Cross-check only.
    """
    if steps < 1 or t < 0:
        raise ConfigError("integrate_rk4 needs steps >= 1 and t >= 0")
    dt = t / steps
    mat = np.array(rho.mat)
    for _ in range(steps):
        k1 = lindbladian.rhs(mat)
        k2 = lindbladian.rhs(mat + 0.5 * dt * k1)
        k3 = lindbladian.rhs(mat + 0.5 * dt * k2)
        k4 = lindbladian.rhs(mat + dt * k3)
        mat = mat + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return DensityMatrix(0.5 * (mat + mat.conj().T))


def _block(lindbladian: Lindbladian, rows: np.ndarray, cols: np.ndarray) -> CMatrix:
    """
    Generator entries L[(i, j), (k, l)] for rho_ij <- rho_kl, rows = (i, j), cols = (k, l).
    """
    i, j = rows[0][:, None], rows[1][:, None]
    k, l = cols[0][None, :], cols[1][None, :]
    same_i, same_j = i == k, j == l
    h = lindbladian.hamiltonian
    block = -1j * (same_j * h[i, k] - h[l, j] * same_i)
    for op, rate in lindbladian.collapses:
        decay = op.conj().T @ op
        block = block + rate * (op.conj()[j, l] * op[i, k] - 0.5 * (same_j * decay[i, k] + decay[l, j] * same_i))
    return block


class SectorLiouvillian:
    """
    The generator restricted to sectors of fixed m = q_i - q_j, where q is a
    charge conserved by the Hamiltonian and shifted uniformly by every
    collapse operator (excitation number for the JC system). Each sector is a
    dense block and is exponentiated on its own.
    """

    def __init__(self, lindbladian: Lindbladian, charges):
        charges = np.asarray(charges)
        if charges.shape != (lindbladian.dim,):
            raise DimensionMismatchError("One charge per basis state is required")
        _check_charge_conserved(lindbladian, charges)
        self.dim = lindbladian.dim
        flat = vec(charges[:, None] - charges[None, :])
        self.sectors = []
        for m in np.unique(flat):
            idx = np.flatnonzero(flat == m)
            pairs = (idx % self.dim, idx // self.dim)
            self.sectors.append((idx, _block(lindbladian, pairs, pairs)))
        logger.debug(f"Split a {self.dim ** 2}-dim generator into {len(self.sectors)} sectors, largest {max(len(s[0]) for s in self.sectors)}")

    def exponentiate(self, t: float) -> "SectorPropagator":
        if t < 0:
            raise ConfigError(f"Propagation time must be non-negative, got {t}")
        return SectorPropagator(self.dim, [(idx, scipy.linalg.expm(block * t)) for idx, block in self.sectors])

    def evolve(self, mat, t: float) -> CMatrix:
        """
        exp(L t) applied sector by sector by scaling and squaring, for
        propagation over times that change from call to call. Holds no state,
        so trajectories may share one instance across threads.
        """
        if t < 0:
            raise ConfigError(f"Propagation time must be non-negative, got {t}")
        v = vec(mat)
        out = np.empty_like(v, dtype=complex)
        for idx, block in self.sectors:
            out[idx] = scipy.linalg.expm(block * t) @ v[idx]
        return unvec(out, self.dim)


class SectorPropagator:
    def __init__(self, dim: int, blocks: list[tuple[np.ndarray, CMatrix]]):
        self.dim = dim
        self.blocks = blocks

    def apply(self, mat) -> CMatrix:
        v = vec(mat)
        out = np.empty_like(v, dtype=complex)
        for idx, propagator in self.blocks:
            out[idx] = propagator @ v[idx]
        return unvec(out, self.dim)


def _check_charge_conserved(lindbladian: Lindbladian, charges: np.ndarray, atol: float = 1e-12):
    shift = charges[:, None] - charges[None, :]
    if np.any((np.abs(lindbladian.hamiltonian) > atol) & (shift != 0)):
        raise ConfigError("Hamiltonian mixes charge sectors")
    for op, rate in lindbladian.collapses:
        shifts = np.unique(shift[np.abs(op) > atol])
        if rate > 0 and len(shifts) > 1:
            raise ConfigError("Collapse operator does not shift the charge uniformly")
