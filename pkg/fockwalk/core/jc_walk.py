"""
Jaynes-Cummings quantum random walk on the Fock ladder.

One step is JC evolution, an optional coin reset channel, then a coin
operation (Hadamard or pi flip). Under the trapping condition
g * tau * sqrt(n_T + 1) = k * pi the walker cannot climb past n_T.
"""

import math

import numpy as np
from loguru import logger
from pydantic import BaseModel, validator

from fockwalk.core.entities import ConfigError, JCParams, TruncationFault, WalkVariant
from fockwalk.core.quantum import (
    COIN_DIM,
    EXCITED,
    GROUND,
    SIGMA_MINUS,
    SIGMA_X,
    SIGMA_Z,
    CMatrix,
    DensityMatrix,
    SystemSpace,
    apply_coin_operator,
    trace_out_coin,
)
from fockwalk.utils.config.server import TRUNCATION_TOLERANCE


class CoinChannel(BaseModel):
    """
    Spontaneous-emission reset of the coin: S_0 = |g><g| + sqrt(eta)|e><e|,
    S_1 = sqrt(1 - eta)|g><e|. eta = 0 resets the coin to |g>.
    """

    eta: float

    class Config:
        frozen = True

    @validator("eta")
    def eta_in_unit_interval(cls, eta):
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {eta}")
        return eta

    @property
    def kraus(self) -> tuple[CMatrix, CMatrix]:
        s0 = np.zeros((COIN_DIM, COIN_DIM), dtype=complex)
        s0[GROUND, GROUND] = 1.0
        s0[EXCITED, EXCITED] = math.sqrt(self.eta)
        s1 = math.sqrt(1.0 - self.eta) * SIGMA_MINUS
        return s0, s1

    def completeness_error(self) -> float:
        total = sum(s.conj().T @ s for s in self.kraus)
        return float(np.max(np.abs(total - np.eye(COIN_DIM))))

    def apply(self, rho_c) -> CMatrix:
        rho_c = np.asarray(rho_c, dtype=complex)
        return sum(s @ rho_c @ s.conj().T for s in self.kraus)


def coin_damping(eta: float) -> CoinChannel:
    return CoinChannel(eta=eta)


def eta_from_duration(t: float, reset_time: float) -> float:
    if reset_time <= 0 or t < 0:
        raise ConfigError("reset_time must be positive and t non-negative")
    return math.exp(-t / reset_time)


def rotation_x(angle: float) -> CMatrix:
    # exp(-i angle sigma_x / 2)
    return math.cos(angle / 2) * np.eye(COIN_DIM, dtype=complex) - 1j * math.sin(angle / 2) * SIGMA_X


def coin_flip() -> CMatrix:
    return rotation_x(math.pi)


def coin_hadamard() -> CMatrix:
    return (SIGMA_X + SIGMA_Z) / math.sqrt(2)


def jc_unitary_for_angle(g_tau: float, space: SystemSpace) -> CMatrix:
    """
    Exact JC propagator assembled from its invariant 2x2 blocks
    span{|e, n>, |g, n+1>}, each rotated by theta_n = g_tau * sqrt(n + 1).
    |g, 0> and the top edge |e, n_max> are left untouched.
    """
    fock_dim = space.fock_dim
    u = np.zeros((space.dim, space.dim), dtype=complex)
    n = np.arange(fock_dim - 1)
    theta = g_tau * np.sqrt(n + 1)
    excited = space.index(EXCITED, 0) + n
    ground = space.index(GROUND, 0) + n + 1
    u[excited, excited] = np.cos(theta)
    u[ground, ground] = np.cos(theta)
    u[excited, ground] = -1j * np.sin(theta)
    u[ground, excited] = -1j * np.sin(theta)
    u[space.index(GROUND, 0), space.index(GROUND, 0)] = 1.0
    u[space.index(EXCITED, space.n_max), space.index(EXCITED, space.n_max)] = 1.0
    return u


def jc_unitary(params: JCParams, space: SystemSpace) -> CMatrix:
    return jc_unitary_for_angle(params.g * params.tau, space)


def emit_probability(params: JCParams, n: int) -> float:
    if n < 0:
        raise ConfigError(f"photon number must be non-negative, got {n}")
    return math.sin(params.theta(n)) ** 2


def trapping_time(g: float, n_target: int, k: int = 1) -> float:
    if not g > 0:
        raise ConfigError(f"g must be positive, got {g}")
    if n_target < 0 or k < 1:
        raise ConfigError("n_target must be >= 0 and k >= 1")
    return k * math.pi / (g * math.sqrt(n_target + 1))


def _coin_operation(variant: WalkVariant) -> CMatrix:
    return coin_hadamard() if variant.kind == "hadamard" else coin_flip()


def _step_matrix(mat: CMatrix, u: CMatrix, variant: WalkVariant) -> CMatrix:
    mat = u @ mat @ u.conj().T
    if variant.kind == "damped":
        mat = sum(apply_coin_operator(mat, s) for s in coin_damping(variant.eta).kraus)
    return apply_coin_operator(mat, _coin_operation(variant))


def walk_step(rho: DensityMatrix, variant: WalkVariant, params: JCParams) -> DensityMatrix:
    space = SystemSpace.for_dim(rho.dim)
    return DensityMatrix(_step_matrix(rho.mat, jc_unitary(params, space), variant))


def reduced_walker_map(rho_w: DensityMatrix, params: JCParams) -> DensityMatrix:
    fock_dim = rho_w.dim
    if fock_dim < 2:
        raise ConfigError("walker space needs at least two levels")
    n = np.arange(fock_dim)
    theta = params.g * params.tau * np.sqrt(n + 1)
    cos_factor = np.cos(theta)
    sin_factor = np.sin(theta) / np.sqrt(n + 1)
    # top edge evolves trivially, matching jc_unitary
    cos_factor[-1] = 1.0
    sin_factor[-1] = 0.0
    adag = np.diag(np.sqrt(np.arange(1, fock_dim)), k=-1)
    stay = cos_factor[:, None] * rho_w.mat * cos_factor[None, :]
    climb = adag @ (sin_factor[:, None] * rho_w.mat * sin_factor[None, :]) @ adag.T
    return DensityMatrix(stay + climb)


def excited_product(rho_w: DensityMatrix) -> DensityMatrix:
    """
    |e><e| ⊗ rho_w on the matching coin ⊗ Fock space.
    """
    coin = np.zeros((COIN_DIM, COIN_DIM), dtype=complex)
    coin[EXCITED, EXCITED] = 1.0
    return DensityMatrix(np.kron(coin, rho_w.mat))


def check_truncation(populations: np.ndarray, step: int | None = None, tolerance: float = TRUNCATION_TOLERANCE) -> float:
    n_max = len(populations) - 1
    leak = float(np.sum(populations[max(n_max - 2, 0):]))
    if leak >= tolerance:
        logger.error(f"Population {leak:.3e} reached the top of the ladder (n_max = {n_max})")
        raise TruncationFault(leak=leak, n_max=n_max, step=step)
    return leak


def run_walk(variant: WalkVariant, params: JCParams, steps: int, initial: DensityMatrix) -> list[np.ndarray]:
    if steps < 0:
        raise ConfigError(f"steps must be non-negative, got {steps}")
    space = SystemSpace.for_dim(initial.dim)
    u = jc_unitary(params, space)
    rho = initial
    distributions = [np.real(np.diag(trace_out_coin(rho.mat)))]
    check_truncation(distributions[0], step=0)
    for step in range(1, steps + 1):
        rho = DensityMatrix(_step_matrix(rho.mat, u, variant))
        distributions.append(np.real(np.diag(trace_out_coin(rho.mat))))
        check_truncation(distributions[-1], step=step)
    logger.debug(f"Walk {variant.kind} finished {steps} steps on n_max = {space.n_max}")
    return distributions


def reduced_walk_discrepancy(rho_w: DensityMatrix, params: JCParams, eta: float, steps: int) -> list[float]:
    """
    Max elementwise gap between Tr_c E^m(|e><e| ⊗ rho_w) and E_W^m(rho_w)
    for m = 1..steps. Zero at eta = 0, O(eta^(3/2)) otherwise.
    """
    variant = WalkVariant.damped(eta)
    full = excited_product(rho_w)
    reduced = rho_w
    u = jc_unitary(params, SystemSpace.for_dim(full.dim))
    gaps = []
    for _ in range(steps):
        full = DensityMatrix(_step_matrix(full.mat, u, variant))
        reduced = reduced_walker_map(reduced, params)
        gaps.append(float(np.max(np.abs(trace_out_coin(full.mat) - reduced.mat))))
    return gaps


def apply_channel(channel: CoinChannel, rho: DensityMatrix) -> DensityMatrix:
    """
    (channel ⊗ id) on a coin ⊗ Fock state.
    """
    SystemSpace.for_dim(rho.dim)
    return DensityMatrix(sum(apply_coin_operator(rho.mat, s) for s in channel.kraus))
