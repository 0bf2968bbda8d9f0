"""
Noisy Fock-state preparation protocol.

Each step runs the JC coupling for the trapping time (with timing noise
delta_tau), a STED-enhanced decay phase of length tau_gamma, and a pi flip of
the coin (with pulse-area noise delta_x). Noisy runs average the density
matrices of an ensemble of trajectories, each driven by its own RNG stream.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np
from loguru import logger

from fockwalk.core.entities import (
    ConfigError,
    DimensionMismatchError,
    NoiseDraws,
    NotStationaryError,
    ProtocolParams,
    StepRecord,
)
from fockwalk.core.jc_walk import check_truncation, jc_unitary_for_angle, rotation_x, trapping_time
from fockwalk.core.lindblad import SectorLiouvillian, decay_lindbladian, jc_lindbladian
from fockwalk.core.quantum import (
    EXCITED,
    GROUND,
    CMatrix,
    DensityMatrix,
    SystemSpace,
    apply_coin_operator,
    trace_out_coin,
)
from fockwalk.utils.config.server import MAX_WORKERS, STABILITY_TOLERANCE, STABILITY_WINDOW

PROGRESS_EVERY = 25


def noisy_jc_unitary(p: ProtocolParams, delta_tau: float, space: SystemSpace | None = None) -> CMatrix:
    space = space or SystemSpace(n_max=p.n_max)
    tau = trapping_time(p.g, p.n_target, p.k)
    return jc_unitary_for_angle(p.g * tau * (1.0 + delta_tau), space)


def flip_operator(delta_x: float) -> CMatrix:
    return rotation_x(math.pi * (1.0 + delta_x))


def draw_noise(rng: np.random.Generator, sigma_n: float) -> NoiseDraws:
    if sigma_n == 0:
        return NoiseDraws()
    # a negative coupling time is unphysical
    delta_tau = max(float(rng.normal(0.0, sigma_n)), float(np.nextafter(-1.0, 0.0)))
    delta_x = float(rng.normal(0.0, sigma_n))
    return NoiseDraws(delta_tau=delta_tau, delta_x=delta_x)


class ProtocolOperators:
    """
    Everything a step needs that depends only on the parameters.
    """

    def __init__(self, p: ProtocolParams):
        self.params = p
        self.space = SystemSpace(n_max=p.n_max)
        self.trapping_time = trapping_time(p.g, p.n_target, p.k)
        charges = self.space.excitation_numbers()
        self.decay = SectorLiouvillian(decay_lindbladian(self.space, p), charges).exponentiate(p.tau_gamma)
        self.jc_exact = noisy_jc_unitary(p, 0.0, self.space)
        self.jc_lossy = None
        if p.jc_mode == "lindblad":
            self.jc_lossy = SectorLiouvillian(jc_lindbladian(self.space, p), charges)
            self.jc_lossy_exact = self.jc_lossy.exponentiate(self.trapping_time)
        logger.debug(f"Built protocol operators on n_max = {p.n_max} (dim {self.space.dim}, jc_mode = {p.jc_mode})")

    def jc_phase(self, mat: CMatrix, delta_tau: float) -> CMatrix:
        if self.jc_lossy is not None:
            if delta_tau == 0:
                return self.jc_lossy_exact.apply(mat)
            return self.jc_lossy.evolve(mat, self.trapping_time * (1.0 + delta_tau))
        u = self.jc_exact if delta_tau == 0 else noisy_jc_unitary(self.params, delta_tau, self.space)
        return u @ mat @ u.conj().T

    def target_population(self, mat: CMatrix) -> float:
        excited = self.space.index(EXCITED, self.params.n_target)
        ground = self.space.index(GROUND, self.params.n_target)
        return float(mat[excited, excited].real + mat[ground, ground].real)


@lru_cache(maxsize=8)
def protocol_operators(p: ProtocolParams) -> ProtocolOperators:
    return ProtocolOperators(p)


def _advance(mat: CMatrix, ops: ProtocolOperators, draws: NoiseDraws) -> CMatrix:
    mat = ops.jc_phase(mat, draws.delta_tau)
    mat = ops.decay.apply(mat)
    mat = apply_coin_operator(mat, flip_operator(draws.delta_x))
    mat = 0.5 * (mat + mat.conj().T)
    return mat / np.trace(mat).real


def _populations(mat: CMatrix) -> np.ndarray:
    return np.real(np.diag(trace_out_coin(mat)))


def protocol_step(rho: DensityMatrix, p: ProtocolParams, draws: NoiseDraws | None = None) -> DensityMatrix:
    ops = protocol_operators(p)
    if rho.dim != ops.space.dim:
        raise DimensionMismatchError(f"State of dimension {rho.dim} for n_max = {p.n_max}")
    mat = _advance(rho.mat, ops, draws or NoiseDraws())
    check_truncation(_populations(mat), tolerance=p.truncation_tolerance)
    return DensityMatrix(mat)


def initial_state(p: ProtocolParams) -> DensityMatrix:
    return SystemSpace(n_max=p.n_max).basis_state(EXCITED, 0)


def _record(step: int, mean: CMatrix, fidelities: np.ndarray, p: ProtocolParams) -> StepRecord:
    rho = DensityMatrix(mean)
    populations = _populations(rho.mat)
    return StepRecord(
        step=step,
        fidelity=float(populations[p.n_target]),
        fidelity_std=float(np.std(fidelities)),
        populations=populations.tolist(),
        coin_excited=float(np.diag(rho.mat).real[: p.n_max + 1].sum()),
        leak=float(populations[p.n_target + 1 :].sum()),
        truncation_leak=float(populations[p.n_max - 2 :].sum()),
    )


def run_protocol(p: ProtocolParams, initial: DensityMatrix | None = None, max_workers: int = MAX_WORKERS) -> list[StepRecord]:
    ops = protocol_operators(p)
    initial = initial or initial_state(p)
    if initial.dim != ops.space.dim:
        raise DimensionMismatchError(f"Initial state of dimension {initial.dim} for n_max = {p.n_max}")
    trajectories = 1 if p.sigma_n == 0 else p.trajectories
    rngs = [np.random.default_rng(child) for child in np.random.SeedSequence(p.seed).spawn(trajectories)]
    states = [np.array(initial.mat) for _ in range(trajectories)]
    logger.info(
        f"Running {p.steps} protocol steps for n_T = {p.n_target} with {trajectories} trajectories "
        f"(sigma_n = {p.sigma_n}, gamma_c = {p.gamma_c}, n_max = {p.n_max})"
    )

    executor = ThreadPoolExecutor(max_workers=max_workers) if max_workers > 1 and trajectories > 1 else None
    records = [_record(0, initial.mat, np.array([ops.target_population(initial.mat)]), p)]
    try:
        for step in range(1, p.steps + 1):
            # draws stay in trajectory order whatever the worker count
            draws = [draw_noise(rng, p.sigma_n) for rng in rngs]
            if executor is None:
                states = [_advance(mat, ops, d) for mat, d in zip(states, draws)]
            else:
                states = list(executor.map(lambda args: _advance(args[0], ops, args[1]), zip(states, draws)))
            stacked = np.stack(states)
            fidelities = np.array([ops.target_population(mat) for mat in states])
            mean = stacked.mean(axis=0)
            check_truncation(_populations(mean), step=step, tolerance=p.truncation_tolerance)
            records.append(_record(step, mean, fidelities, p))
            if step % PROGRESS_EVERY == 0:
                logger.debug(f"Step {step}: F = {records[-1].fidelity:.4f}, leak = {records[-1].leak:.3e}")
    finally:
        if executor is not None:
            executor.shutdown()
    return records


def stabilization_step(records: list[StepRecord], window: int = STABILITY_WINDOW, tolerance: float = STABILITY_TOLERANCE) -> int | None:
    """
    First step s with max - min of the fidelity over [s, s + window] below
    tolerance. The search starts once the fidelity first reaches tolerance,
    so an unprepared stretch of zeros never counts as stable. A constant
    sequence is stable at step 0, except a constant zero one, which gives
    None. Only full windows are considered.
    """
    if not records:
        raise ConfigError("stabilization_step needs at least one record")
    fidelities = np.array([r.fidelity for r in records])
    started = np.flatnonzero(fidelities >= tolerance)
    if len(started) == 0:
        return None
    for s in range(started[0], len(fidelities) - window):
        span = fidelities[s : s + window + 1]
        if span.max() - span.min() < tolerance:
            return records[s].step
    return None


def stationary_record(records: list[StepRecord], window: int = STABILITY_WINDOW) -> StepRecord:
    s = stabilization_step(records, window=window)
    if s is None:
        raise NotStationaryError()
    by_step = {r.step: r for r in records}
    return by_step.get(s + window, records[-1])


def peak_fidelity(records: list[StepRecord]) -> tuple[int, float]:
    if not records:
        raise ConfigError("peak_fidelity needs at least one record")
    best = max(records, key=lambda r: r.fidelity)
    return best.step, best.fidelity


def step_duration(p: ProtocolParams) -> float:
    return trapping_time(p.g, p.n_target, p.k) + p.tau_gamma


def off_resonant_emission(p: ProtocolParams, n: int) -> float:
    """
    Fraction of |e, n> moved to |g, n + 1> by the detuned coupling while the
    coin decays at gamma_sted.
    """
    if n < 0:
        raise ConfigError(f"photon number must be non-negative, got {n}")
    return 4 * p.g**2 * (n + 1) / (p.gamma_sted**2 + 4 * p.delta_g**2)
