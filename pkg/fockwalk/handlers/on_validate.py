"""
Self-check suite behind `fockwalk validate`: channel and unitary sanity,
trapping, the decay oracles and the protocol fixed point.
"""

import math
from typing import Callable

import numpy as np
from loguru import logger
from pydantic import BaseModel

from fockwalk.core.entities import JCParams, ProtocolParams, ValidationFailure, WalkVariant
from fockwalk.core.jc_walk import (
    coin_damping,
    jc_unitary_for_angle,
    reduced_walk_discrepancy,
    reduced_walker_map,
    run_walk,
    trapping_time,
    walk_step,
)
from fockwalk.core.lindblad import (
    Lindbladian,
    SectorLiouvillian,
    jc_lindbladian,
    propagate,
    system_hamiltonian,
)
from fockwalk.core.protocol import protocol_step
from fockwalk.core.quantum import (
    EXCITED,
    SIGMA_MINUS,
    SystemSpace,
    coin_excited_population,
    expm,
    fock_populations,
    random_density_matrix,
)

SAMPLES = 20


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str


def check_kraus_completeness(rng) -> tuple[bool, str]:
    worst = max(coin_damping(eta).completeness_error() for eta in np.linspace(0.0, 1.0, 11))
    return worst <= 1e-12, f"max |sum S^dag S - I| = {worst:.2e}"


def check_jc_unitarity(rng) -> tuple[bool, str]:
    space = SystemSpace(n_max=12)
    worst = 0.0
    for g_tau in rng.uniform(0.0, 3.0, size=SAMPLES):
        u = jc_unitary_for_angle(g_tau, space)
        worst = max(worst, float(np.max(np.abs(u.conj().T @ u - np.eye(space.dim)))))
    return worst <= 1e-12, f"max |U^dag U - I| = {worst:.2e}"


def check_jc_matches_hamiltonian(rng) -> tuple[bool, str]:
    space = SystemSpace(n_max=10)
    h = system_hamiltonian(space, g=1.0)
    worst = 0.0
    for t in rng.uniform(0.0, 3.0, size=5):
        worst = max(worst, float(np.max(np.abs(jc_unitary_for_angle(t, space) - expm(-1j * t * h)))))
    return worst <= 1e-10, f"max |U - exp(-iHt)| = {worst:.2e}"


def check_walk_trace(rng) -> tuple[bool, str]:
    params = JCParams(g=1.0, tau=trapping_time(1.0, 6))
    worst = 0.0
    for variant in (WalkVariant.unitary_hadamard(), WalkVariant.unitary_flip(), WalkVariant.damped(0.3)):
        for _ in range(SAMPLES // 4):
            rho = walk_step(random_density_matrix(2 * 12, rng), variant, params)
            worst = max(worst, abs(np.trace(rho.mat).real - 1.0))
    for _ in range(SAMPLES // 4):
        rho_w = reduced_walker_map(random_density_matrix(12, rng), params)
        worst = max(worst, abs(np.trace(rho_w.mat).real - 1.0))
    return worst <= 1e-12, f"max |Tr - 1| = {worst:.2e}"


def check_trapping_ceiling(rng) -> tuple[bool, str]:
    n_target = 16
    space = SystemSpace(n_max=n_target + 10)
    params = JCParams(g=1.0, tau=trapping_time(1.0, n_target))
    distributions = run_walk(WalkVariant.damped(0.0), params, 200, space.basis_state(EXCITED, 0))
    above = max(float(dist[n_target + 1 :].sum()) for dist in distributions)
    return above <= 1e-12, f"max P(n > {n_target}) = {above:.2e}"


def check_reduced_walk(rng) -> tuple[bool, str]:
    params = JCParams(g=1.0, tau=trapping_time(1.0, 6))
    gaps = reduced_walk_discrepancy(random_density_matrix(12, rng), params, eta=0.0, steps=10)
    return max(gaps) <= 1e-12, f"max |Tr_c E - E_W| = {max(gaps):.2e}"


def check_coin_decay(rng) -> tuple[bool, str]:
    space = SystemSpace(n_max=3)
    rate, t = 1e4, 3e-4
    lindbladian = Lindbladian(hamiltonian=np.zeros((space.dim, space.dim)), collapses=[(space.lift_coin(SIGMA_MINUS), rate)])
    rho = propagate(lindbladian, space.basis_state(EXCITED, 1), t)
    error = abs(coin_excited_population(rho) - math.exp(-rate * t))
    return error <= 1e-9, f"|P_e - exp(-rate t)| = {error:.2e}"


def check_cavity_decay(rng) -> tuple[bool, str]:
    space = SystemSpace(n_max=8)
    rate, t, n = 0.1, 2.0, 5
    lindbladian = Lindbladian(hamiltonian=np.zeros((space.dim, space.dim)), collapses=[(space.lift_fock(space.a), rate)])
    rho = propagate(lindbladian, space.basis_state(EXCITED, n), t)
    error = abs(fock_populations(rho)[n] - math.exp(-n * rate * t))
    return error <= 1e-8, f"|P_n - exp(-n rate t)| = {error:.2e}"


def check_sector_propagator(rng) -> tuple[bool, str]:
    space = SystemSpace(n_max=6)
    lindbladian = jc_lindbladian(space, ProtocolParams(g=2.0, gamma=1.0, gamma_c=0.5, n_target=2, n_max=6))
    rho = random_density_matrix(space.dim, rng)
    t = 0.3
    sectors = SectorLiouvillian(lindbladian, space.excitation_numbers())
    dense = propagate(lindbladian, rho, t).mat
    exact = float(np.max(np.abs(sectors.exponentiate(t).apply(rho.mat) - dense)))
    evolved = float(np.max(np.abs(sectors.evolve(rho.mat, t) - dense)))
    return exact <= 1e-10 and evolved <= 1e-10, f"max |sector - dense| = {exact:.2e} (evolve {evolved:.2e})"


def check_protocol_fixed_point(rng) -> tuple[bool, str]:
    p = ProtocolParams(gamma_c=0.0, sigma_n=0.0, n_target=4, steps=1)
    space = SystemSpace(n_max=p.n_max)
    rho = space.basis_state(EXCITED, p.n_target)
    change = abs(fock_populations(protocol_step(rho, p))[p.n_target] - 1.0)
    bound = math.exp(-p.gamma_sted * p.tau_gamma) + 1e-6
    return change <= bound, f"|dF| = {change:.2e} (bound {bound:.2e})"


CHECKS: dict[str, Callable[[np.random.Generator], tuple[bool, str]]] = {
    "kraus completeness": check_kraus_completeness,
    "jc unitarity": check_jc_unitarity,
    "jc unitary matches exp(-iHt)": check_jc_matches_hamiltonian,
    "walk trace preservation": check_walk_trace,
    "trapping ceiling": check_trapping_ceiling,
    "reduced walk at eta = 0": check_reduced_walk,
    "coin decay oracle": check_coin_decay,
    "cavity decay oracle": check_cavity_decay,
    "sector propagator": check_sector_propagator,
    "protocol fixed point": check_protocol_fixed_point,
}


def run_checks(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for name, check in CHECKS.items():
        try:
            passed, detail = check(rng)
        except Exception as e:
            logger.exception(f"Check {name} raised")
            passed, detail = False, f"{type(e).__name__}: {e}"
        results.append(CheckResult(name=name, passed=bool(passed), detail=detail))
    return results


def on_validate(seed: int = 0) -> list[CheckResult]:
    results = run_checks(seed)
    for r in results:
        (logger.info if r.passed else logger.error)(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    return results


def raise_on_failure(results: list[CheckResult]):
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise ValidationFailure(failed)
