"""
Closed-form fidelity budget of the trapped walk and the estimate of the
constant alpha that links it to simulated stationary states.

Steady state balances the cavity loss from n_T against the return flow
from n_T - 1. With s2 the transfer probability out of n_T - 1 at the trapping
time and M the decay-phase length in units of the coin lifetime,

    F (1 - exp(-n_T r M)) + exp(-M) s2 = alpha (1 - F) s2

where r is the cavity-to-coin rate ratio. Linearizing the loss and setting
s2 to 1 gives the approximate budget analytic_fidelity.
"""

import math

import numpy as np
from loguru import logger
from pydantic import BaseModel
from scipy.stats import poisson

from fockwalk.core.entities import BudgetParams, ConfigError, StepRecord
from fockwalk.core.protocol import stationary_record

MIN_ALPHA_TARGETS = 3


def analytic_fidelity(b: BudgetParams) -> float:
    denominator = math.pi**2 * b.alpha + 4 * b.wait_multiple * b.n_target**3 * b.rate_ratio
    if denominator <= 0:
        raise ConfigError("Fidelity budget has a non-positive denominator (alpha = 0 and no cavity loss)")
    return math.pi**2 * (b.alpha - residual_ground_population(b.wait_multiple)) / denominator


def trap_transfer_probability(n_target: int) -> float:
    if n_target < 0:
        raise ConfigError(f"n_target must be non-negative, got {n_target}")
    return math.sin(math.pi * math.sqrt(n_target / (n_target + 1))) ** 2


def residual_ground_population(wait_multiple: float) -> float:
    # the coin is left excited with probability exp(-M) after the decay phase
    return math.exp(-wait_multiple)


def balance_residual(fidelity: float, b: BudgetParams) -> float:
    s2 = trap_transfer_probability(b.n_target)
    loss = 1.0 - math.exp(-b.n_target * b.rate_ratio * b.wait_multiple)
    return fidelity * loss + residual_ground_population(b.wait_multiple) * s2 - b.alpha * (1.0 - fidelity) * s2


def solve_balance_fidelity(b: BudgetParams) -> float:
    s2 = trap_transfer_probability(b.n_target)
    loss = 1.0 - math.exp(-b.n_target * b.rate_ratio * b.wait_multiple)
    denominator = loss + b.alpha * s2
    if denominator <= 0:
        raise ConfigError("Balance relation is degenerate (alpha = 0 and no cavity loss)")
    return s2 * (b.alpha - residual_ground_population(b.wait_multiple)) / denominator


def max_target_for_fidelity(min_fidelity: float, alpha: float = 0.5, wait_multiple: float = 5.0, rate_ratio: float = 1e-5) -> int | None:
    """
    Largest n_T whose analytic fidelity is at least min_fidelity. None means
    every n_T qualifies (no cavity loss), 0 means none does.
    """
    if not 0 < min_fidelity <= 1:
        raise ConfigError(f"min_fidelity must lie in (0, 1], got {min_fidelity}")

    def clears(n: int) -> bool:
        b = BudgetParams(n_target=n, wait_multiple=wait_multiple, alpha=alpha, rate_ratio=rate_ratio)
        return analytic_fidelity(b) >= min_fidelity

    if not clears(1):
        return 0
    if rate_ratio == 0:
        return None
    # F >= F_min  <=>  n^3 <= pi^2 (alpha (1 - F_min) - exp(-M)) / (4 M r F_min)
    bound = math.pi**2 * (alpha * (1 - min_fidelity) - math.exp(-wait_multiple)) / (4 * wait_multiple * rate_ratio * min_fidelity)
    n = max(1, int(np.cbrt(bound)))
    while n > 1 and not clears(n):
        n -= 1
    while clears(n + 1):
        n += 1
    return n


def coherent_state_overlap(n: int, mean_photons: float) -> float:
    """
    Probability of n photons in a coherent state, the success rate of
    preparing |n> by measurement-conditioned collapse.
    """
    if n < 0 or mean_photons < 0:
        raise ConfigError("n and mean_photons must be non-negative")
    return float(poisson.pmf(n, mean_photons))


class AlphaEstimate(BaseModel):
    alpha: float
    spread: float
    points: dict[int, float]


def alpha_from_record(record: StepRecord, n_target: int) -> float:
    if n_target < 1:
        raise ConfigError("alpha needs n_target >= 1")
    shortfall = 1.0 - record.populations[n_target]
    if shortfall <= 0:
        raise ConfigError(f"Fidelity is 1 at n_T = {n_target}, alpha is undefined")
    return record.populations[n_target - 1] / shortfall


def estimate_alpha(runs: dict[int, list[StepRecord]]) -> AlphaEstimate:
    """
    Mean of P(n_T - 1) / (1 - F) over the stationary states of noiseless runs,
    one run per target.
    """
    if len(runs) < MIN_ALPHA_TARGETS:
        raise ConfigError(f"alpha needs runs for at least {MIN_ALPHA_TARGETS} targets, got {len(runs)}")
    points = {n_target: alpha_from_record(stationary_record(records), n_target) for n_target, records in sorted(runs.items())}
    values = np.array(list(points.values()))
    estimate = AlphaEstimate(alpha=float(values.mean()), spread=float(values.std()), points=points)
    logger.info(f"alpha = {estimate.alpha:.3f} +/- {estimate.spread:.3f} from targets {sorted(points)}")
    return estimate
