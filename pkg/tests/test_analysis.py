import math

import pytest

from fockwalk.core.analysis import (
    alpha_from_record,
    analytic_fidelity,
    balance_residual,
    coherent_state_overlap,
    estimate_alpha,
    max_target_for_fidelity,
    residual_ground_population,
    solve_balance_fidelity,
    trap_transfer_probability,
)
from fockwalk.core.entities import BudgetParams, ConfigError, NotStationaryError, StepRecord


def plateau(n_target, fidelity, below, steps=25):
    populations = [0.0] * (n_target + 1)
    populations[n_target] = fidelity
    populations[n_target - 1] = below
    populations[0] += 1.0 - fidelity - below
    return [
        StepRecord(step=s, fidelity=fidelity, populations=populations, coin_excited=0.0, leak=0.0, truncation_leak=0.0)
        for s in range(steps)
    ]


def test_lossless_limit():
    b = BudgetParams(n_target=6, rate_ratio=0.0)
    assert analytic_fidelity(b) == pytest.approx(1 - 2 * math.exp(-5))
    assert analytic_fidelity(BudgetParams(n_target=6, alpha=math.exp(-5))) == pytest.approx(0.0, abs=1e-15)


def test_operating_point():
    assert analytic_fidelity(BudgetParams(n_target=6)) == pytest.approx(0.978, abs=1e-3)


def test_degenerate_budget():
    with pytest.raises(ConfigError):
        analytic_fidelity(BudgetParams(n_target=3, alpha=0.0, rate_ratio=0.0))
    with pytest.raises(ConfigError):
        solve_balance_fidelity(BudgetParams(n_target=3, alpha=0.0, rate_ratio=0.0))
    with pytest.raises(ValueError):
        BudgetParams(n_target=0)


def test_fidelity_falls_with_target_and_rises_with_alpha():
    curve = [analytic_fidelity(BudgetParams(n_target=n)) for n in range(1, 41)]
    assert all(a > b for a, b in zip(curve, curve[1:]))
    by_alpha = [analytic_fidelity(BudgetParams(n_target=6, alpha=a)) for a in (0.2, 0.4, 0.6, 0.8, 1.0)]
    assert all(a < b for a, b in zip(by_alpha, by_alpha[1:]))


def test_small_loss_approaches_lossless_value():
    lossless = (0.5 - math.exp(-5)) / 0.5
    gaps = [abs(analytic_fidelity(BudgetParams(n_target=6, rate_ratio=r)) - lossless) for r in (1e-4, 1e-6, 1e-9)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-5


def test_exact_balance_solution():
    for n_target in (1, 2, 6, 14):
        b = BudgetParams(n_target=n_target)
        assert abs(balance_residual(solve_balance_fidelity(b), b)) <= 1e-12


def test_transfer_probability():
    assert trap_transfer_probability(1) == pytest.approx(math.sin(math.pi / math.sqrt(2)) ** 2)
    assert trap_transfer_probability(0) == 0.0
    assert residual_ground_population(5.0) == pytest.approx(math.exp(-5))


def test_max_target_for_fidelity():
    n = max_target_for_fidelity(0.95)
    assert analytic_fidelity(BudgetParams(n_target=n)) >= 0.95
    assert analytic_fidelity(BudgetParams(n_target=n + 1)) < 0.95
    assert max_target_for_fidelity(0.95, rate_ratio=0.0) is None
    assert max_target_for_fidelity(0.999) == 0


def test_coherent_state_baseline():
    assert coherent_state_overlap(3, 3.0) == pytest.approx(0.224, abs=1e-3)
    assert coherent_state_overlap(0, 1.0) == pytest.approx(math.exp(-1))


def test_estimate_alpha_on_constructed_plateaus():
    runs = {n: plateau(n, fidelity=0.9, below=0.05) for n in (2, 4, 6)}
    estimate = estimate_alpha(runs)
    assert estimate.alpha == pytest.approx(0.5)
    assert estimate.spread == pytest.approx(0.0, abs=1e-12)
    assert set(estimate.points) == {2, 4, 6}


def test_estimate_alpha_guards():
    with pytest.raises(ConfigError):
        estimate_alpha({2: plateau(2, 0.9, 0.05), 4: plateau(4, 0.9, 0.05)})
    with pytest.raises(ConfigError):
        alpha_from_record(plateau(3, 1.0, 0.0)[0], 3)
    flat_zero = [r.copy(update={"fidelity": 0.0}) for r in plateau(2, 0.9, 0.05)]
    with pytest.raises(NotStationaryError):
        estimate_alpha({2: flat_zero, 4: plateau(4, 0.9, 0.05), 6: plateau(6, 0.9, 0.05)})
