import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fockwalk.core.entities import ConfigError, JCParams, TruncationFault, WalkVariant
from fockwalk.core.jc_walk import (
    CoinChannel,
    apply_channel,
    check_truncation,
    coin_damping,
    coin_flip,
    coin_hadamard,
    emit_probability,
    eta_from_duration,
    excited_product,
    jc_unitary,
    jc_unitary_for_angle,
    reduced_walk_discrepancy,
    reduced_walker_map,
    run_walk,
    trapping_time,
    walk_step,
)
from fockwalk.core.lindblad import system_hamiltonian
from fockwalk.core.quantum import (
    EXCITED,
    GROUND,
    SIGMA_X,
    SystemSpace,
    coin_excited_population,
    expm,
    fock_populations,
    random_density_matrix,
    trace_out_coin,
)

TRAP_16 = JCParams(g=1.0, tau=trapping_time(1.0, 16))


@given(st.floats(min_value=0.0, max_value=1.0))
def test_kraus_completeness(eta):
    assert coin_damping(eta).completeness_error() <= 1e-12


def test_channel_output_matrix():
    rng = np.random.default_rng(3)
    for _ in range(100):
        alpha, beta = rng.normal(size=2) + 1j * rng.normal(size=2)
        norm = math.sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
        alpha, beta = alpha / norm, beta / norm
        rho = np.outer([alpha, beta], np.conj([alpha, beta]))
        eta = rng.uniform()
        expected = np.array(
            [
                [eta * abs(alpha) ** 2, math.sqrt(eta) * alpha * np.conj(beta)],
                [math.sqrt(eta) * beta * np.conj(alpha), abs(beta) ** 2 + (1 - eta) * abs(alpha) ** 2],
            ]
        )
        assert_allclose(CoinChannel(eta=eta).apply(rho), expected, atol=1e-12)


def test_channel_rejects_eta_outside_unit_interval():
    with pytest.raises(ValueError):
        CoinChannel(eta=1.5)


def test_eta_from_duration():
    assert eta_from_duration(0.0, 2.0) == 1.0
    assert eta_from_duration(2.0, 2.0) == pytest.approx(math.exp(-1))
    with pytest.raises(ConfigError):
        eta_from_duration(1.0, 0.0)


def test_coin_operations():
    assert_allclose(coin_flip(), -1j * SIGMA_X, atol=1e-15)
    h = coin_hadamard()
    assert_allclose(h @ h, np.eye(2), atol=1e-15)


def test_jc_unitary_is_unitary_and_matches_hamiltonian():
    space = SystemSpace(n_max=8)
    h = system_hamiltonian(space, g=1.3)
    for tau in (0.1, 0.77, 2.5):
        u = jc_unitary(JCParams(g=1.3, tau=tau), space)
        assert_allclose(u.conj().T @ u, np.eye(space.dim), atol=1e-12)
        assert_allclose(u, expm(-1j * tau * h), atol=1e-10)


def test_jc_unitary_leaves_ground_vacuum_alone():
    space = SystemSpace(n_max=4)
    u = jc_unitary_for_angle(0.9, space)
    vacuum = space.ket(GROUND, 0)
    assert_allclose(u @ vacuum, vacuum)


def test_emission_vanishes_at_trapping():
    assert emit_probability(TRAP_16, 16) < 1e-28
    assert emit_probability(TRAP_16, 15) > 0.0


def test_trapping_time_guards():
    assert trapping_time(2.0, 3, k=2) == pytest.approx(math.pi / 2.0)
    with pytest.raises(ConfigError):
        trapping_time(0.0, 3)
    with pytest.raises(ConfigError):
        trapping_time(1.0, 3, k=0)


def test_hadamard_step_from_vacuum():
    space = SystemSpace(n_max=10)
    params = JCParams(g=1.0, tau=0.4)
    rho = walk_step(space.basis_state(EXCITED, 0), WalkVariant.unitary_hadamard(), params)
    populations = fock_populations(rho)
    assert populations[2:].sum() < 1e-15
    assert populations[0] == pytest.approx(math.cos(0.4) ** 2)
    assert populations[1] == pytest.approx(math.sin(0.4) ** 2)


def test_damped_walk_accumulates_at_target():
    space = SystemSpace(n_max=26)
    # the slowest rung, 15 -> 16, only succeeds with probability ~0.009 per step
    distributions = run_walk(WalkVariant.damped(0.0), TRAP_16, 1000, space.basis_state(EXCITED, 0))
    assert len(distributions) == 1001
    assert max(d[17:].sum() for d in distributions) <= 1e-12
    assert distributions[-1][16] > 0.99


def test_flip_walk_does_not_settle_at_target():
    space = SystemSpace(n_max=26)
    vacuum = space.basis_state(EXCITED, 0)
    flip = run_walk(WalkVariant.unitary_flip(), TRAP_16, 1000, vacuum)
    damped = run_walk(WalkVariant.damped(0.0), TRAP_16, 1000, vacuum)
    flip_tail = np.var([d[16] for d in flip[-20:]])
    damped_tail = np.var([d[16] for d in damped[-20:]])
    assert flip_tail > damped_tail


@pytest.mark.parametrize("variant", [WalkVariant.unitary_hadamard(), WalkVariant.unitary_flip()])
def test_unitary_walks_respect_the_ceiling(variant):
    space = SystemSpace(n_max=26)
    distributions = run_walk(variant, TRAP_16, 200, space.basis_state(EXCITED, 0))
    for d in distributions:
        assert d.sum() == pytest.approx(1.0, abs=1e-12)
        assert d[17:].sum() <= 1e-12


def test_run_walk_zero_steps_and_guards():
    space = SystemSpace(n_max=6)
    distributions = run_walk(WalkVariant.damped(), TRAP_16, 0, space.basis_state(EXCITED, 0))
    assert len(distributions) == 1
    assert distributions[0][0] == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        run_walk(WalkVariant.damped(), TRAP_16, -1, space.basis_state(EXCITED, 0))


def test_untrapped_walk_hits_truncation():
    space = SystemSpace(n_max=5)
    params = JCParams(g=1.0, tau=math.pi / 2)
    with pytest.raises(TruncationFault) as fault:
        run_walk(WalkVariant.damped(), params, 50, space.basis_state(EXCITED, 0))
    assert fault.value.step is not None


def test_check_truncation():
    populations = np.zeros(10)
    populations[0] = 1.0
    assert check_truncation(populations) == 0.0
    populations[0], populations[8] = 0.9, 0.1
    with pytest.raises(TruncationFault):
        check_truncation(populations, step=4)


def test_reduced_walker_map_preserves_trace():
    rng = np.random.default_rng(11)
    params = JCParams(g=1.0, tau=trapping_time(1.0, 6))
    for _ in range(100):
        rho_w = reduced_walker_map(random_density_matrix(12, rng), params)
        assert abs(np.trace(rho_w.mat).real - 1.0) <= 1e-12


def test_reduced_walk_matches_full_walk_without_memory():
    rng = np.random.default_rng(5)
    params = JCParams(g=1.0, tau=trapping_time(1.0, 6))
    gaps = reduced_walk_discrepancy(random_density_matrix(12, rng), params, eta=0.0, steps=20)
    assert max(gaps) <= 1e-12


def test_reduced_walk_discrepancy_is_reported_for_memory():
    rng = np.random.default_rng(5)
    params = JCParams(g=1.0, tau=trapping_time(1.0, 6))
    gaps = reduced_walk_discrepancy(random_density_matrix(12, rng), params, eta=0.2, steps=5)
    assert len(gaps) == 5
    assert all(np.isfinite(gaps))


def test_apply_channel_resets_coin():
    rng = np.random.default_rng(2)
    walker = random_density_matrix(6, rng)
    rho = apply_channel(coin_damping(0.0), excited_product(walker))
    assert coin_excited_population(rho) == pytest.approx(0.0, abs=1e-15)
    assert_allclose(trace_out_coin(rho.mat), walker.mat, atol=1e-12)
