import math

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import THETAS, coin_states
from decoherent_walk.coin import (
    ChannelModel,
    CoinState,
    dephasing_channel,
    equivalent_parameters,
    make_channel,
    measurement_channel,
    weak_measurement_channel,
)
from decoherent_walk.density import (
    LatticeDensityMatrix,
    decoherent_step,
    evolve_density,
    initial_density,
    moments,
    position_marginal,
)
from decoherent_walk.errors import OracleLimitError
from decoherent_walk.stats import PositionDistribution, classical_binomial
from decoherent_walk.walk import evolve_unitary


def test_initial_density():
    rho = initial_density(CoinState.right())
    m = rho.matrix
    assert m.shape == (2, 2) and m[0, 0] == 1 and np.count_nonzero(m) == 1
    rho = initial_density(CoinState(0.6, 0.8j))
    assert rho.trace == pytest.approx(1.0)
    assert rho.purity() == pytest.approx(1.0, abs=1e-14)


def test_identity_channel_step_is_pure_step():
    coin = CoinState(0.6, 0.8j)
    rho = evolve_density(coin, measurement_channel(0.0), 1)
    psi = evolve_unitary(coin, 1).amplitudes.reshape(-1)
    np.testing.assert_allclose(rho.matrix, np.outer(psi, psi.conj()), atol=1e-15)


def test_full_measurement_kills_coin_coherence_before_flip():
    rho0 = initial_density(CoinState(0.6, 0.8j))
    ch = measurement_channel(1.0)
    after = decoherent_step(rho0, ch)
    # equivalent to starting from the coin-diagonal mixture
    mixed = LatticeDensityMatrix(0, np.diag([0.36, 0.64]).astype(complex).reshape(1, 2, 1, 2))
    np.testing.assert_allclose(after.entries, decoherent_step(mixed, measurement_channel(0.0)).entries, atol=1e-15)


def test_dephasing_first_step_from_r():
    d = position_marginal(evolve_density(CoinState.right(), dephasing_channel(math.pi / 8), 1))
    assert d.as_dict() == pytest.approx({-1: 0.5, 0: 0.0, 1: 0.5}, abs=1e-15)


def test_small_t_marginals():
    d = position_marginal(evolve_density(CoinState.right(), measurement_channel(1.0), 2))
    np.testing.assert_allclose(d.probabilities, [0.25, 0, 0.5, 0, 0.25], atol=1e-15)
    d = position_marginal(evolve_density(CoinState.right(), measurement_channel(0.0), 3))
    np.testing.assert_allclose(d.probabilities, [1 / 8, 0, 1 / 8, 0, 5 / 8, 0, 1 / 8], atol=1e-15)
    assert moments(d, 1) == pytest.approx(0.5, abs=1e-14)
    assert evolve_density(CoinState.right(), dephasing_channel(0.2), 0).t == 0


def test_moments_of_simple_distributions():
    assert moments(PositionDistribution(0, [1.0]), 1) == 0.0
    assert moments(PositionDistribution(0, [1.0]), 2) == 0.0
    d = PositionDistribution(-2, [0.25, 0, 0.5, 0, 0.25])
    assert (moments(d, 1), moments(d, 2)) == (0.0, 2.0)


@given(coin_states())
@settings(max_examples=10)
def test_state_invariants(coin):
    rho = evolve_density(coin, dephasing_channel(0.3), 12)
    assert rho.trace == pytest.approx(1.0, abs=1e-10)
    assert rho.hermiticity_error() <= 1e-10
    assert rho.min_eigenvalue() >= -1e-8
    d = position_marginal(rho)
    assert d.total == pytest.approx(1.0, abs=1e-10)
    assert d.probabilities.min() >= -1e-12


def test_identity_channel_matches_pure_evolution():
    coin = CoinState(0.6, 0.8j)
    rho = evolve_density(coin, measurement_channel(0.0), 40)
    psi = evolve_unitary(coin, 40).amplitudes.reshape(-1)
    assert np.abs(rho.matrix - np.outer(psi, psi.conj())).max() <= 1e-10


@pytest.mark.parametrize("t", [1, 5, 17, 60])
def test_full_decoherence_is_binomial(t):
    for coin in (CoinState.right(), CoinState(0.6, 0.8j)):
        d = position_marginal(evolve_density(coin, measurement_channel(1.0), t))
        np.testing.assert_allclose(d.probabilities, classical_binomial(t).probabilities, atol=1e-10)


@pytest.mark.parametrize("theta", THETAS)
def test_three_models_give_identical_marginals(theta):
    s = equivalent_parameters(theta, ChannelModel.DEPHASING)
    coin = CoinState(0.6, 0.8j)
    ref = position_marginal(evolve_density(coin, measurement_channel(s.p), 20)).probabilities
    for model in (ChannelModel.DEPHASING, ChannelModel.WEAK_MEASUREMENT):
        got = position_marginal(evolve_density(coin, make_channel(model, s.value(model)), 20)).probabilities
        np.testing.assert_allclose(got, ref, atol=1e-10)


def test_second_moment_ignores_initial_coin():
    rng = np.random.default_rng(8)
    ch = weak_measurement_channel(0.9)
    vals = [position_marginal(evolve_density(CoinState.random(rng), ch, 15)).moment(2) for _ in range(8)]
    assert max(vals) - min(vals) <= 1e-8


def test_oracle_limit():
    with pytest.raises(OracleLimitError, match="--oracle-limit 11"):
        evolve_density(CoinState.right(), dephasing_channel(0.1), 11, oracle_limit=10)


def test_unitary_marginal_peaks_near_t_over_sqrt2():
    t = 200
    d = position_marginal(evolve_density(CoinState(1 / math.sqrt(2), 1j / math.sqrt(2)), measurement_channel(0.0), t))
    x, p = d.positions, d.probabilities
    left, right = x[np.argmax(np.where(x < 0, p, 0))], x[np.argmax(np.where(x > 0, p, 0))]
    assert right == pytest.approx(t / math.sqrt(2), rel=0.05)
    assert left == pytest.approx(-t / math.sqrt(2), rel=0.05)
    # oscillatory: many sign changes in the discrete slope over the central region
    central = p[(np.abs(x) < t / 2) & ((x + t) % 2 == 0)]
    assert np.count_nonzero(np.diff(np.sign(np.diff(central)))) > 10
