import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optomech_link.gaussian import (
    HBAR,
    K_B,
    GaussianChannel,
    GaussianState,
    ThermalEnvironment,
    apply_channel,
    coherent_fidelity,
    coherent_state,
    epr_variance,
    homodyne_feedforward,
    symplectic_form,
    thermal_occupation,
    thermal_state,
    vacuum_state,
)

# n_T at 1 GHz and 2 K, evaluated with mpmath at 40 digits
N_T_2K_1GHZ = 41.17523793761116


@pytest.mark.parametrize("n", [1, 2, 3])
def test_vacuum_state(n):
    s = vacuum_state(n)
    assert np.array_equal(s.means, np.zeros(2 * n))
    assert np.array_equal(s.cov, 0.5 * np.eye(2 * n))


def test_vacuum_state_rejects_zero_modes():
    with pytest.raises(ValueError):
        vacuum_state(0)


@pytest.mark.parametrize("n_T, var", [(0.0, 0.5), (41.2, 41.7), (1.0, 1.5)])
def test_thermal_state(n_T, var):
    assert np.allclose(thermal_state(n_T).cov, var * np.eye(2), rtol=0, atol=1e-14)


def test_thermal_state_rejects_negative():
    with pytest.raises(ValueError):
        thermal_state(-0.1)


def test_state_validation():
    with pytest.raises(ValueError, match="symmetric"):
        GaussianState([0, 0], [[1, 0.2], [0.0, 1]])
    with pytest.raises(ValueError, match="positive semidefinite"):
        GaussianState([0, 0], [[1, 0], [0, -0.1]])
    with pytest.raises(ValueError):
        GaussianState([0, 0, 0], np.eye(3))
    s = vacuum_state(1)
    with pytest.raises(ValueError):
        s.means[0] = 1.0  # immutable


def test_thermal_occupation_reference_value():
    omega = 2 * np.pi * 1e9
    assert thermal_occupation(omega, 2.0) == pytest.approx(N_T_2K_1GHZ, rel=1e-12)
    # high-temperature expansion k_B T / (hbar omega) - 1/2, next term x/12 ~ 2e-3
    assert thermal_occupation(omega, 2.0) == pytest.approx(K_B * 2.0 / (HBAR * omega) - 0.5, abs=3e-3)


def test_thermal_occupation_limits():
    assert thermal_occupation(1e9, 0.0) == 0.0
    T = HBAR * 1e9 / (K_B * np.log(2.0))
    assert thermal_occupation(1e9, T) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        thermal_occupation(-1.0, 1.0)
    with pytest.raises(ValueError):
        thermal_occupation(1.0, -1.0)


@given(st.floats(1e6, 1e11), st.floats(1e-3, 1e2), st.floats(1.01, 3.0))
def test_thermal_occupation_monotone(omega, T, factor):
    n = thermal_occupation(omega, T)
    assert thermal_occupation(omega, T * factor) >= n
    assert thermal_occupation(omega * factor, T) <= n


def test_thermal_environment():
    env = ThermalEnvironment.from_temperature(2.0, 2 * np.pi * 1e9)
    assert env.mode == "temperature"
    assert env.n_T == pytest.approx(N_T_2K_1GHZ, rel=1e-12)
    assert ThermalEnvironment.from_occupation(3.0).n_T == 3.0
    with pytest.raises(ValueError):
        ThermalEnvironment(-1.0)


def test_apply_channel_examples():
    s = thermal_state(3.0).displaced([1.0, -2.0])
    same = apply_channel(s, GaussianChannel.identity(1))
    assert np.array_equal(same.cov, s.cov) and np.array_equal(same.means, s.means)

    replaced = apply_channel(s, GaussianChannel(np.zeros((2, 2)), 0.5 * np.eye(2)))
    assert np.allclose(replaced.cov, 0.5 * np.eye(2))

    h = 1 / np.sqrt(2)
    bs = np.kron(np.array([[h, h], [-h, h]]), np.eye(2))
    out = apply_channel(vacuum_state(2), GaussianChannel(bs, np.zeros((4, 4))))
    assert np.allclose(out.cov, 0.5 * np.eye(4), atol=1e-15)


def test_apply_channel_dimension_mismatch():
    with pytest.raises(ValueError):
        apply_channel(vacuum_state(1), GaussianChannel.identity(2))


def _random_channel(rng, n):
    K = rng.normal(size=(2 * n, 2 * n))
    A = rng.normal(size=(2 * n, 2 * n))
    return GaussianChannel(K, A @ A.T)


def _random_state(rng, n):
    A = rng.normal(size=(2 * n, 2 * n))
    return GaussianState(rng.normal(size=2 * n), A @ A.T + 0.5 * np.eye(2 * n))


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
@settings(max_examples=50)
def test_composition_associativity(seed, n):
    rng = np.random.default_rng(seed)
    s = _random_state(rng, n)
    c1, c2, c3 = (_random_channel(rng, n) for _ in range(3))
    stepwise = apply_channel(apply_channel(s, c1), c2)
    composed = apply_channel(s, c1.then(c2))
    scale = np.max(np.abs(stepwise.cov))
    assert np.max(np.abs(stepwise.cov - composed.cov)) <= 1e-12 * scale
    assert np.allclose(stepwise.means, composed.means, rtol=1e-12, atol=1e-12)

    left = c1.then(c2).then(c3)
    right = c1.then(c2.then(c3))
    assert np.max(np.abs(left.K - right.K)) <= 1e-12 * np.max(np.abs(left.K))
    assert np.max(np.abs(left.N - right.N)) <= 1e-12 * np.max(np.abs(left.N))


def test_embed_and_reduce():
    ch = GaussianChannel(-np.eye(2), np.zeros((2, 2))).embed(3, [1])
    s = coherent_state(1.0, 2.0).tensor(coherent_state(3.0, 4.0)).tensor(thermal_state(2.0))
    out = apply_channel(s, ch)
    assert np.allclose(out.reduced(1).means, [-3.0, -4.0])
    assert np.allclose(out.reduced([0, 2]).cov, np.diag([0.5, 0.5, 2.5, 2.5]))
    with pytest.raises(IndexError):
        s.reduced(3)


def test_symplectic_form_and_defect():
    om = symplectic_form(2)
    assert np.array_equal(om @ om, -np.eye(4))
    assert GaussianChannel.identity(2).symplectic_defect() == 0.0
    assert GaussianChannel(2 * np.eye(2), np.zeros((2, 2))).symplectic_defect() == pytest.approx(3.0)


def test_epr_variance_products():
    assert epr_variance(vacuum_state(2), 0, 1) == pytest.approx(2.0, abs=1e-15)
    s = thermal_state(3.0).tensor(thermal_state(3.0))
    assert epr_variance(s, 0, 1) == pytest.approx(4 * 3.0 + 2, abs=1e-12)
    with pytest.raises(IndexError):
        epr_variance(s, 0, 2)
    with pytest.raises(ValueError):
        epr_variance(s, 1, 1)
    with pytest.raises(ValueError):
        epr_variance(vacuum_state(1), 0, 1)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50)
def test_epr_variance_of_product_states_at_least_two(seed):
    rng = np.random.default_rng(seed)
    a, b = _random_state(rng, 1), _random_state(rng, 1)
    assert epr_variance(a.tensor(b), 0, 1) >= 2.0 - 1e-12


def test_coherent_fidelity_examples():
    alpha = complex(1.3, -0.4)
    target = coherent_state(np.sqrt(2) * alpha.real, np.sqrt(2) * alpha.imag)
    assert coherent_fidelity(target, alpha) == pytest.approx(1.0, abs=1e-15)
    assert coherent_fidelity(vacuum_state(1), 0) == pytest.approx(1.0, abs=1e-15)
    # |<0|alpha>|^2 = exp(-|alpha|^2) with |alpha|^2 = X^2 / 2 = 25
    far = coherent_fidelity(vacuum_state(1), np.sqrt(50) / np.sqrt(2))
    assert far == pytest.approx(np.exp(-25.0), rel=1e-8)
    with pytest.raises(ValueError):
        coherent_fidelity(vacuum_state(2), 0)


@given(
    st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 3)
)
def test_coherent_fidelity_displacement_invariance(x, p, dx, dp, n_T):
    state = thermal_state(n_T).displaced([x, p])
    alpha = complex(x + 0.3, p - 0.2) / np.sqrt(2)
    moved = state.displaced([dx, dp])
    alpha_moved = alpha + complex(dx, dp) / np.sqrt(2)
    assert coherent_fidelity(moved, alpha_moved) == pytest.approx(
        coherent_fidelity(state, alpha), rel=1e-9, abs=1e-300
    )


def test_homodyne_feedforward_perfect_correlation():
    # mode 0 copies mode 1's X exactly up to tiny noise; feed-forward cancels it
    eps = 1e-6
    cov = np.array(
        [
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 1.0 + eps, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    s = GaussianState([0.0, 0.0, 0.0, 0.0], cov)
    out = homodyne_feedforward(s, [(1, "x")], target=0, gain=[[-1.0], [0.0]])
    assert out.n_modes == 1
    assert out.cov[0, 0] == pytest.approx(eps, abs=1e-12)
    assert out.cov[1, 1] == pytest.approx(1.0)


def test_homodyne_feedforward_validation():
    s = vacuum_state(2)
    with pytest.raises(ValueError):
        homodyne_feedforward(s, [(0, "x")], target=0, gain=[[1.0], [0.0]])
    with pytest.raises(ValueError):
        homodyne_feedforward(s, [(0, "x")], target=1, gain=[[1.0, 0.0]])
