import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delayres.dde import DelayDynamics, Trajectory, integrate
from delayres.errors import ConfigurationError, ContractError
from delayres.signal import (ClockConfig, Mask, PiecewiseConstantSignal, apply_mask,
                             default_dt, generate_mask, sample_and_hold,
                             sample_virtual_nodes)


def test_clock_cycle():
    assert ClockConfig(0.2, 10).T == pytest.approx(2.0)
    assert ClockConfig(0.2, 10, 2.0).T == 2.0


def test_clock_cycle_mismatch_names_invariant():
    with pytest.raises(ConfigurationError, match="T = N\\*theta"):
        ClockConfig(0.2, 10, 3.0)


@pytest.mark.parametrize("theta, N", [(0.0, 10), (-1.0, 3), (0.2, 0), (0.2, 2.5)])
def test_clock_rejects_bad_values(theta, N):
    with pytest.raises(ConfigurationError):
        ClockConfig(theta, N)


def test_timescale_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert ClockConfig(0.2, 10).check_timescales(1.0)
    with pytest.warns(UserWarning, match="factor"):
        assert not ClockConfig(5.0, 10).check_timescales(1.0)


def test_default_dt_divides_everything():
    dt = default_dt(0.2, [1.0])
    assert dt == pytest.approx(0.01)
    for d in (0.2, 1.0):
        assert abs(round(d / dt) * dt - d) < 1e-12
    assert default_dt(0.3, [1.0]) <= 0.3 / 20


def test_sample_and_hold():
    assert sample_and_hold([1], 2)(0) == 1
    assert sample_and_hold([1], 2)(1.999) == 1
    I = sample_and_hold([1, -1], 1)
    assert I(0.5) == 1 and I(1.5) == -1
    assert sample_and_hold([0.3, 0.7, 0.1], 2)(4.0) == 0.1
    with pytest.raises(ContractError):
        sample_and_hold([], 1.0)


def test_signal_outside_support():
    with pytest.raises(ContractError):
        sample_and_hold([1.0], 1.0)(1.0)


def test_generate_mask_binary_reproducible():
    m1 = generate_mask(10, "binary", seed=5)
    m2 = generate_mask(10, "binary", seed=5)
    assert set(np.unique(m1.values)) <= {-1.0, 1.0}
    assert np.array_equal(m1.values, m2.values)
    assert generate_mask(1, "binary").N == 1


def test_generate_mask_uniform():
    m = generate_mask(10, "uniform", seed=3)
    assert m.N == 10
    assert np.all(np.abs(m.values) <= 1.0)
    assert np.array_equal(m.values, generate_mask(10, "uniform", seed=3).values)


def test_generate_mask_contract():
    with pytest.raises(ContractError):
        generate_mask(0)
    with pytest.raises(ContractError):
        generate_mask(3, "gaussian")
    with pytest.raises(ContractError):
        Mask([0.0, 0.0], 1.0)


def test_apply_mask_periodic():
    J = apply_mask(sample_and_hold(np.ones(3), 2.0), Mask([1.0, -1.0], 1.0))
    assert (J(0.5), J(1.5), J(2.5)) == (1.0, -1.0, 1.0)


def test_apply_mask_zero_input():
    J = apply_mask(sample_and_hold(np.zeros(4), 3.0), generate_mask(3, theta=1.0))
    assert not np.any(J.values)


def test_apply_mask_hand_product():
    J = apply_mask(sample_and_hold([2.0, 3.0], 2.0), Mask([0.5, -1.0], 1.0))
    assert list(J.values) == [1.0, -2.0, 1.5, -3.0]
    assert J.step == 1.0


def test_apply_mask_inconsistent_timescales():
    with pytest.raises(ConfigurationError):
        apply_mask(sample_and_hold([1.0], 2.0), Mask([1.0, 1.0, 1.0], 1.0))


def test_virtual_nodes_ramp():
    t = np.arange(0, 5.01, 0.5)
    traj = Trajectory(0.0, 0.5, t)
    X = sample_virtual_nodes(traj, ClockConfig(1.0, 2), 2)
    assert np.array_equal(X.data, [[1, 2, 1], [3, 4, 1]])


def test_virtual_nodes_constant_and_single_node():
    traj = Trajectory(0.0, 0.1, np.full(101, 4.0))
    X = sample_virtual_nodes(traj, ClockConfig(0.2, 5), 9)
    assert X.data.shape == (9, 6)
    assert np.all(X.data[:, :-1] == 4.0) and np.all(X.data[:, -1] == 1.0)
    ramp = Trajectory(0.0, 0.5, np.arange(21) * 0.5)
    Y = sample_virtual_nodes(ramp, ClockConfig(2.0, 1), 4)
    assert np.array_equal(Y.data[:, 0], [2, 4, 6, 8])


def test_virtual_nodes_too_short():
    traj = Trajectory(0.0, 0.1, np.zeros(20))
    with pytest.raises(ContractError):
        sample_virtual_nodes(traj, ClockConfig(0.2, 5), 2)


def test_virtual_nodes_theta_off_grid():
    traj = Trajectory(0.0, 0.3, np.zeros(100))
    with pytest.raises(ConfigurationError):
        sample_virtual_nodes(traj, ClockConfig(0.2, 5), 2)


def test_pipeline_bitwise_reproducible():
    dyn = DelayDynamics.scalar(-1.0, 0.8, 1.0, noise_std=1e-3)
    clock = ClockConfig(0.2, 10)
    u = np.random.default_rng(0).uniform(0, 0.5, 20)

    def run():
        J = apply_mask(sample_and_hold(u, clock.T), generate_mask(10, seed=4, theta=0.2))
        traj = integrate(dyn, None, J, 20 * clock.T, 0.01, rng_seed=9)
        return sample_virtual_nodes(traj, clock, 19).data

    assert run().tobytes() == run().tobytes()


@settings(max_examples=40, deadline=None)
@given(values=st.lists(st.floats(0.1, 5.0), min_size=2, max_size=6),
       mask=st.lists(st.floats(-1.0, 1.0).filter(lambda v: abs(v) > 1e-3), min_size=1, max_size=5),
       frac=st.floats(0.0, 0.999))
def test_mask_modulation_is_periodic(values, mask, frac):
    theta = 0.5
    T = theta * len(mask)
    I = sample_and_hold(values, T)
    J = apply_mask(I, Mask(mask, theta))
    t = frac * T
    for k in range(len(values) - 1):
        a, b = t + k * T, t + (k + 1) * T
        assert J(b) / I(b) == pytest.approx(J(a) / I(a))


@settings(max_examples=30, deadline=None)
@given(N=st.integers(1, 8), n_steps=st.integers(1, 6))
def test_state_matrix_shape(N, n_steps):
    clock = ClockConfig(0.5, N)
    traj = Trajectory(0.0, 0.25, np.zeros(int(2 * N * n_steps) + 3))
    assert sample_virtual_nodes(traj, clock, n_steps).data.shape == (n_steps, N + 1)
