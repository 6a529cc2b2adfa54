import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delayres.dde import DelayDynamics, InitialCondition, integrate, trajectory_segment_norm
from delayres.errors import ConfigurationError, ContractError, DomainError
from delayres.separation import (AveragedSeparation, FourierExpansion, TrigPolynomial,
                                 averaged_separation, band_separation_objective, delta_k,
                                 fourier_coeffs, input_distance, pairwise_separation,
                                 random_input_pairs, random_trig_polynomial,
                                 separation_lower_bound, transient_constant)
from delayres.spectral import spectral_abscissa

from conftest import A1_C1, A1_C2

C1 = (-1.0, [(A1_C1, 1.0)])
C2 = (-0.5, [(A1_C2, 1.0)])


def cos_mode(t1):
    return lambda t: np.cos(2 * np.pi * np.asarray(t) / t1)


# Fourier coefficients

def test_constant_signal():
    ex = fourier_coeffs(lambda t: np.full_like(t, 2.5), 7.0, 5)
    assert ex[0] == pytest.approx(2.5)
    assert np.all(np.abs(np.delete(ex.alpha, 5)) < 1e-12)


def test_cosine_mode():
    ex = fourier_coeffs(cos_mode(20.0), 20.0, 6)
    assert abs(ex[1] - 0.5) < 1e-10 and abs(ex[-1] - 0.5) < 1e-10
    others = [k for k in ex.ks if abs(k) != 1]
    assert max(abs(ex[k]) for k in others) < 1e-12
    assert ex.symmetry_error() < 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), kmax=st.integers(0, 10), t1=st.floats(1.0, 100.0))
def test_round_trip(seed, kmax, t1):
    w = random_trig_polynomial(np.random.default_rng(seed), t1, kmax)
    ex = fourier_coeffs(w, t1, kmax)
    assert np.max(np.abs(ex.alpha - w.alpha)) < 1e-10
    assert ex.symmetry_error() < 1e-10
    assert float(ex.power.sum()) <= ex.mean_power + 1e-10


def test_aliasing_guard():
    with pytest.raises(ConfigurationError):
        fourier_coeffs(np.sin, 1.0, 10, n_quad=39)
    with pytest.raises(ContractError):
        fourier_coeffs(np.sin, 1.0, -1)


def test_default_truncation():
    assert fourier_coeffs(np.sin, 3.0).kmax == 64


def test_trig_polynomial_norm():
    w = random_trig_polynomial(np.random.default_rng(0), 10.0, 4, norm=2.0)
    t = np.linspace(0, 10, 20001)
    assert math.sqrt(np.trapezoid(w(t) ** 2, t)) == pytest.approx(2.0, rel=1e-6)
    assert isinstance(w(0.5), float)


# Delta_k

def test_delta_examples():
    assert delta_k(*C1, 20.0, 0) == pytest.approx((-1 + A1_C1) ** 2)
    assert delta_k(*C1, 20.0, 0) == pytest.approx(0.034464, abs=1e-6)
    assert delta_k(*C1, 20.0, 1) == pytest.approx(0.370991, abs=1e-5)
    assert delta_k(*C2, 20.0, 1) == pytest.approx(0.205746, abs=1e-5)
    ratio = delta_k(*C1, 20.0, 1) / delta_k(*C2, 20.0, 1)
    assert ratio == pytest.approx(1.80, abs=0.01)


@settings(max_examples=100, deadline=None)
@given(a0=st.floats(-5, 5), a=st.lists(st.floats(-3, 3), min_size=0, max_size=3),
       t1=st.floats(0.5, 100), k=st.integers(-30, 30))
def test_delta_identity(a0, a, t1, k):
    delayed = [(aj, 0.5 * (j + 1)) for j, aj in enumerate(a)]
    w = 2 * np.pi * k / t1
    direct = abs(1j * w - a0 - sum(aj * np.exp(-1j * w * tau) for aj, tau in delayed)) ** 2
    value = delta_k(a0, delayed, t1, k)
    assert value == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_delta_grows_with_frequency():
    ks = np.arange(0, 200)
    d = delta_k(*C1, 20.0, ks)
    assert d[-1] > 100 * d[1]
    assert d[-1] >= (2 * np.pi * 199 / 20 - 1 - A1_C1) ** 2


def test_delta_requires_positive_window():
    with pytest.raises(ContractError):
        delta_k(*C1, 0.0, 1)


# lower bound

def test_bound_zero_coefficients():
    ex = FourierExpansion(20.0, np.zeros(5, dtype=complex), 0.0)
    rep = separation_lower_bound(ex, C1, 0.0, 20.0, -0.1, 0.05)
    assert rep.bound_value == 0.0


def test_bound_single_mode():
    ex = FourierExpansion(20.0, np.array([0.5, 0, 0.5], dtype=complex))
    rep = separation_lower_bound(ex, C1, 0.0, 20.0, -0.1, 0.05, M1=0.0)
    assert rep.bound_value == pytest.approx(20 * 2 * 0.25 / 0.370991, rel=1e-5)
    assert rep.bound_value == pytest.approx(26.95, abs=0.01)
    assert set(rep.delta_k) == {-1, 0, 1}


def test_bound_with_transient_margin_below_brute_force(config1):
    t1, t0 = 20.0, 10.0
    s0 = spectral_abscissa(config1).s0
    phi = InitialCondition(1.0)
    M1 = transient_constant(config1, phi, s0, 0.05, 100.0, 0.01)
    w = cos_mode(t1)
    z = integrate(config1, phi, w, t1, 0.01)
    brute = trajectory_segment_norm(z, t0, t1) ** 2
    rep = separation_lower_bound(fourier_coeffs(w, t1, 4), C1, t0, t1, s0, 0.05, M1)
    assert rep.transient_margin > 0
    assert rep.bound_value <= brute


def test_bound_preconditions():
    ex = FourierExpansion(20.0, np.array([0.5, 0, 0.5], dtype=complex))
    with pytest.raises(DomainError):
        separation_lower_bound(ex, (0.5, []), 0.0, 20.0, 0.5, 0.1)
    with pytest.raises(ContractError):
        separation_lower_bound(ex, C1, 0.0, 20.0, -0.1, 0.2)
    with pytest.raises(ContractError):
        separation_lower_bound(ex, C1, 20.0, 10.0, -0.1, 0.05)


def test_truncation_estimate_reported():
    square = lambda t: np.sign(np.sin(2 * np.pi * np.asarray(t) / 20.0))
    ex = fourier_coeffs(square, 20.0, 8, n_quad=4096)
    rep = separation_lower_bound(ex, C1, 0.0, 20.0, -0.1, 0.05)
    assert 0 < rep.truncation_estimate < 0.1 * rep.steady_energy / 20


def test_band_objective():
    inside, outside = band_separation_objective(C1, 20.0, 10, 10)
    assert outside == 0.0
    assert band_separation_objective(C1, 20.0, 3, 10, weights=0.0) == (0.0, 0.0)
    in1, _ = band_separation_objective(C1, 20.0, 10, 10)
    in2, _ = band_separation_objective(C2, 20.0, 10, 10)
    assert in2 / in1 == pytest.approx(1.8, abs=0.05)
    with pytest.raises(ContractError):
        band_separation_objective(C1, 20.0, 11, 10)


# empirical separation

def test_pairwise_equal_inputs(config1):
    assert pairwise_separation(config1, InitialCondition(1.0), np.sin, np.sin, 1.0, 5.0, 0.01) == 0.0


def test_pairwise_superposition(config1):
    u = lambda t: np.sin(0.7 * t)
    sep = pairwise_separation(config1, None, u, None, 2.0, 10.0, 0.01)
    direct = trajectory_segment_norm(integrate(config1, None, u, 10.0, 0.01), 2.0, 10.0)
    assert sep == pytest.approx(direct, rel=1e-12)


def test_pairwise_steady_state_mode(config1):
    t1 = 20.0
    w = cos_mode(t1)
    long = integrate(config1, None, w, 400.0, 0.01)
    energy = trajectory_segment_norm(long, 200.0, 400.0) ** 2
    assert energy / 200.0 == pytest.approx(2 * 0.25 / 0.370991, rel=0.02)


def test_pairwise_rejects_noise():
    noisy = DelayDynamics.scalar(-1.0, A1_C1, 1.0, noise_std=1e-3)
    with pytest.raises(ContractError):
        pairwise_separation(noisy, None, 1.0, 0.0, 0.0, 1.0, 0.01)


def test_averaged_single_pair(config1):
    u, v = np.sin, np.cos
    d = input_distance(u, v, 5.0, 0.01)
    avg = averaged_separation(config1, [InitialCondition(0.0)], [(u, v)], d, 1e-9, 1.0, 5.0, 0.01)
    assert float(avg) == pytest.approx(pairwise_separation(config1, InitialCondition(0.0), u, v, 1.0, 5.0, 0.01))


def test_averaged_identical_inputs(config1):
    avg = averaged_separation(config1, [InitialCondition(1.0)], [(np.sin, np.sin)] * 2, 0.0, 0.1,
                              1.0, 5.0, 0.01)
    assert avg.value == 0.0 and avg.n_pairs == 2


def test_averaged_is_mean(config1):
    pairs = random_input_pairs(np.random.default_rng(3), 3, 5.0, 3, d=1.0)
    F = [InitialCondition(0.0)]
    seps = [pairwise_separation(config1, F[0], u, v, 1.0, 5.0, 0.01) for u, v in pairs]
    avg = averaged_separation(config1, F, pairs, 1.0, 1e-3, 1.0, 5.0, 0.01)
    assert avg.value == pytest.approx(sum(seps) / 3)


def test_averaged_rejects_offenders(config1):
    pairs = random_input_pairs(np.random.default_rng(4), 2, 5.0, 2, d=1.0)
    pairs.append((np.sin, np.cos))
    with pytest.warns(UserWarning, match="outside"):
        avg = averaged_separation(config1, [InitialCondition(0.0)], pairs, 1.0, 1e-3, 1.0, 5.0, 0.01)
    assert avg.n_pairs == 2 and avg.rejected[0][0] == 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(DomainError):
            averaged_separation(config1, [InitialCondition(0.0)], [(np.sin, np.cos)], 100.0, 1e-3,
                                1.0, 5.0, 0.01)


def test_random_pairs_hit_distance():
    for u, v in random_input_pairs(np.random.default_rng(5), 4, 8.0, 5, d=0.7):
        assert input_distance(u, v, 8.0, 1e-3) == pytest.approx(0.7, rel=1e-6)


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 10_000), period=st.sampled_from([10.0, 25.0, 50.0]),
       cycles=st.integers(1, 2))
def test_bound_validity_whole_periods(seed, period, cycles):
    rng = np.random.default_rng(seed)
    dyn = DelayDynamics.scalar(-1.0, A1_C1, 1.0)
    deg = int(rng.integers(1, 11))
    w = random_trig_polynomial(rng, period, deg)
    t0 = math.ceil(50.0 / period) * period
    t1 = t0 + cycles * period
    energy = trajectory_segment_norm(integrate(dyn, None, w, t1, 0.05), t0, t1) ** 2
    m = round(t1 / period)
    ex = fourier_coeffs(w, t1, deg * m, n_quad=max(256, 8 * deg * m))
    bound = separation_lower_bound(ex, dyn, t0, t1, -0.1, 0.05).bound_value
    assert energy >= 0.95 * bound
