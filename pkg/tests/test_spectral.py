import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import lambertw

from delayres.dde import DelayDynamics, InitialCondition, Trajectory, integrate
from delayres.errors import ContractError
from delayres.spectral import (ROOT_TOL, characteristic_residual, fit_exponential_envelope,
                               lambert_w, spectral_abscissa, spectral_abscissa_scalar)

from conftest import A1_C1, A1_C2


def test_lambert_examples():
    assert lambert_w(0) == 0
    assert lambert_w(math.e) == pytest.approx(1.0, abs=1e-14)
    assert lambert_w(0.9 * math.exp(0.9)) == pytest.approx(0.9, abs=1e-14)


def test_lambert_real_branches_are_real():
    assert lambert_w(-0.2).imag == 0.0
    w = lambert_w(-0.2, -1)
    assert w.imag == 0.0 and w.real < -1
    assert lambert_w(-1 / math.e) == pytest.approx(-1.0, abs=1e-7)


def test_lambert_zero_off_principal():
    with pytest.raises(ContractError):
        lambert_w(0, 2)


@settings(max_examples=200, deadline=None)
@given(re=st.floats(-50, 50), im=st.floats(-50, 50), k=st.integers(-8, 8))
def test_lambert_matches_reference(re, im, k):
    x = complex(re, im)
    if abs(x) < 1e-6:
        return
    w = lambert_w(x, k)
    assert abs(w * cmath.exp(w) - x) < 1e-12 * (1 + abs(x)) * max(1, abs(w))
    assert abs(w - complex(lambertw(x, k))) < 1e-9 * (1 + abs(w))


@pytest.mark.parametrize("a0, a1", [(-1.0, A1_C1), (-0.5, A1_C2)])
def test_reference_configs_share_abscissa(a0, a1):
    rep = spectral_abscissa_scalar(a0, a1, 1.0)
    assert abs(rep.s0 + 0.1) < 1e-9
    assert max(rep.residuals) < ROOT_TOL
    assert rep.s0 == max(z.real for z in rep.dominant_roots)
    assert not rep.complex_dominant


def test_delay_free():
    assert spectral_abscissa_scalar(-1.0, 0.0, 1.0).s0 == -1.0


def test_negative_feedback_flags_complex_pair():
    rep = spectral_abscissa_scalar(-0.5, -2.0, 1.0)
    assert rep.complex_dominant
    assert max(rep.residuals) < ROOT_TOL


def test_contract():
    with pytest.raises(ContractError):
        spectral_abscissa_scalar(-1, 1, 0.0)
    with pytest.raises(ContractError):
        spectral_abscissa_scalar(-1, 1, 1.0, branches=0)
    with pytest.raises(ContractError):
        spectral_abscissa(DelayDynamics.log_reservoir())


def test_characteristic_residual():
    assert characteristic_residual(-2.0, [], -2.0) == 0.0
    assert characteristic_residual(-1.0, [(A1_C1, 1.0)], -0.1) < 1e-12
    assert characteristic_residual(-1.0, [(0.5, 1.0)], 0.0) == pytest.approx(0.5)


def test_to_dict():
    d = spectral_abscissa_scalar(-1.0, A1_C1, 1.0).to_dict()
    assert d["a0"] == -1.0 and len(d["roots"]) == len(d["residuals"])


@settings(max_examples=40, deadline=None)
@given(a0=st.floats(-3, 1), a1=st.floats(0.01, 3), tau=st.floats(0.2, 3))
def test_branch_zero_dominates(a0, a1, tau):
    reports = [spectral_abscissa_scalar(a0, a1, tau, b) for b in range(1, 9)]
    principal = a0 + lambert_w(a1 * tau * math.exp(-a0 * tau)).real / tau
    for rep in reports:
        assert rep.s0 == pytest.approx(principal, abs=1e-9)
        assert max(rep.residuals) < ROOT_TOL
    assert all(b.s0 <= a.s0 + 1e-12 for a, b in zip(reports, reports[1:]))


def test_envelope_examples():
    t = np.linspace(0, 5, 501)
    traj = Trajectory(0.0, 0.01, np.exp(-t))
    assert fit_exponential_envelope(traj, -1.0, 1.0) == pytest.approx(1.0)
    assert fit_exponential_envelope(traj, -0.5, 1.0) == pytest.approx(1.0)
    with pytest.raises(ContractError):
        fit_exponential_envelope(traj, -1.0, 0.0)


def test_envelope_dominates_free_response(config1):
    traj = integrate(config1, InitialCondition(1.0), None, 60.0, 0.01)
    M = fit_exponential_envelope(traj, -0.09, 1.0)
    assert math.isfinite(M)
    assert np.all(np.abs(traj.x) <= M * np.exp(-0.09 * traj.times) + 1e-15)


@pytest.mark.parametrize("a0, a1", [(-1.0, A1_C1), (-0.5, A1_C2), (-1.0, -0.6)])
def test_stable_free_response_decays(a0, a1):
    s0 = spectral_abscissa_scalar(a0, a1, 1.0).s0
    assert s0 < 0
    traj = integrate(DelayDynamics.scalar(a0, a1, 1.0), InitialCondition(1.0), None,
                     100 / abs(s0), 0.05)
    assert abs(traj.x[-1]) < 1e-6


def test_unstable_free_response_grows():
    s0 = spectral_abscissa_scalar(-0.5, 1.0, 1.0).s0
    assert s0 > 0
    traj = integrate(DelayDynamics.scalar(-0.5, 1.0, 1.0), InitialCondition(1.0), None, 50, 0.05)
    assert abs(traj.x[-1]) > 1.0
