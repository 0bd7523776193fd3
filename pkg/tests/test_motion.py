import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionbv.device import default_device
from ionbv.gates import MsGateSpec
from ionbv.motion import (TruncationError, evolve_ms_motional, heating_account, rabi_factor,
                          thermal_carrier_infidelity, thermal_distribution, threshold_nbar)


@pytest.mark.parametrize("nbar", [0.05, 0.6, 5.0])
def test_thermal_distribution(nbar):
    p = thermal_distribution(nbar)
    assert p.sum() == pytest.approx(1, abs=1e-7)
    assert np.dot(np.arange(len(p)), p) == pytest.approx(nbar, rel=1e-5)
    with pytest.raises(ValueError):
        thermal_distribution(-1)


def test_rabi_factor_closed_forms():
    eta = 0.1
    # n = 0 keeps the Debye-Waller reduction even for a cold mode
    assert rabi_factor(0, eta) == pytest.approx(np.exp(-eta ** 2 / 2))
    assert rabi_factor(0, eta) < 1
    assert rabi_factor(1, eta) == pytest.approx(np.exp(-eta ** 2 / 2) * (1 - eta ** 2))
    assert rabi_factor(2, eta) == pytest.approx(
        np.exp(-eta ** 2 / 2) * (1 - 2 * eta ** 2 + eta ** 4 / 2))
    assert rabi_factor(0, eta, reference="ground") == pytest.approx(1.0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 8.0), st.floats(0.1, 2.0))
def test_thermal_infidelity_monotone(nbar, step):
    modes = default_device(2).modes
    a = thermal_carrier_infidelity(modes, nbar)
    b = thermal_carrier_infidelity(modes, nbar + step)
    assert b >= a - 1e-15


def test_thresholds_order():
    t2 = threshold_nbar(default_device(2).modes)
    t3 = threshold_nbar(default_device(3).modes)
    assert 0 < t2 < t3 < 40


def test_heating_account():
    modes = default_device(2).modes
    acc = heating_account(1e-3, modes)
    assert acc[("radial", "COM")] == pytest.approx(0.6 + 0.05)


def test_ms_first_order_ideal():
    dev = default_device(2)
    res = evolve_ms_motional(MsGateSpec((0, 1)), dev.mode("rocking"), lamb_dicke_order=1)
    assert res.bell_fidelity > 0.9999
    assert res.top_population < 1e-8


def test_ms_echo_ideal():
    dev = default_device(2)
    res = evolve_ms_motional(MsGateSpec((0, 1), echo=True), dev.mode("rocking"))
    assert res.bell_fidelity > 0.9999


def test_ms_truncation_guard():
    dev = default_device(2)
    with pytest.raises(TruncationError):
        evolve_ms_motional(MsGateSpec((0, 1)), dev.mode("rocking"), fock_dim=4, nbar=3.0,
                           steps_per_loop=100)


def test_ms_thermal_state_insensitive_to_first_order():
    # closed loops leave the spin disentangled from motion at any temperature
    dev = default_device(2)
    res = evolve_ms_motional(MsGateSpec((0, 1)), dev.mode("rocking"), nbar=0.5, fock_dim=24,
                             steps_per_loop=300)
    assert res.bell_fidelity > 0.999
