import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionbv.device import (ChainConfig, LightShiftEntry, LightShiftTable, TimingModel,
                          UnstableChainError, default_device, default_locations,
                          device_from_dict, equilibrium_positions, lamb_dicke,
                          light_shift_from_rabi, load_device, location_targets, normal_modes)
from ionbv.yamlio import ConfigError
from importlib import resources


def test_equilibrium_positions_closed_form():
    assert equilibrium_positions(2) == pytest.approx([-(0.5 ** (2 / 3)), 0.5 ** (2 / 3)])
    u = (5 / 4) ** (1 / 3)
    assert equilibrium_positions(3) == pytest.approx([-u, 0, u], abs=1e-9)


def test_axial_mode_frequencies_three_ions():
    wz = 1.0
    modes = normal_modes(3, wz, 5.0, "axial")
    assert [m.frequency for m in modes] == pytest.approx([1, np.sqrt(3), np.sqrt(29 / 5)], rel=1e-8)


def test_radial_mode_frequencies():
    wz, wr = 1.0, 4.0
    two = normal_modes(2, wz, wr, "radial")
    assert [m.frequency for m in two] == pytest.approx([wr, np.sqrt(wr ** 2 - wz ** 2)])
    three = normal_modes(3, wz, wr, "radial")
    assert [m.frequency for m in three] == pytest.approx(
        [wr, np.sqrt(wr ** 2 - wz ** 2), np.sqrt(wr ** 2 - 2.4 * wz ** 2)], rel=1e-8)
    assert [m.label for m in three] == ["COM", "rocking", "other"]


def test_unstable_radial_chain():
    with pytest.raises(UnstableChainError):
        normal_modes(3, 1.0, 1.2, "radial")


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 3), st.floats(0.5, 3.0), st.floats(2.0, 10.0))
def test_modes_orthonormal_and_com_uniform(n, wz, ratio):
    modes = normal_modes(n, wz, wz * ratio)
    for direction in ("axial", "radial"):
        V = np.array([m.eigenvector for m in modes if m.direction == direction])
        assert np.allclose(V @ V.T, np.eye(n), atol=1e-8)
        com = [m for m in modes if m.direction == direction and m.label == "COM"][0]
        assert np.allclose(com.eigenvector, np.full(n, 1 / np.sqrt(n)), atol=1e-8)


def test_lamb_dicke_scale():
    dev = default_device(2)
    com = dev.mode("COM")
    eta = lamb_dicke(com)
    # COM eta for two ions is the single-ion value divided by sqrt(2)
    assert eta[0] == pytest.approx(eta[1])
    assert 0.05 < abs(eta[0]) < 0.15


def test_light_shift_from_rabi_sign_and_scale():
    # δ = Ω²/2Δ with both in angular units: (2π·1e5)² / (2·2π·1e7) = 2π·500
    w = 2 * np.pi * 1e5
    assert light_shift_from_rabi(w, 2 * np.pi * 1e7) == pytest.approx(500.0, rel=1e-12)
    assert light_shift_from_rabi(w, -2 * np.pi * 1e7) == pytest.approx(-500.0, rel=1e-12)


def test_light_shift_table_total():
    locs = default_locations(2)
    entries = [LightShiftEntry(0, l, 1.0) for l in locs]
    with pytest.raises(ValueError, match="missing"):
        LightShiftTable(tuple(entries), 2, locs)
    entries += [LightShiftEntry(1, l, 2.0) for l in locs]
    t = LightShiftTable(tuple(entries), 2, locs)
    assert t.shift(1, "E0") == 2.0


def test_default_devices():
    d2, d3 = default_device(2), default_device(3)
    assert d2.chain.gate_locations == ("P01", "E0")
    assert d3.chain.gate_locations == ("P12", "P01", "E0")
    assert d3.chain.ancilla_index == 1
    assert d3.light_shifts.shift(0, "P01") == 650.0
    assert d3.light_shifts.shift(2, "P01") == 350.0
    assert d3.light_shifts.shift(2, "E0") == 100.0
    assert d3.beam[(1, "E0")] == pytest.approx(0.2)
    assert d3.timing.t_pb1 == 102.0
    assert d3.ms_calibration(1, 2).crosstalk_p1 == pytest.approx(0.102)
    assert location_targets("E0") == (0,)


def test_chain_rules():
    with pytest.raises(ValueError):
        ChainConfig(3, 0)
    with pytest.raises(ValueError):
        ChainConfig(2, 1, gate_locations=("P01",))
    with pytest.raises(ValueError):
        TimingModel(t_pb1=10.0)


def test_unknown_key_reports_line(tmp_path):
    src = tmp_path / "dev.yaml"
    good = (resources.files("ionbv") / "data" / "device_2ion.yaml").read_text()
    bad = good.replace("  t_pi2_us: 6.0", "  t_pi2_us: 6.0\n  t_bogus: 1.0")
    src.write_text(bad)
    with pytest.raises(ConfigError) as exc:
        load_device(src)
    line = bad.splitlines().index("  t_bogus: 1.0") + 1
    assert f"line {line}" in str(exc.value)


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_device(tmp_path / "nope.yaml")
