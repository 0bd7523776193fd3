import numpy as np
import pytest

from ionbv.experiments import (RbConfig, bell_experiment, bv_suite, ideal_bv, largest_error_state,
                               noise_from_dict, preset, preset_names, run_bv, run_rb)
from ionbv.simulator import NoiseConfig


def test_presets_load():
    names = preset_names()
    assert {"noiseless", "phase-noise", "light-shift", "calibrated"} <= set(names)
    for name in names:
        assert isinstance(preset(name), NoiseConfig)
    assert not preset("noiseless").stochastic
    with pytest.raises(KeyError):
        preset("nope")


def test_noise_from_dict_rejects_unknown_keys():
    with pytest.raises((KeyError, ValueError)):
        noise_from_dict({"phase_noise": {"freq_hz": 1e3, "colour": "pink"}})
    cfg = noise_from_dict({"phase_noise": {"freq_hz": 4e4, "depth": 0.01,
                                           "extra_tones": [{"freq_hz": 1e4, "depth": 0.05}]}})
    assert len(cfg.phase_noise.tones) == 2


@pytest.mark.parametrize("s,expected", [("0", "01"), ("1", "11"), ("10", "110"),
                                        ("01", "011"), ("110", "1101")])
def test_ideal_bv_is_deterministic(s, expected):
    assert ideal_bv(s)[expected] == pytest.approx(1.0)


def test_bv_suite_noiseless():
    runs, metrics = bv_suite(2)
    assert metrics["mean_success"] == pytest.approx(1.0, abs=1e-9)
    assert metrics["mutual_information"] == pytest.approx(2.0, abs=1e-6)
    assert metrics["classical_baseline"] == 0.5


def test_run_bv_validation_and_shots():
    with pytest.raises(ValueError):
        run_bv(3, "101")
    with pytest.raises(ValueError):
        run_bv(2, "1")
    r = run_bv(1, "1", shots=500, seed=3)
    assert r.histogram.shots == 500 and r.success == 1.0


def test_largest_error_state_excludes_expected():
    r = run_bv(2, "11", preset("calibrated"))
    assert largest_error_state(r) != "111"


def test_rb_noiseless_survival_is_one():
    r = run_rb(RbConfig(sequence_count=3, cliffords_per_ion=4))
    assert np.allclose(r["survival"], 1.0, atol=1e-9)
    assert np.allclose(r["fidelity"], 1.0, atol=1e-9)


def test_bell_experiment():
    ideal = bell_experiment()
    assert ideal["bell_fidelity"] == pytest.approx(1.0, abs=1e-6)
    cal = bell_experiment(noise=preset("calibrated"))
    assert 0.9 < cal["bell_fidelity"] < 1.0
    three = bell_experiment((1, 2), 3, preset("calibrated"))
    assert 0 < three["p1"] < 0.2
