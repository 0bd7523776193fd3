"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -s`` or
``python tests/test_acceptance.py`` for the verdict lines only.
"""
import itertools
import time
from pathlib import Path

import numpy as np
import pytest
import yaml

from ionbv.analysis import (bell_fidelity, classical_baseline, classical_single_query,
                            error_budget, mutual_information, parity_scan, solve_pb1_fidelity)
from ionbv.cli import cmd_run, load_config
from ionbv.compiler import calibrate_overhead, compile_bv, duration
from ionbv.device import default_device
from ionbv.experiments import (RbConfig, bv_suite, ideal_bv, largest_error_state,
                               ms_motional_study, phase_sweep, preset, thermal_scan,
                               thermal_thresholds)
from ionbv.gates import MsGateSpec, OracleSpec, ms_unitary, naive_infidelity, pb1_infidelity
from ionbv.program import dumps_transport

# frequencies fixed before looking at any sweep output
RB_GRID_KHZ = [1, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100]
_PROGRAMS = {}


def verdict(num, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] #{num:<2} {title}: {detail}"
    print(line)
    return line


@pytest.fixture
def judge(capsys):
    def _judge(num, title, ok, detail):
        with capsys.disabled():
            print("\n" + verdict(num, title, ok, detail))
        assert ok, detail
    return _judge


def secrets(n):
    return ["".join(b) for b in itertools.product("01", repeat=n)]


def bv_program(s):
    if s not in _PROGRAMS:
        _PROGRAMS[s] = compile_bv(s)
    return _PROGRAMS[s]


# ---------------------------------------------------------------------------

def check_1():
    t0 = time.perf_counter()
    worst = 0.0
    for n in (1, 2, 3):
        for s in secrets(n):
            a = OracleSpec(s).ancilla_index
            worst = max(worst, 1.0 - ideal_bv(s)[s[:a] + "1" + s[a:]])
    dt = time.perf_counter() - t0
    return worst <= 1e-9 and dt < 1.0, f"max deficit {worst:.1e}, {dt * 1e3:.0f} ms"


def check_2():
    p0, p1 = bv_program("0"), bv_program("1")
    got = (p0.pb1_count, p0.ms_count, p1.pb1_count, p1.ms_count)
    moves = {n: {bv_program(s).transport_count for s in secrets(n)} for n in (1, 2)}
    ok = got == (6, 0, 15, 1) and moves == {1: {9}, 2: {19}}
    note = " (padded)" if p0.padded or p1.padded else ""
    return ok, (f"s=0 {got[0]} PB1/{got[1]} MS, s=1 {got[2]} PB1/{got[3]} MS{note}; "
                f"transports {moves}")


def check_3():
    same = True
    for n in (1, 2):
        dev = default_device(n + 1)
        plans = {dumps_transport(bv_program(s)) for s in secrets(n)}
        times = {duration(bv_program(s), dev.timing) for s in secrets(n)}
        same &= len(plans) == 1 and len(times) == 1
    return same, "transport text and timings identical across s" if same else "differ"


def check_4():
    phis = np.linspace(0, 2 * np.pi, 73)
    # the neighbour should see the identity; worst case over the target phase
    worst = max(pb1_infidelity(phi=p, rabi_scale=0.2, target=np.eye(2)) for p in phis)
    return worst <= 7e-4, f"worst neighbour infidelity {worst:.3e} (limit 7.0e-04)"


def check_5():
    val = pb1_infidelity(detuning_hz=650.0)
    return 3.5e-5 <= val <= 1.4e-4, f"infidelity {val:.3e} (band 3.5e-05..1.4e-04)"


def check_6():
    ratio = pb1_infidelity(rabi_scale=1.1) / naive_infidelity(rabi_scale=1.1)
    h = 0.01
    eps = np.arange(1, 5) * h
    inf = np.array([(pb1_infidelity(rabi_scale=1 + e) + pb1_infidelity(rabi_scale=1 - e)) / 2
                    for e in eps])
    c2, c4, c6, _ = np.linalg.solve(np.stack([eps ** 2, eps ** 4, eps ** 6, eps ** 8], 1), inf)
    ok = ratio < 1e-2 and abs(c2) < 1e-8 and abs(c4) < 1e-4
    return ok, f"ratio {ratio:.2e}; eps^2 {c2:.1e}, eps^4 {c4:.1e}, eps^6 {c6:.2f}"


def check_7():
    rows = phase_sweep([f * 1e3 for f in RB_GRID_KHZ], RbConfig(50, 15), depth=0.02)
    f0 = np.array([r["fidelity_ion0"] for r in rows])
    f1 = np.array([r["fidelity_ion1"] for r in rows])
    glob = np.minimum(f0, f1)
    f_min = RB_GRID_KHZ[int(np.argmin(glob))]
    order = bool(np.all(f0 <= f1))
    ok = 20 <= f_min <= 60 and order
    bad = [f for f, a, b in zip(RB_GRID_KHZ, f0, f1) if a > b]
    return ok, (f"minimum at {f_min} kHz (F0 {f0.min():.4f}); "
                f"ion0 <= ion1 {'everywhere' if order else f'violated at {bad} kHz'}")


def check_8():
    noise = preset("calibrated")
    r1, m1 = bv_suite(1, noise)
    r2, m2 = bv_suite(2, noise)
    worst = largest_error_state(r2["11"])
    parts = [0.95 <= m1["mean_success"] <= 1.0,
             0.75 <= m2["mean_success"] <= 0.87,
             1.00 <= m2["mutual_information"] <= 1.25,
             worst == "110"]
    tag = lambda ok: "ok" if ok else "out"
    return all(parts), (f"n=1 mean {m1['mean_success']:.3f} {tag(parts[0])}, "
                        f"n=2 mean {m2['mean_success']:.3f} {tag(parts[1])}, "
                        f"MI {m2['mutual_information']:.3f} {tag(parts[2])}, "
                        f"s=11 largest error |{worst}> {tag(parts[3])}")


def check_9():
    f_ms = 0.961
    f_pb1 = solve_pb1_fidelity(0.89, 15, f_ms)
    p = bv_program("1")
    pred, _ = error_budget({"pb1_count": p.pb1_count, "ms_count": p.ms_count},
                           {"pb1": f_pb1, "ms": f_ms})
    return abs(pred - 0.89) <= 1e-3, f"per-pulse {f_pb1:.5f}, budget {pred:.4f} vs 0.89"


def check_10():
    r12 = ms_motional_study(fock_dim=12)
    r24 = ms_motional_study(fock_dim=24)
    conv = max(abs(r12["ideal_fidelity"] - r24["ideal_fidelity"]),
               abs(r12["heated_infidelity"] - r24["heated_infidelity"]))
    ok = r12["ideal_fidelity"] >= 0.9999 and 1e-5 <= r12["added_error"] <= 1e-3 and conv < 1e-6
    return ok, (f"ideal {r12['ideal_fidelity']:.6f}, added {r12['added_error']:.2e}, "
                f"fock doubling {conv:.1e}")


def check_11():
    nbars = np.linspace(0, 15, 16)
    mono = all(np.all(np.diff([r["infidelity"] for r in thermal_scan(n, nbars)]) > 0)
               for n in (2, 3))
    th = thermal_thresholds(1e-4)
    ok = mono and th[3] > th[2]
    return ok, (f"monotone {mono}; thresholds 2-ion {th[2]:.2f} (reference 5.5), "
                f"3-ion {th[3]:.2f} (reference 8.5)")


def check_12():
    base = [classical_baseline(n) for n in (1, 2, 3)]
    mi = mutual_information(classical_single_query(2))
    fb = bell_fidelity({"00": 0.5, "01": 0.0, "10": 0.0, "11": 0.5}, 1.0)
    psi = ms_unitary(MsGateSpec((0, 1))).matrix[:, 0]
    A = parity_scan(np.outer(psi, psi.conj()))
    ok = base == [1.0, 0.5, 0.25] and abs(mi - 1) < 1e-12 and fb == 1.0 and abs(A - 1) < 1e-6
    return ok, f"baselines {base}, single-query MI {mi:.12f}, Bell F {fb}, contrast {A:.8f}"


def check_13():
    t2, t3 = default_device(2).timing, default_device(3).timing
    zero = t2.__class__(**{**t2.__dict__, "t_overhead": 0.0})
    oh = calibrate_overhead(bv_program("1"), zero, 3900.0)
    timing = t3.__class__(**{**t3.__dict__, "t_overhead": oh})
    d1 = duration(bv_program("1"), t2.__class__(**{**t2.__dict__, "t_overhead": oh})).total
    d2 = duration(bv_program("11"), timing).total
    ok = abs(d1 - 3900) < 1e-6 and abs(d2 - 9800) <= 980
    return ok, f"overhead {oh:.2f} us/event; n=1 {d1 / 1e3:.3f} ms, n=2 {d2 / 1e3:.3f} ms (9.8 +- 0.98)"


def check_14(tmp):
    configs = [
        {"noise": "calibrated", "shots": 500, "seed": 5, "experiment": {"kind": "bv", "n": 2}},
        {"noise": "phase-noise", "seed": 2,
         "experiment": {"kind": "rb", "sequence_count": 4, "cliffords_per_ion": 5}},
    ]
    same = True
    for k, cfg in enumerate(configs):
        path = Path(tmp) / f"c{k}.yaml"
        path.write_text(yaml.safe_dump(cfg))
        outs = []
        for rep in "ab":
            out = Path(tmp) / f"r{k}{rep}"
            cmd_run(load_config(path, {"out": str(out)}))
            outs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        same &= outs[0] == outs[1] and bool(outs[0])
    return same, "results files byte-identical on re-run" if same else "results differ"


# ---------------------------------------------------------------------------

TITLES = {1: "ideal BV identity", 2: "compiled counts", 3: "honesty", 4: "neighbour suppression",
          5: "light-shift robustness", 6: "PB1 flatness", 7: "phase-noise band",
          8: "calibrated BV", 9: "error budget round trip", 10: "MS motional",
          11: "thermal thresholds", 12: "analysis identities", 13: "duration accounting",
          14: "determinism"}
SLOW = {7, 8, 10}


def test_01_ideal_bv_identity(judge):
    judge(1, TITLES[1], *check_1())


def test_02_compiled_counts(judge):
    judge(2, TITLES[2], *check_2())


def test_03_honesty(judge):
    judge(3, TITLES[3], *check_3())


def test_04_neighbour_suppression(judge):
    judge(4, TITLES[4], *check_4())


def test_05_light_shift_robustness(judge):
    judge(5, TITLES[5], *check_5())


def test_06_pb1_flatness(judge):
    judge(6, TITLES[6], *check_6())


@pytest.mark.slow
def test_07_phase_noise_band(judge):
    judge(7, TITLES[7], *check_7())


@pytest.mark.slow
def test_08_calibrated_bv(judge):
    judge(8, TITLES[8], *check_8())


def test_09_error_budget_round_trip(judge):
    judge(9, TITLES[9], *check_9())


@pytest.mark.slow
def test_10_ms_motional(judge):
    judge(10, TITLES[10], *check_10())


def test_11_thermal_thresholds(judge):
    judge(11, TITLES[11], *check_11())


def test_12_analysis_identities(judge):
    judge(12, TITLES[12], *check_12())


def test_13_duration_accounting(judge):
    judge(13, TITLES[13], *check_13())


def test_14_determinism(judge, tmp_path):
    judge(14, TITLES[14], *check_14(tmp_path))


if __name__ == "__main__":
    import tempfile
    checks = {k: globals()[f"check_{k}"] for k in TITLES}
    with tempfile.TemporaryDirectory() as tmp:
        for k, fn in checks.items():
            verdict(k, TITLES[k], *(fn(tmp) if k == 14 else fn()))
