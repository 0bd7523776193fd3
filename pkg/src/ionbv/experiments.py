"""Experiment harnesses: BV runs, randomized benchmarking, phase-noise sweeps,
Bell/parity checks, thermal threshold scans and the motional MS study."""
from __future__ import annotations

import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources

import numpy as np
import yaml

from .analysis import (Histogram, bell_fidelity, classical_baseline, data_distribution,
                       mutual_information, parity_scan, rb_fidelity, success_probability)
from .compiler import _Cursor, compile_bv, compile_cascade
from .device import default_device
from .gates import MsGateSpec, OracleSpec, bv_ideal_state, clifford_group_1q
from .motion import added_ms_error, evolve_ms_motional, threshold_nbar, thermal_carrier_infidelity
from .program import CompiledProgram, CompiledSection, MsEvent
from .quantum import basis_strings, partial_trace, DensityMatrix
from .simulator import NoiseConfig, PhaseNoise, evolve_spin


# ----------------------------------------------------------------------------
# noise presets
# ----------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _preset_data():
    text = resources.files("ionbv").joinpath("data/presets.yaml").read_text()
    return yaml.safe_load(text)


def preset_names():
    return sorted(_preset_data())


def noise_from_dict(d: dict) -> NoiseConfig:
    """Build a :class:`NoiseConfig` from a plain mapping (preset or config file)."""
    allowed = {"phase_noise", "light_shifts", "beam_crosstalk", "ms_crosstalk",
               "ms_depolarizing", "heating", "spam_error", "runs"}
    unknown = set(d) - allowed
    if unknown:
        raise KeyError(f"unknown noise keys: {sorted(unknown)}")
    pn = d.get("phase_noise")
    phase = None
    if pn:
        extra = set(pn) - {"freq_hz", "depth", "random_start", "extra_tones"}
        if extra:
            raise KeyError(f"unknown phase_noise keys: {sorted(extra)}")
        tones = tuple((t["freq_hz"], t["depth"]) for t in pn.get("extra_tones", ()))
        phase = PhaseNoise(float(pn.get("freq_hz", 40e3)), float(pn.get("depth", 0.02)),
                           bool(pn.get("random_start", True)), tones)
    xt = d.get("beam_crosstalk", False)
    return NoiseConfig(
        phase_noise=phase,
        light_shifts_enabled=bool(d.get("light_shifts", False)),
        crosstalk=None if xt is True else (False if not xt else xt),
        ms_crosstalk_coupling=None if d.get("ms_crosstalk", False) else False,
        ms_depolarizing=bool(d.get("ms_depolarizing", False)),
        heating_enabled=bool(d.get("heating", False)),
        spam_error=d.get("spam_error", 0.0),
        runs=int(d.get("runs", 16)),
    )


def preset(name: str) -> NoiseConfig:
    data = _preset_data()
    if name not in data:
        raise KeyError(f"unknown noise preset {name!r}; choose from {preset_names()}")
    return noise_from_dict(data[name] or {})


# ----------------------------------------------------------------------------
# Bernstein-Vazirani
# ----------------------------------------------------------------------------

def ideal_bv(s: str) -> dict:
    """Ideal circuit output distribution (no device), any n."""
    spec = OracleSpec(s)
    psi = bv_ideal_state(spec)
    return dict(zip(basis_strings(spec.qubit_count), (abs(psi) ** 2).tolist()))


@dataclass
class BvRun:
    s: str
    histogram: Histogram
    outcome: object
    program: CompiledProgram

    @property
    def success(self):
        return success_probability(self.histogram, self.s)


def run_bv(n, s, noise: NoiseConfig = NoiseConfig(), shots=0, seed=0, device=None) -> BvRun:
    """Compile and simulate one oracle; ``shots == 0`` keeps exact probabilities."""
    if n not in (1, 2):
        raise ValueError("run_bv supports n = 1 or 2")
    if len(s) != n:
        raise ValueError(f"secret {s!r} does not have {n} bits")
    device = device or default_device(n + 1)
    prog = _compile_cached(s, id(device), device, noise.light_shifts_enabled)
    out = evolve_spin(prog, device, noise, seed=seed, shots=shots)
    if shots:
        h = Histogram(out.histogram, shots, n, device.chain.ancilla_index)
    else:
        h = Histogram.from_probabilities(out.readout, n, device.chain.ancilla_index)
    return BvRun(s, h, out, prog)


_COMPILE_CACHE = {}


def _compile_cached(s, key, device, account):
    k = (s, key, account)
    if k not in _COMPILE_CACHE:
        _COMPILE_CACHE[k] = compile_bv(s, device, account_light_shifts=account)
    return _COMPILE_CACHE[k]


def bv_suite(n, noise=NoiseConfig(), shots=0, seed=0, device=None, jobs=1):
    """Run every secret of length ``n``; returns ``{s: BvRun}`` plus summary metrics."""
    secrets = [format(k, f"0{n}b") for k in range(2 ** n)]
    device = device or default_device(n + 1)
    tasks = [(s, seed + i) for i, s in enumerate(secrets)]
    fn = lambda t: run_bv(n, t[0], noise, shots, t[1], device)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            runs = list(ex.map(fn, tasks))
    else:
        runs = [fn(t) for t in tasks]
    results = dict(zip(secrets, runs))
    return results, bv_metrics(results, n)


def bv_metrics(results: dict, n: int) -> dict:
    success = {s: r.success for s, r in results.items()}
    cond = {s: data_distribution(r.histogram) for s, r in results.items()}
    return {
        "success": success,
        "mean_success": float(np.mean(list(success.values()))),
        "mutual_information": mutual_information(cond),
        "classical_baseline": classical_baseline(n),
    }


def largest_error_state(run: BvRun) -> str:
    """Most populated basis string other than the expected output."""
    probs = run.histogram.probabilities()
    dev_expected = _expected_on_device(run)
    errs = {b: p for b, p in probs.items() if b != dev_expected}
    return max(errs, key=errs.get)


def _expected_on_device(run: BvRun) -> str:
    anc = run.histogram.ancilla_index
    return run.s[:anc] + "1" + run.s[anc:]


# ----------------------------------------------------------------------------
# randomized benchmarking
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class RbConfig:
    sequence_count: int = 50
    cliffords_per_ion: int = 15
    seed: int = 0

    def __post_init__(self):
        if self.sequence_count < 1 or self.cliffords_per_ion < 1:
            raise ValueError("RB needs positive sequence and Clifford counts")


def rb_program(cliffords_by_ion, device, account_light_shifts=False):
    """One cascade per Clifford layer, frames flowing between layers."""
    n = device.ion_count
    length = len(cliffords_by_ion[0])
    prog = CompiledProgram(0, "rb", n, device.chain.ancilla_index)
    frames = (0.0,) * n
    cursor = _Cursor(device)
    for k in range(length):
        sec = compile_cascade([cliffords_by_ion[i][k] for i in range(n)], device, frames,
                              label=f"layer{k}", account_light_shifts=account_light_shifts,
                              cursor=cursor)
        prog.sections.append(sec)
        frames = sec.frames_out
    return prog


def rb_sequences(cfg: RbConfig, device):
    """Random Clifford sequences with the inverting element appended, per ion."""
    group = clifford_group_1q()
    rng = np.random.default_rng(cfg.seed)
    seqs = []
    for _ in range(cfg.sequence_count):
        per_ion = []
        for _ in range(device.ion_count):
            idx = rng.integers(len(group), size=cfg.cliffords_per_ion)
            mats = [group[i] for i in idx]
            total = np.eye(2, dtype=complex)
            for m in mats:
                total = m @ total
            per_ion.append(mats + [total.conj().T])
        seqs.append(per_ion)
    return seqs


@functools.lru_cache(maxsize=8)
def _rb_programs(cfg: RbConfig, ion_count: int, account: bool):
    device = default_device(ion_count)
    return [rb_program(s, device, account) for s in rb_sequences(cfg, device)]


def run_rb(cfg: RbConfig = RbConfig(), noise: NoiseConfig = NoiseConfig(), device=None):
    """Per-ion single-length RB fidelity and mean survival.

    Each sequence is simulated once with its own random noise start phase.
    """
    if device is None:
        device = default_device(2)
        progs = _rb_programs(cfg, 2, noise.light_shifts_enabled)
    else:
        progs = [rb_program(s, device, noise.light_shifts_enabled)
                 for s in rb_sequences(cfg, device)]
    if device.ion_count != 2:
        raise ValueError("RB harness runs on the 2-ion chain")
    n = device.ion_count
    surv = np.zeros((len(progs), n))
    for k, prog in enumerate(progs):
        out = evolve_spin(prog, device, noise, seed=cfg.seed * 100003 + k, runs=1,
                          record_sections=False)
        p = out.state.probabilities().reshape((2,) * n)
        for i in range(n):
            surv[k, i] = np.take(p, 0, axis=i).sum()
    mean = surv.mean(axis=0)
    return {"survival": mean.tolist(),
            "fidelity": [rb_fidelity(m, cfg.cliffords_per_ion) for m in mean],
            "per_sequence": surv}


def phase_sweep(freqs_hz, cfg: RbConfig = RbConfig(), depth=0.02, jobs=1):
    """RB fidelity per ion against phase-noise frequency (rows in frequency order)."""
    _rb_programs(cfg, 2, False)           # compile once before fanning out

    def one(f):
        noise = NoiseConfig(phase_noise=PhaseNoise(float(f), depth))
        r = run_rb(cfg, noise)
        return {"freq_hz": float(f), "fidelity_ion0": r["fidelity"][0],
                "fidelity_ion1": r["fidelity"][1]}

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return list(ex.map(one, freqs_hz))
    return [one(f) for f in freqs_hz]


# ----------------------------------------------------------------------------
# Bell / parity
# ----------------------------------------------------------------------------

def bell_experiment(pair=(0, 1), ion_count=2, noise: NoiseConfig = NoiseConfig(), seed=0):
    """MS gate on |0…0⟩ followed by populations, parity contrast and P1."""
    device = default_device(ion_count)
    cal = device.ms_calibration(*pair)
    prog = CompiledProgram(0, "bell", ion_count, device.chain.ancilla_index)
    sec = CompiledSection("ms")
    sec.events = [MsEvent(tuple(pair), np.pi / 2, -cal.frame_phase, device.timing.t_ms, True)]
    prog.sections.append(sec)
    out = evolve_spin(prog, device, noise, seed=seed, record_sections=False)
    keep = list(pair)
    rho2 = partial_trace(out.state, keep)
    pops = dict(zip(["00", "01", "10", "11"], rho2.probabilities().tolist()))
    A = parity_scan(rho2.matrix)
    res = {"populations": pops, "parity_contrast": A, "bell_fidelity": bell_fidelity(pops, A)}
    others = [i for i in range(ion_count) if i not in pair]
    if others:
        r1 = partial_trace(out.state, others)
        res["p1"] = float(r1.probabilities()[1])
    return res


# ----------------------------------------------------------------------------
# motion
# ----------------------------------------------------------------------------

def thermal_scan(ion_count, nbars):
    modes = default_device(ion_count).modes
    return [{"nbar": float(nb), "infidelity": thermal_carrier_infidelity(modes, nb)}
            for nb in nbars]


def thermal_thresholds(target=1e-4):
    return {n: threshold_nbar(default_device(n).modes, target) for n in (2, 3)}


def ms_motional_study(fock_dim=12, lamb_dicke_order=3):
    """Ideal closed-loop fidelity and heating-added error on the 2-ion rocking mode."""
    device = default_device(2)
    spec = MsGateSpec((0, 1))
    rock, com = device.mode("rocking"), device.mode("COM")
    ideal = evolve_ms_motional(spec, rock, lamb_dicke_order=1, fock_dim=fock_dim)
    added, base, hot = added_ms_error(spec, rock, com, lamb_dicke_order, fock_dim)
    return {"ideal_fidelity": ideal.bell_fidelity, "baseline_infidelity": base.infidelity,
            "heated_infidelity": hot.infidelity, "added_error": added}
