"""Pulse-level spin simulation of compiled programs.

Every ion sees the beam of the current gate location with its own relative
Rabi rate and light shift.  A PB1 event is integrated as a piecewise-constant
Hamiltonian

    H_i = Ω r_i / 2 (cos φ(t) X + sin φ(t) Y) + π δ_i Z,
    φ(t) = φ_cmd + depth · sin(2π f t + φ₀),

on a grid of at most ``min(1 µs, 1/(20 f))``.  Ions do not couple during
single-qubit pulses, so the register propagator is a Kronecker product of
2×2 blocks.  The global clock includes transport and per-event overhead so
the noise phase is continuous across the whole program.

MS events apply the ideal interaction with the pair's calibrated phase
offsets, a two-qubit depolarising channel matched to the Bell fidelity, and
a coherent crosstalk rotation on the untargeted ion.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .device import DeviceModel, location_targets
from .gates import MsGateSpec, ms_unitary, pb1_expand, pulse_unitary, rotation, rz
from .quantum import I2, X, Y, Z, DensityMatrix, basis_strings, embed, fidelity, kron_all


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PhaseNoise:
    """Sinusoidal laser phase noise, optionally a mix of several tones.

    ``extra_tones`` holds further ``(freq_hz, depth)`` pairs added to the
    primary tone; each tone gets its own random start phase.  Pulses are
    integrated piecewise-constant with steps of at most ``max_step_us`` and
    ``1 / (steps_per_period · f)`` for the fastest tone.
    """
    freq_hz: float = 40e3
    depth: float = 0.02
    random_start: bool = True
    extra_tones: tuple = ()
    max_step_us: float = 1.0
    steps_per_period: int = 20

    def __post_init__(self):
        object.__setattr__(self, "extra_tones",
                           tuple((float(f), float(d)) for f, d in self.extra_tones))
        for f, d in self.tones:
            if d < 0:
                raise ValueError("phase-noise depth must be non-negative")
            if f < 0:
                raise ValueError("phase-noise frequency must be non-negative")
        if self.max_step_us <= 0 or self.steps_per_period < 1:
            raise ValueError("integration step controls must be positive")

    @property
    def tones(self):
        return ((float(self.freq_hz), float(self.depth)),) + self.extra_tones

    @property
    def active(self) -> bool:
        return any(d > 0 for _, d in self.tones)

    @property
    def max_freq_hz(self) -> float:
        return max(f for f, d in self.tones if d > 0) if self.active else 0.0

    def start_phases(self, rng):
        if not self.random_start:
            return np.zeros(len(self.tones))
        return rng.uniform(0, 2 * np.pi, len(self.tones))

    def offset(self, t_us, phi0):
        """Phase excursion at times ``t_us`` (µs) for start phases ``phi0``."""
        phi0 = np.broadcast_to(np.atleast_1d(phi0), (len(self.tones),))
        out = np.zeros_like(np.asarray(t_us, dtype=float))
        for (f, d), p in zip(self.tones, phi0):
            if d > 0:
                out = out + d * np.sin(2 * np.pi * f * 1e-6 * t_us + p)
        return out


@dataclass(frozen=True)
class NoiseConfig:
    """Which physical imperfections the spin simulation includes.

    ``crosstalk``: ``None`` uses the device beam profile, ``False`` gives
    perfect addressing, a dict ``{(ion, location): r}`` overrides entries.
    ``ms_crosstalk_coupling``: ``{pair: P1}`` overrides the device values;
    ``False`` disables MS crosstalk.
    """
    phase_noise: PhaseNoise = None
    light_shifts_enabled: bool = False
    crosstalk: object = False
    ms_crosstalk_coupling: object = False
    ms_depolarizing: bool = False
    heating_enabled: bool = False
    spam_error: object = 0.0
    runs: int = 16

    def __post_init__(self):
        spam = np.atleast_1d(np.asarray(self.spam_error, dtype=float))
        if np.any(spam < 0) or np.any(spam > 1):
            raise ValueError("spam_error must lie in [0, 1]")
        if self.runs < 1:
            raise ValueError("runs must be positive")
        if isinstance(self.ms_crosstalk_coupling, dict):
            for p in self.ms_crosstalk_coupling.values():
                if not 0 <= p <= 1:
                    raise ValueError("MS crosstalk P1 must lie in [0, 1]")

    @property
    def stochastic(self):
        pn = self.phase_noise
        return (pn is not None and pn.active and pn.random_start) or self.heating_enabled


NOISELESS = NoiseConfig()


@dataclass
class SimOutcome:
    state: DensityMatrix
    ion_count: int
    section_fidelity: list = field(default_factory=list)   # (label, fidelity)
    histogram: dict = None
    shots: int = 0
    seed: int = None
    readout: dict = None        # basis string -> probability after SPAM

    @property
    def probabilities(self) -> dict:
        p = self.state.probabilities()
        return {b: float(v) for b, v in zip(basis_strings(self.ion_count), p)}


# ----------------------------------------------------------------------------
# propagators
# ----------------------------------------------------------------------------

def _tree_product(U):
    """Time-ordered product ``U[K-1] ⋯ U[0]`` of a stack of 2×2 matrices."""
    while len(U) > 1:
        if len(U) % 2:
            U = np.concatenate([U, np.eye(2, dtype=complex)[None]], axis=0)
        U = U[1::2] @ U[0::2]
    return U[0]


def _segment(phi, omega, r, delta, t0, dur, noise, phi0):
    """Propagator of one square sub-pulse; times in µs, ``delta`` in Hz."""
    dz = np.pi * delta * 1e-6          # rad/µs coefficient of Z
    if noise is None or not noise.active or r == 0:
        theta = omega * dur            # nominal area at r = 1
        return pulse_unitary(phi, theta, r, 2 * dz, t_pi2=np.pi / 2 / omega)
    f = noise.max_freq_hz * 1e-6       # cycles / µs
    dt_max = noise.max_step_us
    if f > 0:
        dt_max = min(dt_max, 1.0 / (noise.steps_per_period * f))
    k = max(1, int(np.ceil(dur / dt_max - 1e-9)))
    dt = dur / k
    t = t0 + (np.arange(k) + 0.5) * dt
    ph = phi + noise.offset(t, phi0)
    hx = r * omega / 2 * np.cos(ph)
    hy = r * omega / 2 * np.sin(ph)
    hz = np.full(k, dz)
    norm = np.sqrt(hx ** 2 + hy ** 2 + hz ** 2)
    c = np.cos(norm * dt)
    s = np.where(norm > 0, np.sin(norm * dt) / np.where(norm > 0, norm, 1), dt)
    U = np.empty((k, 2, 2), dtype=complex)
    U[:, 0, 0] = c - 1j * s * hz
    U[:, 1, 1] = c + 1j * s * hz
    U[:, 0, 1] = -1j * s * (hx - 1j * hy)
    U[:, 1, 0] = -1j * s * (hx + 1j * hy)
    return _tree_product(U)


def pb1_propagator(phi, theta, t0, t_pi2, r=1.0, delta=0.0, noise=None, phi0=0.0,
                   delay=0.0):
    """2×2 propagator of a PB1 sequence starting at global time ``t0`` (µs)."""
    seq = pb1_expand(theta, phi, t_pi2)
    omega = np.pi / 2 / t_pi2
    U = np.eye(2, dtype=complex)
    t = t0
    for p in seq.pulses:
        U = _segment(p.phi, omega, r, delta, t, p.duration, noise, phi0) @ U
        t += p.duration
    if delay > 0 and delta:
        U = rz(2 * np.pi * delta * 1e-6 * delay).matrix @ U
    return U


def _beam(device, noise, ion, loc):
    if ion in location_targets(loc):
        base = 1.0
    elif noise.crosstalk is False:
        base = 0.0
    else:
        base = device.beam[(ion, loc)]
    if isinstance(noise.crosstalk, dict):
        base = noise.crosstalk.get((ion, loc), base)
    return base


def _depolarize(rho, qubits, p, n):
    """Two-qubit depolarising channel ``ρ → (1-p)ρ + p · Tr_q(ρ) ⊗ I/4``."""
    if p <= 0:
        return rho
    paulis = [I2, X, Y, Z]
    out = (1 - p) * rho
    acc = np.zeros_like(rho)
    for A in paulis:
        for B in paulis:
            K = embed(A, qubits[0], n) @ embed(B, qubits[1], n)
            acc += K @ rho @ K.conj().T
    return out + p * acc / 16


def _rabi_scales(device, occupations, ion):
    from .motion import rabi_factor
    scale = 1.0
    for m, nocc in zip(device.modes, occupations):
        if m.direction != "radial":
            continue
        scale *= rabi_factor(nocc, m.lamb_dicke[ion], reference="ground")
    return scale


# ----------------------------------------------------------------------------
# main entry
# ----------------------------------------------------------------------------

def _single_run(program, device, noise, rng, record_sections):
    n = device.ion_count
    timing = device.timing
    psi0 = np.zeros(2 ** n, dtype=complex)
    psi0[0] = 1
    rho = np.outer(psi0, psi0.conj())
    pn = noise.phase_noise
    phi0 = pn.start_phases(rng) if pn is not None else 0.0
    occ = None
    if noise.heating_enabled:
        occ = [rng.geometric(1 / (1 + m.nbar)) - 1 for m in device.modes]
    t = 0.0
    states = []
    for sec in program.sections:
        for e in sec.events:
            if e.kind == "frame":
                continue
            t += timing.t_overhead
            if e.kind == "transport":
                t_end = t + e.duration
            elif e.kind == "pb1":
                t_end = t + e.duration
                if e.enabled:
                    ops = []
                    for i in range(n):
                        r = _beam(device, noise, i, e.location)
                        if occ is not None and r:
                            r *= _rabi_scales(device, occ, i)
                        d = device.light_shifts.shift(i, e.location) if noise.light_shifts_enabled else 0.0
                        if r == 0 and d == 0:
                            ops.append(I2)
                            continue
                        ops.append(pb1_propagator(e.phi, e.theta, t, timing.t_pi2, r, d, pn, phi0,
                                                  timing.pb1_delay))
                    U = kron_all(*ops)
                    rho = U @ rho @ U.conj().T
            elif e.kind == "ms":
                t_end = t + e.duration
                if e.enabled:
                    rho = _apply_ms(rho, e, device, noise, n)
            else:
                raise SimulationError(f"unknown event kind {e.kind!r}")
            if occ is not None:
                for k, m in enumerate(device.modes):
                    occ[k] += rng.poisson(m.heating_rate * (t_end - t) * 1e-6)
            t = t_end
        if record_sections:
            states.append((sec.label, rho.copy()))
    return rho, states


def _apply_ms(rho, e, device, noise, n):
    cal = device.ms_calibration(*e.pair)
    spec = MsGateSpec(e.pair, e.theta, echo=e.echo, ion_count=n, phase=e.phase + cal.frame_phase)
    U = ms_unitary(spec).matrix
    for i in e.pair:
        U = embed(rz(cal.lightshift_phase).matrix, i, n) @ U
    rho = U @ rho @ U.conj().T
    if noise.ms_depolarizing:
        p = min(1.0, 4 * (1 - cal.bell_fidelity) / 3)
        rho = _depolarize(rho, e.pair, p, n)
    if noise.ms_crosstalk_coupling is not False:
        p1 = cal.crosstalk_p1
        if isinstance(noise.ms_crosstalk_coupling, dict):
            p1 = noise.ms_crosstalk_coupling.get(e.pair, p1)
        if p1 > 0:
            beta = 2 * np.arcsin(np.sqrt(p1))
            axis = e.phase + cal.frame_phase + cal.crosstalk_phase
            for j in spec.untargeted:
                R = embed(rotation(axis, beta).matrix, j, n)
                rho = R @ rho @ R.conj().T
    return rho


def _apply_spam(probs, spam, n):
    spam = np.broadcast_to(np.atleast_1d(np.asarray(spam, dtype=float)), (n,))
    if not np.any(spam):
        return probs
    p = probs.reshape((2,) * n)
    for q in range(n):
        e = spam[q]
        M = np.array([[1 - e, e], [e, 1 - e]])
        p = np.moveaxis(np.tensordot(M, np.moveaxis(p, q, 0), axes=1), 0, q)
    return p.reshape(-1)


def evolve_spin(program, device: DeviceModel, noise: NoiseConfig = NOISELESS, seed=0,
                shots=0, runs=None, record_sections=True) -> SimOutcome:
    """Simulate ``program`` on ``device``; noisy runs are averaged into a density matrix."""
    if program.ion_count != device.ion_count:
        raise SimulationError("program and device disagree on the ion count")
    rng = np.random.default_rng(seed)
    runs = runs or (noise.runs if noise.stochastic else 1)
    n = device.ion_count
    rho = np.zeros((2 ** n, 2 ** n), dtype=complex)
    sec_acc = None
    for _ in range(runs):
        r, states = _single_run(program, device, noise, rng, record_sections)
        rho += r / runs
        if record_sections:
            if sec_acc is None:
                sec_acc = [(lab, s / runs) for lab, s in states]
            else:
                sec_acc = [(lab, a + s / runs) for (lab, a), (_, s) in zip(sec_acc, states)]
    if abs(np.trace(rho) - 1) > 1e-8 or np.max(abs(rho - rho.conj().T)) > 1e-8:
        raise SimulationError("state lost trace or hermiticity")
    state = DensityMatrix(rho, n, check=False)
    trace = []
    if record_sections:
        _, ideal = _single_run(program, device, NOISELESS, np.random.default_rng(0), True)
        for (lab, a), (_, b) in zip(sec_acc, ideal):
            trace.append((lab, float(fidelity(DensityMatrix(a, n, check=False),
                                              DensityMatrix(b, n, check=False)))))
    out = SimOutcome(state, n, trace, seed=seed)
    if noise.spam_error is not None:
        probs = _apply_spam(np.clip(np.real(np.diag(rho)), 0, None), noise.spam_error, n)
    else:
        probs = np.clip(np.real(np.diag(rho)), 0, None)
    probs = probs / probs.sum()
    out.readout = dict(zip(basis_strings(n), probs.tolist()))
    if shots:
        counts = rng.multinomial(shots, probs)
        out.histogram = dict(zip(basis_strings(n), counts.tolist()))
        out.shots = shots
    return out


def results_csv(outcome: SimOutcome, metadata: dict) -> str:
    """Results table: metadata comment lines, histogram rows, section fidelities."""
    buf = io.StringIO()
    for k in sorted(metadata):
        buf.write(f"# {k}: {metadata[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "key", "count", "value"])
    probs = outcome.readout
    for b in basis_strings(outcome.ion_count):
        c = outcome.histogram.get(b, 0) if outcome.histogram else ""
        w.writerow(["histogram", b, c, f"{probs[b]:.10f}"])
    for lab, f in outcome.section_fidelity:
        w.writerow(["section_fidelity", lab, "", f"{f:.10f}"])
    return buf.getvalue()
