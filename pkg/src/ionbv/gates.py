"""Ideal gates, PB1 composite pulses, MS gates, CNOT dressing and the BV oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .quantum import I2, X, Y, Z, UnitaryOp, average_gate_fidelity, embed, equal_up_to_phase, \
    kron_all

HALF_PI = np.pi / 2


def rotation(phi: float, theta: float) -> UnitaryOp:
    """``exp(-i θ/2 (cos φ X + sin φ Y))``."""
    n = np.cos(phi) * X + np.sin(phi) * Y
    return UnitaryOp(np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * n, f"R_{phi:.4g}({theta:.4g})")


def rz(phi: float) -> UnitaryOp:
    """``exp(-i φ/2 Z)``."""
    return UnitaryOp(np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)]), f"Rz({phi:.4g})")


def hadamard() -> UnitaryOp:
    return UnitaryOp(np.array([[1, 1], [1, -1]]) / np.sqrt(2), "H")


def pulse_unitary(phi, theta, rabi_scale=1.0, detuning=0.0, t_pi2=1.0):
    """Square pulse with a static detuning.

    ``theta`` is the nominal area; ``rabi_scale`` multiplies the Rabi rate and
    ``detuning`` (angular, in units of 1/t_pi2's time unit) adds ``δ/2·Z``.
    """
    omega = HALF_PI / t_pi2
    t = theta / omega
    a = np.array([rabi_scale * omega / 2 * np.cos(phi), rabi_scale * omega / 2 * np.sin(phi),
                  detuning / 2])
    norm = np.linalg.norm(a)
    if norm < 1e-300:
        return np.eye(2, dtype=complex)
    n = a / norm
    ns = n[0] * X + n[1] * Y + n[2] * Z
    return np.cos(norm * t) * I2 - 1j * np.sin(norm * t) * ns


# ----------------------------------------------------------------------------
# PB1
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class EquatorialPulse:
    phi: float
    theta: float
    duration: float = 0.0

    @property
    def unitary(self) -> UnitaryOp:
        return rotation(self.phi, self.theta)


@dataclass(frozen=True)
class Pb1Sequence:
    """Passband composite pulse ``θ_φ · 2π_{φ+φ₁} · 4π_{φ−φ₁} · 2π_{φ+φ₁}`` (time order).

    Uniform amplitude errors cancel through second order, so the infidelity
    of the composite grows as ε⁶.
    """
    pulses: tuple
    target_theta: float
    target_phi: float

    @property
    def phi1(self) -> float:
        return float(np.arccos(-self.target_theta / (8 * np.pi)))

    @property
    def area(self) -> float:
        return float(sum(p.theta for p in self.pulses))

    @property
    def duration(self) -> float:
        return float(sum(p.duration for p in self.pulses))

    def unitary(self, rabi_scale=1.0, detuning=0.0, t_pi2=1.0) -> np.ndarray:
        U = np.eye(2, dtype=complex)
        for p in self.pulses:
            U = pulse_unitary(p.phi, p.theta, rabi_scale, detuning, t_pi2) @ U
        return U


def pb1_expand(theta: float, phi: float, t_pi2: float = 6.0) -> Pb1Sequence:
    if not 0 < theta <= np.pi:
        raise ValueError(f"PB1 target angle must lie in (0, π], got {theta}")
    phi1 = np.arccos(-theta / (8 * np.pi))
    spec = [(phi, theta), (phi + phi1, 2 * np.pi), (phi - phi1, 4 * np.pi), (phi + phi1, 2 * np.pi)]
    pulses = tuple(EquatorialPulse(float(p), float(t), float(t / HALF_PI * t_pi2)) for p, t in spec)
    return Pb1Sequence(pulses, float(theta), float(phi))


def pb1_infidelity(theta=HALF_PI, phi=0.0, rabi_scale=1.0, detuning_hz=0.0, t_pi2_us=6.0,
                   target=None) -> float:
    """Average-gate infidelity of a PB1 pulse.

    Parameters
    ----------
    rabi_scale : float
        Relative Rabi rate seen by the ion (``1 + ε`` for an amplitude
        error, the beam ratio for a neighbour).
    detuning_hz : float
        Static frequency offset, e.g. a light shift.
    target : array_like, optional
        Reference unitary; defaults to the ideal ``R_φ(θ)``.
    """
    seq = pb1_expand(theta, phi, t_pi2_us)
    delta = 2 * np.pi * detuning_hz * 1e-6          # rad/µs
    U = seq.unitary(rabi_scale, delta, t_pi2_us)
    V = rotation(phi, theta).matrix if target is None else np.asarray(target)
    return 1.0 - average_gate_fidelity(U, V)


def naive_infidelity(theta=HALF_PI, phi=0.0, rabi_scale=1.0, target=None) -> float:
    """Same metric for a single square pulse of nominal area ``theta``."""
    U = pulse_unitary(phi, theta, rabi_scale)
    V = rotation(phi, theta).matrix if target is None else np.asarray(target)
    return 1.0 - average_gate_fidelity(U, V)


# ----------------------------------------------------------------------------
# MS
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class MsGateSpec:
    target_pair: tuple
    theta: float = HALF_PI
    echo: bool = False
    echo_y_on_targeted: bool = True
    ion_count: int = 2
    phase: float = 0.0

    def __post_init__(self):
        a, b = sorted(self.target_pair)
        if b - a != 1:
            raise ValueError(f"MS gates act on adjacent ions only, got {self.target_pair}")
        if b >= self.ion_count:
            raise ValueError("target pair outside the chain")
        object.__setattr__(self, "target_pair", (a, b))

    @property
    def untargeted(self):
        return tuple(i for i in range(self.ion_count) if i not in self.target_pair)


def _xx(spec: MsGateSpec, theta: float) -> np.ndarray:
    sp = np.cos(spec.phase) * X + np.sin(spec.phase) * Y
    a, b = spec.target_pair
    xx = embed(sp, a, spec.ion_count) @ embed(sp, b, spec.ion_count)
    return expm(-0.5j * theta * xx)


def ms_unitary(spec: MsGateSpec) -> UnitaryOp:
    """``exp(-i θ/2 X_φ⊗X_φ)`` on the target pair, identity elsewhere.

    The echo variant runs two θ/2 halves, each followed by a Y π-pulse on the
    targeted (or untargeted) ions.
    """
    if not 0 < spec.theta <= np.pi:
        raise ValueError("MS angle must lie in (0, π]")
    if not spec.echo:
        return UnitaryOp(_xx(spec, spec.theta), f"MS{spec.target_pair}")
    ions = spec.target_pair if spec.echo_y_on_targeted else spec.untargeted
    yy = kron_all(*[Y if i in ions else I2 for i in range(spec.ion_count)])
    half = _xx(spec, spec.theta / 2)
    return UnitaryOp(yy @ half @ yy @ half, f"MSecho{spec.target_pair}")


# ----------------------------------------------------------------------------
# CNOT dressing and oracle
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class GateStep:
    kind: str          # "rot" | "ms" | "rz"
    ions: tuple
    phi: float = 0.0
    theta: float = 0.0


def cnot_template(control: int, target: int, ion_count: int = 2):
    """Single-qubit dressing around one MS gate realising CNOT(control → target).

    Returns a list of :class:`GateStep` in time order.
    """
    if abs(control - target) != 1:
        raise ValueError("CNOT template needs adjacent ions")
    pair = tuple(sorted((control, target)))
    return [
        GateStep("rot", (control,), phi=HALF_PI, theta=HALF_PI),
        GateStep("ms", pair, theta=HALF_PI),
        GateStep("rot", (control,), phi=0.0, theta=-HALF_PI),
        GateStep("rot", (target,), phi=0.0, theta=-HALF_PI),
        GateStep("rot", (control,), phi=HALF_PI, theta=-HALF_PI),
    ]


def steps_unitary(steps, ion_count: int) -> np.ndarray:
    U = np.eye(2 ** ion_count, dtype=complex)
    for st in steps:
        if st.kind == "ms":
            G = ms_unitary(MsGateSpec(st.ions, st.theta, ion_count=ion_count, phase=st.phi)).matrix
        elif st.kind == "rot":
            G = embed(rotation(st.phi, st.theta).matrix, st.ions[0], ion_count)
        elif st.kind == "rz":
            G = embed(rz(st.phi).matrix, st.ions[0], ion_count)
        else:
            raise ValueError(f"unknown step kind {st.kind!r}")
        U = G @ U
    return U


def cnot_matrix(control: int, target: int, ion_count: int) -> np.ndarray:
    d = 2 ** ion_count
    U = np.zeros((d, d), dtype=complex)
    for k in range(d):
        bits = list(format(k, f"0{ion_count}b"))
        if bits[control] == "1":
            bits[target] = "1" if bits[target] == "0" else "0"
        U[int("".join(bits), 2), k] = 1
    return U


@dataclass(frozen=True)
class OracleSpec:
    """Secret string ``s`` and the register layout.

    Data bit ``s[i]`` lives on qubit ``data_positions[i]``; the ancilla sits
    at ``ancilla_index`` (the centre of the chain for n ≤ 2, appended last
    for larger ideal-path registers).
    """
    s: str
    a: int = 1
    ancilla_index: int = None

    def __post_init__(self):
        if not self.s or any(c not in "01" for c in self.s):
            raise ValueError(f"secret must be a non-empty bit string, got {self.s!r}")
        if self.a not in (0, 1):
            raise ValueError("ancilla bit must be 0 or 1")
        if self.ancilla_index is None:
            object.__setattr__(self, "ancilla_index", 1 if self.n <= 2 else self.n)
        if not 0 <= self.ancilla_index <= self.n:
            raise ValueError("ancilla_index out of range")

    @property
    def n(self) -> int:
        return len(self.s)

    @property
    def qubit_count(self) -> int:
        return self.n + 1

    @property
    def data_positions(self) -> tuple:
        return tuple(q for q in range(self.n + 1) if q != self.ancilla_index)

    def expected_output(self) -> str:
        bits = [""] * (self.n + 1)
        for i, q in enumerate(self.data_positions):
            bits[q] = self.s[i]
        bits[self.ancilla_index] = "1"
        return "".join(bits)

    def data_bits(self, basis: str) -> str:
        return "".join(basis[q] for q in self.data_positions)


def oracle_unitary(spec: OracleSpec) -> UnitaryOp:
    """Permutation ``|x, a> -> |x, a ⊕ s·x>``."""
    nq = spec.qubit_count
    d = 2 ** nq
    U = np.zeros((d, d))
    s = [int(c) for c in spec.s]
    for k in range(d):
        bits = [int(c) for c in format(k, f"0{nq}b")]
        x = [bits[q] for q in spec.data_positions]
        dot = sum(si * xi for si, xi in zip(s, x)) % 2
        bits[spec.ancilla_index] ^= dot
        U[int("".join(map(str, bits)), 2), k] = 1
    return UnitaryOp(U, f"U_s[{spec.s}]")


def oracle_from_cnots(spec: OracleSpec) -> np.ndarray:
    """The oracle as a product of CNOTs, one per set bit of ``s``."""
    nq = spec.qubit_count
    U = np.eye(2 ** nq, dtype=complex)
    for bit, q in zip(spec.s, spec.data_positions):
        if bit == "1":
            U = cnot_matrix(q, spec.ancilla_index, nq) @ U
    return U


def bv_ideal_state(spec: OracleSpec) -> np.ndarray:
    """``H^{⊗(n+1)} U_s H^{⊗(n+1)} |0…0, 1>`` with the ancilla set to 1."""
    nq = spec.qubit_count
    H = kron_all(*[hadamard().matrix] * nq)
    psi = np.zeros(2 ** nq, dtype=complex)
    bits = ["0"] * nq
    bits[spec.ancilla_index] = str(spec.a)
    psi[int("".join(bits), 2)] = 1
    return H @ oracle_unitary(spec).matrix @ H @ psi


# ----------------------------------------------------------------------------
# single-qubit Clifford group
# ----------------------------------------------------------------------------

def clifford_group_1q():
    """The 24 single-qubit Cliffords (one representative per global phase class)."""
    gens = [hadamard().matrix, np.diag([1, 1j])]
    elems = [np.eye(2, dtype=complex)]
    frontier = list(elems)
    while frontier:
        new = []
        for g in frontier:
            for h in gens:
                c = h @ g
                if not any(equal_up_to_phase(c, e) for e in elems):
                    elems.append(c)
                    new.append(c)
        frontier = new
    if len(elems) != 24:
        raise RuntimeError(f"Clifford closure produced {len(elems)} elements")
    return [UnitaryOp(_canonical_phase(e), f"C{k}") for k, e in enumerate(elems)]


def _canonical_phase(U):
    k = np.argmax(np.abs(U.ravel()) > 1e-9)
    ph = U.ravel()[k] / abs(U.ravel()[k])
    return U / ph


def clifford_table():
    """Cliffords paired with their minimal π/2-pulse decompositions."""
    from .decompose import decompose_su2
    return [(c, decompose_su2(c)) for c in clifford_group_1q()]


def clifford_index(U, group=None) -> int:
    group = group or clifford_group_1q()
    for k, c in enumerate(group):
        if equal_up_to_phase(U, c.matrix):
            return k
    raise ValueError("matrix is not a single-qubit Clifford")

