"""Cascade compiler: logical circuits to located PB1 pulses, MS gates and transport.

The compiler works in the lab frame.  Each ion carries a virtual-z frame
``f_i`` so that ``lab state = Rz(f_i) · logical state``; frame updates never
become physical events.  A single-qubit stage is one sweep of the chain over
every gate location.  Each location has an owner ion whose requested unitary
is completed there:

* ion ``k >= 1`` owns ``P(k-1)k``;
* ion 0 owns the end location ``E0``.

Owners are solved from the highest index down, since ion ``k`` is also
illuminated at ``Pk(k+1)`` whose pulses are fixed by ion ``k+1``.  Untargeted
ions pick up a light-shift z rotation from every pulse, which is folded into
their frames (``account_light_shifts``).

Before an MS gate the two pair ions must leave the stage with a common lab
frame; the x rotations that commute with the XX interaction (the
optimisation gates) are chosen to keep pulse counts low.
"""
from __future__ import annotations

import contextlib
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, least_squares, minimize_scalar

from .decompose import DecompositionError, decompose_su2, sequence_unitary
from .device import DeviceModel, default_device, location_sites, location_targets
from .gates import HALF_PI, OracleSpec, hadamard, rotation, rz
from .program import (CompiledProgram, CompiledSection, FrameEvent, MsEvent, PulseEvent,
                      TransportEvent)
from .quantum import X, equal_up_to_phase

log = logging.getLogger(__name__)

HOME = "D"
#: Per-section PB1 counts of the reference single-bit programme (s = 1).
REFERENCE_COUNTS = {"prep": 3, "cnot": 9, "analysis": 3}


class CompileError(RuntimeError):
    pass


def _wrap(a):
    return float((a + np.pi) % (2 * np.pi) - np.pi)


def _su2(U):
    return U / np.sqrt(np.linalg.det(U))


def _rx(g):
    return rotation(0.0, g).matrix


def _rzm(f):
    return rz(f).matrix


def _z_angle(D):
    """Angle ``a`` with ``D ≅ Rz(a)``, or None if ``D`` is not diagonal."""
    if abs(D[0, 1]) > 1e-7 or abs(D[1, 0]) > 1e-7:
        return None
    return _wrap(np.angle(D[1, 1] / D[0, 0]))


@dataclass
class FrameLedger:
    """Per-ion virtual-z frames plus the history of every update."""
    frames: list
    history: list = field(default_factory=list)

    @classmethod
    def zeros(cls, n):
        return cls([0.0] * n)

    def add(self, ion, angle, reason, section=""):
        self.frames[ion] = _wrap(self.frames[ion] + angle)
        self.history.append((section, ion, float(angle), reason))

    def set(self, ion, value, reason, section=""):
        self.add(ion, _wrap(value - self.frames[ion]), reason, section)

    def snapshot(self):
        return tuple(self.frames)


@dataclass(frozen=True)
class OptimizationGate:
    """x rotations on the MS pair that commute with the XX interaction.

    Inserted as ``O`` before the MS gate and undone after it, so the block
    unitary is unchanged while the pulse solver gains one free angle per ion.
    """
    angles: dict

    def before(self, ion):
        return _rx(self.angles.get(ion, 0.0))

    def after(self, ion):
        return _rx(-self.angles.get(ion, 0.0))


# ----------------------------------------------------------------------------
# stage solver
# ----------------------------------------------------------------------------

@dataclass
class _Request:
    target: np.ndarray
    mode: str = "free"        # "free" | "lock_first" | "lock"
    gamma: bool = False       # Rx(γ) freedom applied after the target


@dataclass
class StageResult:
    order: tuple
    pulses: dict              # location -> list of lab phases
    frames_out: tuple
    gammas: dict
    psi: float = None
    minimal_count: int = 0

    @property
    def count(self):
        return sum(len(v) for v in self.pulses.values())


def _owner(location):
    return 0 if location.startswith("E") else location_targets(location)[1]


def _owned(ion, order):
    for loc in order:
        if _owner(loc) == ion:
            return loc
    raise CompileError(f"no location owned by ion {ion}")


def _lightshift_phase(device, ion, loc):
    return 2 * np.pi * device.light_shifts.shift(ion, loc) * device.timing.t_pb1 * 1e-6


def _split_product(ion, own, order, pulses, device, account):
    """Time-ordered lab products for ``ion`` before and after location ``own``."""
    right = np.eye(2, dtype=complex)
    left = np.eye(2, dtype=complex)
    seen = False
    for loc in order:
        if loc == own:
            seen = True
            continue
        if ion in location_targets(loc):
            U = sequence_unitary(pulses[loc])
        elif account:
            U = _rzm(_lightshift_phase(device, ion, loc) * len(pulses[loc]))
        else:
            U = np.eye(2)
        if seen:
            left = U @ left
        else:
            right = U @ right
    return left, right


def _ion_product(ion, order, pulses, device, account):
    left, right = _split_product(ion, None, order, pulses, device, account)
    return right


def _roots(fn, grid):
    vals = np.array([fn(g) for g in grid])
    out = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0:
            out.append(a)
        elif fa * fb < 0:
            out.append(brentq(fn, a, b, xtol=1e-14))
    return out


def _minima(fn, grid):
    vals = np.array([fn(g) for g in grid])
    out = []
    for k in range(1, len(grid) - 1):
        if vals[k] <= vals[k - 1] and vals[k] <= vals[k + 1]:
            r = minimize_scalar(fn, bounds=(grid[k - 1], grid[k + 1]), method="bounded",
                                options={"xatol": 1e-13})
            out.append((r.fun, r.x))
    return out


_GRID = np.linspace(-np.pi, np.pi, 361)


def _family_candidates(V_fn, free_z):
    """Parameter values (sorted by |p|) giving each pulse count 0, 1, 2.

    ``V_fn(p)`` is the unitary the pulses must realise (up to a trailing z
    when ``free_z``).  Feasibility is judged on ``a = SU(2)[0, 0]``:

    * free z: 0 pulses iff |a| = 1, 1 pulse iff |a| = 1/√2, 2 always;
    * exact: 0 iff a = ±1, 1 iff a = ±1/√2, 2 iff |a|² = |Re a|.
    """
    a = lambda p: _su2(V_fn(p))[0, 0]
    b = lambda p: abs(V_fn(p)[0, 1])
    # kinked objectives so the bounded minimiser lands to ~1e-13
    if free_z:
        c1 = lambda p: abs(a(p)) ** 2 - 0.5
        cands = {0: [p for f, p in _minima(b, _GRID) if f < 1e-9],
                 1: _roots(c1, _GRID), 2: [0.0]}
    else:
        c0 = lambda p: b(p) + abs(a(p).imag)
        c1 = lambda p: abs(abs(a(p).real) - np.sqrt(0.5)) + abs(a(p).imag)
        c2 = lambda p: abs(a(p)) ** 2 - abs(a(p).real)
        cands = {0: [p for f, p in _minima(c0, _GRID) if f < 1e-9],
                 1: [p for f, p in _minima(c1, _GRID) if f < 1e-9],
                 2: _roots(c2, _GRID)}
    return {k: sorted(v, key=lambda p: (round(abs(_wrap(p)), 9), p)) for k, v in cands.items()}


def _numeric_family(V_fn, count, nparam, starts=24, seed=7):
    """Joint search over pulse phases and family parameters (exact, no z)."""
    rng = np.random.default_rng(seed)

    def resid(x):
        U = V_fn(*x[count:]) if nparam else V_fn()
        S = sequence_unitary(x[:count])
        tr = np.trace(U.conj().T @ S)
        ph = np.conj(tr) / abs(tr) if abs(tr) > 1e-12 else 1.0
        D = S * ph - U
        return np.concatenate([D.real.ravel(), D.imag.ravel()])

    best = None
    for _ in range(starts):
        x0 = rng.uniform(-np.pi, np.pi, count + nparam)
        r = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if best is None or r.cost < best.cost:
            best = r
        if r.cost < 1e-20:
            break
    if best.cost > 1e-16:
        return None
    return list(best.x[:count]), list(best.x[count:])


def _solve_owner(req, left, right, f_in, psi, force=None):
    """Pulses at the owned location; returns (phases, frame_out, gamma)."""
    B = lambda g: _rx(g) @ req.target @ _rzm(-f_in)
    a_left = _z_angle(left)
    if req.mode != "lock" and a_left is not None:
        V = lambda g: B(g) @ right.conj().T
        if req.gamma and force is None:
            for k, cands in sorted(_family_candidates(V, free_z=True).items()):
                for g in cands:
                    try:
                        d = decompose_su2(V(g), count=k, trailing_z=True)
                    except DecompositionError:
                        continue
                    return d.phases, _wrap(a_left - d.trailing_z), _wrap(g)
        d = decompose_su2(V(0.0), count=force, trailing_z=True)
        return d.phases, _wrap(a_left - d.trailing_z), 0.0
    # exact family: left · P · right ≅ Rz(f) · B(γ)
    linv = left.conj().T
    if req.mode == "lock":
        params = ["g"] if req.gamma else []
        W = (lambda g: linv @ _rzm(psi) @ B(g) @ right.conj().T) if req.gamma else \
            (lambda: linv @ _rzm(psi) @ B(0.0) @ right.conj().T)
    else:
        params = ["f"] + (["g"] if req.gamma else [])
        W = (lambda f, g: linv @ _rzm(f) @ B(g) @ right.conj().T) if req.gamma else \
            (lambda f: linv @ _rzm(f) @ B(0.0) @ right.conj().T)
    counts = [force] if force is not None else range(0, 5)
    for k in counts:
        if len(params) == 0:
            try:
                d = decompose_su2(W(), count=k, trailing_z=False)
            except DecompositionError:
                continue
            return d.phases, psi, 0.0
        if len(params) == 1 and k <= 2:
            cands = _family_candidates(W, free_z=False)[k]
            for p in cands:
                try:
                    d = decompose_su2(W(p), count=k, trailing_z=False)
                except DecompositionError:
                    continue
                return _finish(params, [p], d.phases, psi)
            continue
        sol = _numeric_family(W, k, len(params))
        if sol is not None:
            return _finish(params, sol[1], sol[0], psi)
    raise CompileError("no pulse sequence satisfies the stage constraints")


def _finish(params, values, phases, psi):
    v = dict(zip(params, values))
    return [_wrap(p) for p in phases], _wrap(v.get("f", psi if psi is not None else 0.0)), \
        _wrap(v.get("g", 0.0))


def solve_stage(requests, order, frames_in, device, account_light_shifts=True,
                force=None, pad_pairs=None, max_iter=10):
    """Pulse phases for one sweep.

    Parameters
    ----------
    requests : dict
        ion -> :class:`_Request` (logical target and frame constraints).
    order : sequence of str
        Locations in visiting order.
    force : dict, optional
        location -> exact pulse count for its owner (padding).
    pad_pairs : dict, optional
        location -> number of identity pulse pairs appended after the owner's pulses.
    """
    n = device.ion_count
    force = dict(force or {})
    pad_pairs = pad_pairs or {}
    for attempt in range(4):
        out = _iterate(requests, order, frames_in, device, account_light_shifts, force,
                       pad_pairs, max_iter)
        if isinstance(out, tuple):
            break
        # counts cycle: pin the oscillating locations to their largest count and retry
        for loc, seen in out.items():
            if len(seen) > 1:
                force[loc] = max(seen) + attempt
    else:
        raise CompileError("stage solve did not converge")
    pulses, gammas, psi = out
    frames_out = list(frames_in)
    for ion in range(n):
        lab = _ion_product(ion, order, pulses, device, account_light_shifts)
        req = requests[ion]
        D = lab @ _rzm(frames_in[ion]) @ (_rx(gammas.get(ion, 0.0)) @ req.target).conj().T
        a = _z_angle(D / np.sqrt(np.linalg.det(D)))
        if a is None:
            raise CompileError(f"stage check failed on ion {ion}")
        if req.mode in ("lock", "lock_first") and psi is not None and abs(_wrap(a - psi)) > 1e-6:
            raise CompileError(f"ion {ion} misses the common MS frame ({a:.6f} vs {psi:.6f})")
        frames_out[ion] = a
    return StageResult(tuple(order), pulses, tuple(frames_out), gammas, psi,
                       sum(len(v) for v in pulses.values()))


def _iterate(requests, order, frames_in, device, account_light_shifts, force, pad_pairs,
             max_iter):
    """Sweep the owners until pulse counts stop changing.

    Returns ``(pulses, gammas, psi)`` on convergence, else the count history.
    """
    pulses = {loc: [] for loc in order}
    gammas = {}
    prev = None
    history = {}
    for _ in range(max_iter):
        psi = None
        for ion in sorted(requests, reverse=True):
            req = requests[ion]
            own = _owned(ion, order)
            left, right = _split_product(ion, own, order, pulses, device, account_light_shifts)
            phases, f, g = _solve_owner(req, left, right, frames_in[ion], psi, force.get(own))
            if req.mode == "lock_first":
                psi = f
            gammas[ion] = g
            pulses[own] = list(phases) + [0.0, np.pi] * pad_pairs.get(own, 0)
        counts = {loc: len(v) for loc, v in pulses.items()}
        if counts == prev:
            return pulses, gammas, psi
        prev = counts
        for loc, c in counts.items():
            history.setdefault(loc, set()).add(c - 2 * pad_pairs.get(loc, 0))
    return history


# ----------------------------------------------------------------------------
# events
# ----------------------------------------------------------------------------

def _position(loc):
    if loc == HOME:
        return -1.5
    sites = location_sites(loc)
    return 0.5 * (sites[0] + sites[1])


class _Cursor:
    def __init__(self, device, start=HOME):
        self.device = device
        self.loc = start

    def move(self, dst, events):
        if dst != self.loc:
            d = abs(_position(dst) - _position(self.loc)) * self.device.chain.ion_spacing_um
            events.append(TransportEvent(self.loc, dst, self.device.timing.t_transport, float(d)))
            self.loc = dst


def _stage_events(stage, cursor, enabled, device):
    events = []
    for loc in stage.order:
        cursor.move(loc, events)
        for phi in stage.pulses[loc]:
            events.append(PulseEvent(loc, _wrap(phi), HALF_PI, device.timing.t_pb1, enabled))
    return events


def _frame_events(before, after, reason):
    return [FrameEvent(i, _wrap(b - a), reason) for i, (a, b) in enumerate(zip(before, after))
            if abs(_wrap(b - a)) > 1e-12]


def post_ms_order(device, pair_location):
    order = device.chain.gate_locations
    return (pair_location,) + tuple(l for l in order if l != pair_location)


# ----------------------------------------------------------------------------
# public compile entry points
# ----------------------------------------------------------------------------

def compile_cascade(unitaries, device=None, frames_in=None, label="cascade", enabled=True,
                    account_light_shifts=True, order=None, cursor=None, force=None,
                    pad_pairs=None):
    """Compile one single-qubit layer (one unitary or a list per ion).

    Lists are compacted by multiplication (first element applied first).
    Returns a :class:`CompiledSection`; ``frames_out`` holds the new frames.
    """
    device = device or default_device(len(unitaries))
    n = device.ion_count
    if len(unitaries) != n:
        raise ValueError(f"need one request per ion ({n})")
    targets = []
    for u in unitaries:
        seq = u if isinstance(u, (list, tuple)) else [u]
        M = np.eye(2, dtype=complex)
        for g in seq:
            M = np.asarray(getattr(g, "matrix", g), dtype=complex) @ M
        targets.append(M)
    frames_in = tuple(frames_in) if frames_in is not None else (0.0,) * n
    order = tuple(order or device.chain.gate_locations)
    reqs = {i: _Request(targets[i]) for i in range(n)}
    st = solve_stage(reqs, order, frames_in, device, account_light_shifts, force, pad_pairs)
    cursor = cursor or _Cursor(device)
    sec = CompiledSection(label, frames_in=frames_in)
    sec.events = _stage_events(st, cursor, enabled, device)
    sec.frames_out = st.frames_out if enabled else frames_in
    sec.events += _frame_events(frames_in, sec.frames_out, "stage")
    sec.minimal_pulse_count = st.count
    return sec


def _cnot_pieces(control, target):
    """Per-ion (before, after) unitaries around XX(π/2) realising CNOT."""
    ry = lambda t: rotation(HALF_PI, t).matrix
    B = {control: ry(HALF_PI), target: np.eye(2, dtype=complex)}
    A = {control: ry(-HALF_PI) @ _rx(-HALF_PI), target: _rx(-HALF_PI)}
    return B, A


def compile_cnot(control, target, device, frames_in, label="cnot", enabled=True,
                 account_light_shifts=True, cursor=None, post_force=None, post_pad=None):
    """CNOT block: pre-MS sweep, MS gate at the pair location, post-MS sweep."""
    n = device.ion_count
    pair = tuple(sorted((control, target)))
    loc = device.chain.pair_location(*pair)
    cal = device.ms_calibration(*pair)
    B, A = _cnot_pieces(control, target)
    first = max(pair)
    pre_reqs = {}
    for i in range(n):
        if i in pair:
            pre_reqs[i] = _Request(B[i], "lock_first" if i == first else "lock", gamma=True)
        else:
            pre_reqs[i] = _Request(np.eye(2, dtype=complex))
    order = device.chain.gate_locations
    pre = solve_stage(pre_reqs, order, frames_in, device, account_light_shifts)
    opt = OptimizationGate({i: pre.gammas[i] for i in pair})
    cursor = cursor or _Cursor(device)
    events = _stage_events(pre, cursor, enabled, device)
    events += _frame_events(frames_in, pre.frames_out, "stage")
    cursor.move(loc, events)
    psi = pre.psi
    events.append(MsEvent(pair, HALF_PI, _wrap(psi - cal.frame_phase), device.timing.t_ms, enabled))
    mid = list(pre.frames_out)
    for i in pair:
        mid[i] = _wrap(mid[i] + cal.lightshift_phase)
    events += _frame_events(pre.frames_out, mid, "ms")
    post_reqs = {i: _Request(A[i] @ opt.after(i) if i in pair else np.eye(2, dtype=complex))
                 for i in range(n)}
    post = solve_stage(post_reqs, post_ms_order(device, loc), tuple(mid), device,
                       account_light_shifts, post_force, post_pad)
    events += _stage_events(post, cursor, enabled, device)
    events += _frame_events(mid, post.frames_out, "stage")
    sec = CompiledSection(label, frames_in=tuple(frames_in))
    if enabled:
        sec.events = events
        sec.frames_out = post.frames_out
    else:
        sec.events = [e for e in events if e.kind != "frame"]
        sec.frames_out = tuple(frames_in)
    sec.minimal_pulse_count = pre.count + post.count
    sec.optimization = opt
    return sec


def bv_layout(n, device):
    """(data ion list, ancilla) for an n-bit oracle on ``device``."""
    chain = device.chain
    if n + 1 != chain.ion_count:
        raise ValueError(f"n={n} needs a {n + 1}-ion chain, device has {chain.ion_count}")
    return list(chain.data_ions), chain.ancilla_index


def _prep_targets(n, device):
    data, anc = bv_layout(n, device)
    H = hadamard().matrix
    return [H @ X if i == anc else H for i in range(device.ion_count)]


@contextlib.contextmanager
def _section_context(label):
    try:
        yield
    except (CompileError, DecompositionError) as exc:
        if str(exc).startswith("section "):
            raise
        raise CompileError(f"section {label}: {exc}") from exc


def compile_bv(s, device=None, pad=None, account_light_shifts=True):
    """Compile the Bernstein-Vazirani circuit for secret ``s``.

    Sections: ``prep``, one ``cnot{i}`` per data bit (lasers off when
    ``s[i] == '0'`` but transport kept), ``analysis``.  With ``pad`` (default
    on for one-bit oracles) each section is filled to the reference pulse
    counts with identity pulse pairs; see :data:`REFERENCE_COUNTS`.
    """
    spec = OracleSpec(s)
    n = spec.n
    device = device or default_device(n + 1)
    data, anc = bv_layout(n, device)
    if pad is None:
        pad = n == 1
    cursor = _Cursor(device)
    prog = CompiledProgram(n, s, device.ion_count, anc, padded=bool(pad))

    def cascade(label, targets, frames):
        sec = compile_cascade(targets, device, frames, label,
                              account_light_shifts=account_light_shifts, cursor=_Cursor(device, cursor.loc))
        if pad:
            force, pairs = _padding(sec, REFERENCE_COUNTS[label], device)
            if force or pairs:
                sec2 = compile_cascade(targets, device, frames, label,
                                       account_light_shifts=account_light_shifts,
                                       cursor=_Cursor(device, cursor.loc), force=force,
                                       pad_pairs=pairs)
                sec2.minimal_pulse_count = sec.minimal_pulse_count
                sec = sec2
        for e in sec.events:
            if e.kind == "transport":
                cursor.loc = e.dst
        return sec

    with _section_context("prep"):
        prep = cascade("prep", _prep_targets(n, device), (0.0,) * device.ion_count)
    prog.sections.append(prep)
    frames = prep.frames_out
    for i, q in enumerate(data):
        on = spec.s[i] == "1"
        kw = dict(label=f"cnot{i}", enabled=on, account_light_shifts=account_light_shifts)
        with _section_context(kw["label"]):
            sec = _compile_padded_cnot(q, anc, device, frames, cursor, pad, kw)
        for e in sec.events:
            if e.kind == "transport":
                cursor.loc = e.dst
        prog.sections.append(sec)
        frames = sec.frames_out
    H = hadamard().matrix
    with _section_context("analysis"):
        ana = cascade("analysis", [H] * device.ion_count, frames)
    prog.sections.append(ana)
    final = CompiledSection("detect", frames_in=ana.frames_out, frames_out=ana.frames_out)
    _Cursor(device, cursor.loc).move(HOME, final.events)
    prog.sections.append(final)
    if pad:
        for sec in prog.sections:
            if sec.minimal_pulse_count is not None and sec.pulse_count != sec.minimal_pulse_count:
                log.info("section %s padded from %d to %d pulses", sec.label,
                         sec.minimal_pulse_count, sec.pulse_count)
    return prog


def _compile_padded_cnot(q, anc, device, frames, cursor, pad, kw):
    sec = compile_cnot(q, anc, device, frames, cursor=_Cursor(device, cursor.loc), **kw)
    if pad:
        force, pairs = _cnot_padding(sec, REFERENCE_COUNTS["cnot"], device)
        if force or pairs:
            m = sec.minimal_pulse_count
            sec = compile_cnot(q, anc, device, frames, cursor=_Cursor(device, cursor.loc),
                               post_force=force, post_pad=pairs, **kw)
            sec.minimal_pulse_count = m
    return sec


def _padding(sec, reference, device, order=None):
    """(force, pairs) bringing a free-mode sweep up to ``reference`` pulses."""
    order = order or device.chain.gate_locations
    counts = {}
    for e in sec.events:
        if e.kind == "pb1":
            counts[e.location] = counts.get(e.location, 0) + 1
    total = sum(counts.values())
    deficit = reference - total
    if deficit < 0:
        warnings.warn(f"section {sec.label}: {total} pulses exceed reference {reference}")
        return {}, {}
    force = {}
    if deficit % 2:
        # raise one owner by a single pulse (always possible with a free z)
        loc = min(order, key=lambda l: counts.get(l, 0))
        force[loc] = counts.get(loc, 0) + 1
        deficit -= 1
    pairs = {order[0]: deficit // 2} if deficit else {}
    return force, pairs


def _cnot_padding(sec, reference, device):
    loc = None
    for e in sec.events:
        if e.kind == "ms":
            loc = device.chain.pair_location(*e.pair)
    post_order = post_ms_order(device, loc)
    seen_ms = False
    counts = {}
    total = 0
    for e in sec.events:
        if e.kind == "ms":
            seen_ms = True
        if e.kind == "pb1":
            total += 1
            if seen_ms:
                counts[e.location] = counts.get(e.location, 0) + 1
    deficit = reference - total
    if deficit <= 0:
        if deficit < 0:
            warnings.warn(f"section {sec.label}: {total} pulses exceed reference {reference}")
        return {}, {}
    force = {}
    if deficit % 2:
        l = min(post_order, key=lambda x: counts.get(x, 0))
        force[l] = counts.get(l, 0) + 1
        deficit -= 1
    pairs = {post_order[0]: deficit // 2} if deficit else {}
    return force, pairs


# ----------------------------------------------------------------------------
# transport and timing
# ----------------------------------------------------------------------------

def transport_plan(program):
    """Ordered list of moves ``(src, dst)``."""
    return [(e.src, e.dst) for e in program.transports()]


@dataclass(frozen=True)
class DurationReport:
    pulses: float
    ms: float
    transport: float
    overhead: float

    @property
    def total(self):
        return self.pulses + self.ms + self.transport + self.overhead


def duration(program, timing):
    """Wall-clock estimate in microseconds (disabled events still take time)."""
    ev = [e for e in program.events if e.kind != "frame"]
    return DurationReport(
        pulses=sum(e.duration for e in ev if e.kind == "pb1"),
        ms=sum(e.duration for e in ev if e.kind == "ms"),
        transport=sum(e.duration for e in ev if e.kind == "transport"),
        overhead=timing.t_overhead * len(ev),
    )


def calibrate_overhead(program, timing, target_us):
    """Per-event overhead making ``program`` last ``target_us``."""
    base = duration(program, timing.__class__(**{**timing.__dict__, "t_overhead": 0.0}))
    n_ev = sum(1 for e in program.events if e.kind != "frame")
    return (target_us - base.total) / n_ev
