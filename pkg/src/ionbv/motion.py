"""Motional effects: thermal carrier Rabi spread, heating, spin-motion MS dynamics.

The MS integrator works in the interaction picture of the driven mode with
the bichromatic drive detuned by ``δ`` from the sidebands.  The coupling
operator for ion ``j`` is the ``Δn = -1`` component of the truncated
displacement ``Σ_{m≤k} (iη_j(a e^{-iθ} + a† e^{iθ}))^m / m!``; order 1 gives
``iη a``.  Spectator modes enter through the ``Δn = 0`` component (a
Debye-Waller factor per Fock level) and are carried as diagonal Fock
populations with classical heating rates, which keeps the state block
diagonal: ``ρ[n_spectator]`` of shape ``(spin·fock, spin·fock)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.optimize import brentq
from scipy.special import eval_genlaguerre

from .gates import HALF_PI, MsGateSpec, pb1_expand, pulse_unitary
from .quantum import I2, X, Y, DensityMatrix, average_gate_fidelity, fidelity, kron_all

#: Bath occupation used to turn a heating rate into Lindblad rates.
NBAR_ENV = 100.0


class TruncationError(RuntimeError):
    pass


# ----------------------------------------------------------------------------
# thermal carrier
# ----------------------------------------------------------------------------

def thermal_distribution(nbar, tol=1e-8):
    """Bose-Einstein populations truncated once the tail mass drops below ``tol``."""
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    if nbar == 0:
        return np.array([1.0])
    q = nbar / (1 + nbar)
    nmax = int(np.ceil(np.log(tol) / np.log(q)))
    n = np.arange(nmax + 1)
    return (1 - q) * q ** n


def rabi_factor(n, eta, reference="bare"):
    """Carrier Rabi rate of Fock level ``n`` relative to the bare rate.

    ``e^{-η²/2} L_n(η²)``; with ``reference="ground"`` the result is divided
    by the ground-state value, i.e. the π/2 time is calibrated on cold ions.
    """
    eta2 = np.asarray(eta, dtype=float) ** 2
    f = np.exp(-eta2 / 2) * eval_genlaguerre(n, 0, eta2)
    if reference == "ground":
        return f / np.exp(-eta2 / 2)
    return f


def _pb1_infidelity(scales, pulse):
    """Average-gate infidelity of ``pulse`` at each Rabi scale (vectorised)."""
    target = pulse.unitary()
    out = np.empty(len(scales))
    for k, r in enumerate(scales):
        out[k] = 1 - average_gate_fidelity(pulse.unitary(rabi_scale=r), target)
    return out


def thermal_carrier_infidelity(modes, nbar, pulse=None, com_label="COM", ions=None,
                               reference="ground", tol=1e-8):
    """Thermally averaged PB1 infidelity.

    The ``COM`` mode is set to ``nbar``; other modes keep their configured
    occupations.  The result is averaged over ``ions`` (default all).
    """
    pulse = pulse or pb1_expand(HALF_PI, 0.0, 1.0)
    modes = [m for m in modes if m.direction == "radial"] or list(modes)
    n_ions = len(modes[0].lamb_dicke)
    ions = range(n_ions) if ions is None else ions
    dists = [thermal_distribution(nbar if m.label == com_label else m.nbar, tol) for m in modes]
    # joint distribution over all modes (outer product, flattened)
    p = dists[0]
    for d in dists[1:]:
        p = np.multiply.outer(p, d)
    shape = p.shape
    p = p.ravel()
    keep = p > tol * 1e-3
    idx = np.array(np.unravel_index(np.flatnonzero(keep), shape))
    pk = p[keep]
    total = 0.0
    for i in ions:
        scale = np.ones(len(pk))
        for axis, m in enumerate(modes):
            scale *= rabi_factor(idx[axis], m.lamb_dicke[i], reference)
        # pool identical scales to save unitary evaluations
        uniq, inv = np.unique(np.round(scale, 14), return_inverse=True)
        infid = _pb1_infidelity(uniq, pulse)
        total += float(np.sum(pk * infid[inv]) / np.sum(pk))
    return total / len(ions)


def threshold_nbar(modes, target=1e-4, pulse=None, lo=0.0, hi=40.0, **kw):
    """COM occupation at which the thermal PB1 infidelity reaches ``target``."""
    f = lambda nb: thermal_carrier_infidelity(modes, nb, pulse, **kw) - target
    if f(lo) > 0:
        return lo
    if f(hi) < 0:
        return float("inf")
    return brentq(f, lo, hi, xtol=1e-3)


def heating_account(duration_s, modes):
    """Predicted occupation per mode: ``n̄ + rate · duration`` (transport assumed neutral)."""
    return {(m.direction, m.label): m.nbar + m.heating_rate * duration_s for m in modes}


# ----------------------------------------------------------------------------
# MS spin-motion dynamics
# ----------------------------------------------------------------------------

def _ladder(dim):
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def _ld_components(eta, order, dim, nsamp=16):
    """(Δn=-1, Δn=0) components of the order-truncated displacement ``e^{iη(..)}``."""
    a = _ladder(dim)
    thetas = 2 * np.pi * np.arange(nsamp) / nsamp
    comps = np.zeros((nsamp, dim, dim), dtype=complex)
    for k, th in enumerate(thetas):
        G = 1j * eta * (a * np.exp(-1j * th) + a.conj().T * np.exp(1j * th))
        term = np.eye(dim, dtype=complex)
        acc = term.copy()
        for m in range(1, order + 1):
            term = term @ G / m
            acc = acc + term
        comps[k] = acc
    # component multiplying e^{-iθ}: (1/N) Σ_k D(θ_k) e^{+iθ_k}
    lower = np.tensordot(np.exp(1j * thetas), comps, axes=1) / nsamp
    diag = comps.mean(axis=0)
    return lower, diag


def _spectator_dw(eta, order, n):
    """Δn = 0 factor of a spectator mode at Fock level ``n`` (truncated expansion)."""
    _, diag = _ld_components(eta, order, n + order + 2)
    return float(np.real(diag[n, n]))


@dataclass
class MsMotionalResult:
    state: DensityMatrix           # spin state after tracing motion
    ideal: np.ndarray              # ideal spin state vector
    bell_fidelity: float
    top_population: float          # population in the highest drive-mode Fock level
    untargeted_p1: float = None

    @property
    def infidelity(self):
        return 1 - self.bell_fidelity


def evolve_ms_motional(spec: MsGateSpec, mode, drive=None, lamb_dicke_order=1, fock_dim=12,
                       nbar=0.0, heating=False, spectator=None, crosstalk_coupling=0.0,
                       steps_per_loop=500, check_truncation=True) -> MsMotionalResult:
    """Density-matrix MS gate on one driven mode.

    Parameters
    ----------
    spec : MsGateSpec
        Pair, angle and echo choice.  With ``crosstalk_coupling > 0`` the
        untargeted ion (a third spin) is driven with that relative strength.
    mode : MotionalMode
        Driven mode; its ``heating_rate`` applies when ``heating``.
    drive : dict, optional
        ``detuning`` (rad/s), ``duration`` (s), ``rabi`` (rad/s).  Defaults
        close one loop in 160 µs with the Rabi rate giving ``spec.theta``.
    nbar : float
        Initial thermal occupation of the driven mode.
    spectator : MotionalMode, optional
        Mode carried as diagonal Fock populations (its ``nbar`` and
        ``heating_rate`` are used).
    """
    pair = spec.target_pair
    eta = np.array([mode.lamb_dicke[i] for i in pair], dtype=float)
    loops = 2 if spec.echo else 1
    drive = dict(drive or {})
    duration = drive.get("duration", 160e-6)
    delta = drive.get("detuning", 2 * np.pi * loops / duration)
    sign = -np.sign(eta[0] * eta[1])          # orientation of the generated XX phase
    spins = list(pair)
    untarg = None
    if crosstalk_coupling:
        untarg = [i for i in range(spec.ion_count) if i not in pair][0]
        spins.append(untarg)
        eta = np.append(eta, mode.lamb_dicke[untarg] * crosstalk_coupling)
    ns = len(spins)
    D = fock_dim
    sphi = np.cos(spec.phase) * X + np.sin(spec.phase) * Y
    sig = [kron_all(*[sphi if k == j else I2 for k in range(ns)]) for j in range(ns)]
    A = []
    for j in range(ns):
        lower, _ = _ld_components(abs(eta[j]), lamb_dicke_order, D)
        A.append(np.sign(eta[j]) * lower)
    # spectator: diagonal Fock populations with a Debye-Waller factor per level
    if spectator is not None:
        spec_p = thermal_distribution(spectator.nbar, 1e-5)
        spec_p = np.concatenate([spec_p, np.zeros(3)])
        nspec = len(spec_p)
        order_s = max(lamb_dicke_order, 2)
        dw = np.array([[_spectator_dw(abs(spectator.lamb_dicke[i]), order_s, n)
                        for n in range(nspec)] for i in spins])
        gamma_s = spectator.heating_rate / NBAR_ENV if heating else 0.0
    else:
        spec_p = np.array([1.0])
        nspec = 1
        dw = np.ones((ns, 1))
        gamma_s = 0.0
    # the gate is tuned on the ground-state sideband element of the pair, averaged over
    # the spectator's thermal Debye-Waller factor
    if "rabi" in drive:
        rabi = drive["rabi"]
    else:
        mean_dw = [float(np.dot(spec_p, dw[j])) for j in range(2)]
        k01 = [abs(A[j][0, 1]) * mean_dw[j] for j in range(2)]
        rabi = delta * np.sqrt(spec.theta / (2 * np.pi * loops * k01[0] * k01[1]))
    Sd = 2 ** ns
    pth = thermal_distribution(nbar, 1e-10)[:D] if nbar > 0 else np.eye(D)[0]
    pth = np.concatenate([pth, np.zeros(max(0, D - len(pth)))])[:D]
    spin0 = np.zeros((Sd, Sd), dtype=complex)
    spin0[0, 0] = 1
    rho = np.array([p * np.kron(spin0, np.diag(pth)) for p in spec_p], dtype=complex)
    a = _ladder(D)
    Id = np.eye(D)
    gamma = mode.heating_rate / NBAR_ENV if heating else 0.0
    Lops = []
    if gamma:
        Lops = [np.sqrt(gamma * NBAR_ENV) * np.kron(np.eye(Sd), a.conj().T),
                np.sqrt(gamma * (NBAR_ENV + 1)) * np.kron(np.eye(Sd), a)]
    LdL = sum((L.conj().T @ L for L in Lops), np.zeros((Sd * D, Sd * D), dtype=complex))
    g = rabi / 2
    Hlow = np.array([sum(g * dw[j, m] * np.kron(sig[j], A[j]) for j in range(ns))
                     for m in range(nspec)])
    ions_y = spec.target_pair if spec.echo_y_on_targeted else tuple(
        i for i in range(spec.ion_count) if i not in pair)
    Yecho = np.kron(kron_all(*[Y if spins[k] in ions_y else I2 for k in range(ns)]), Id)
    nidx = np.arange(nspec)[:, None, None]
    up = gamma_s * NBAR_ENV
    dn = gamma_s * (NBAR_ENV + 1)

    def rhs(t, r):
        H = Hlow * (np.exp(-1j * delta * t) * sign)
        H = H + np.conj(np.swapaxes(H, 1, 2))
        out = -1j * (H @ r - r @ H)
        for L in Lops:
            out += L @ r @ L.conj().T
        if Lops:
            out -= 0.5 * (LdL @ r + r @ LdL)
        if gamma_s:
            out -= (up * (nidx + 1) + dn * nidx) * r
            out[1:] += up * nidx[1:] * r[:-1]
            out[:-1] += dn * (nidx[:-1] + 1) * r[1:]
        return out

    steps = steps_per_loop * loops
    dt = duration / steps
    t = 0.0
    for half in range(loops):
        for _ in range(steps_per_loop):
            k1 = rhs(t, rho)
            k2 = rhs(t + dt / 2, rho + dt / 2 * k1)
            k3 = rhs(t + dt / 2, rho + dt / 2 * k2)
            k4 = rhs(t + dt, rho + dt * k3)
            rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += dt
        if spec.echo:
            rho = np.array([Yecho @ r @ Yecho.conj().T for r in rho])
    full = rho.sum(axis=0)
    # trace out the drive mode
    spin = np.einsum("aibi->ab", full.reshape(Sd, D, Sd, D))
    top = float(np.real(np.einsum("aiai->i", full.reshape(Sd, D, Sd, D))[-1]))
    if check_truncation and top > 1e-6:
        raise TruncationError(f"top Fock level holds {top:.2e}; raise fock_dim")
    spin = 0.5 * (spin + spin.conj().T)
    spin /= np.trace(spin).real
    ideal = _ideal_ms_state(spec, sign, spins, ns)
    pair_rho = spin
    untarg_p1 = None
    if untarg is not None:
        r4 = spin.reshape(2, 2, 2, 2, 2, 2)
        pair_rho = np.einsum("abkcdk->abcd", r4).reshape(4, 4)
        r_u = np.einsum("abiabj->ij", r4)
        untarg_p1 = float(np.real(r_u[1, 1]))
    state = DensityMatrix(pair_rho, 2, check=False)
    F = fidelity(state, DensityMatrix(np.outer(ideal, ideal.conj()), 2))
    return MsMotionalResult(state, ideal, float(F), top, untarg_p1)


def _ideal_ms_state(spec, sign, spins, ns):
    sphi = np.cos(spec.phase) * X + np.sin(spec.phase) * Y
    xx = np.kron(sphi, sphi)
    # the Y echo layers flip σ_φ on both echoed ions, leaving XX unchanged
    U = np.cos(spec.theta / 2) * np.eye(4) - 1j * sign * np.sin(spec.theta / 2) * xx
    psi = np.zeros(4, dtype=complex)
    psi[0] = 1
    return U @ psi


def added_ms_error(spec, drive_mode, spectator, lamb_dicke_order=3, fock_dim=12, **kw):
    """Gate error added by heating: infidelity with heating on minus heating off.

    Both runs carry the same thermal spectator, so the difference isolates
    the heating during the gate.
    """
    base = evolve_ms_motional(spec, drive_mode, lamb_dicke_order=lamb_dicke_order,
                              fock_dim=fock_dim, spectator=spectator, **kw)
    hot = evolve_ms_motional(spec, drive_mode, lamb_dicke_order=lamb_dicke_order,
                             fock_dim=fock_dim, heating=True, spectator=spectator, **kw)
    return hot.infidelity - base.infidelity, base, hot
