"""Minimal π/2-pulse decompositions of single-qubit unitaries.

A decomposition is a list of equatorial π/2 pulses (time order) followed by
an optional virtual z-rotation::

    U ≅ Rz(z) · R_{φ_k}(π/2) ⋯ R_{φ_1}(π/2)      (up to global phase)

With the trailing z free, every SU(2) element needs at most two pulses.
Without it (``trailing_z=False``) up to four may be needed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize

from .gates import HALF_PI, EquatorialPulse, rotation, rz
from .quantum import equal_up_to_phase

TOL = 1e-8


class DecompositionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Decomposition:
    pulses: tuple
    trailing_z: float = 0.0

    @property
    def count(self) -> int:
        return len(self.pulses)

    @property
    def phases(self):
        return [p.phi for p in self.pulses]

    def unitary(self) -> np.ndarray:
        return sequence_unitary(self.phases, self.trailing_z)


def sequence_unitary(phases, z=0.0) -> np.ndarray:
    U = np.eye(2, dtype=complex)
    for phi in phases:
        U = rotation(phi, HALF_PI).matrix @ U
    return rz(z).matrix @ U


def _wrap(a):
    return float((a + np.pi) % (2 * np.pi) - np.pi)


def _su2(U):
    U = np.asarray(U.matrix if hasattr(U, "matrix") else U, dtype=complex)
    if U.shape != (2, 2):
        raise ValueError("decompose_su2 needs a 2x2 unitary")
    return U / np.sqrt(np.linalg.det(U))


def _make(U, phases, z):
    phases = [_wrap(p) for p in phases]
    z = _wrap(z)
    if equal_up_to_phase(sequence_unitary(phases, z), U, atol=TOL):
        return Decomposition(tuple(EquatorialPulse(p, HALF_PI) for p in phases), z)
    return None


def _candidates_free_z(U, count):
    """Closed-form candidates for ``count`` ∈ {0, 1, 2} with a free trailing z."""
    a00, a11, a01, a10 = U[0, 0], U[1, 1], U[0, 1], U[1, 0]
    if count == 0:
        yield [], np.angle(a11 / a00) if abs(a00) > 1e-12 else 0.0
        return
    if count == 1:
        if abs(a00) < 1e-12 or abs(a01) < 1e-12:
            return
        z = np.angle(a11 / a00)
        base = (np.angle(a10 / a01) - z) / 2
        for phi in (base, base + np.pi):
            yield [phi], z
        return
    # two pulses: U = Rz(A) M(β) Rz(C) with M(β) = -i(cos(β/2) X + sin(β/2) Z)
    s = min(1.0, abs(a00))
    for beta in (2 * np.arcsin(s), -2 * np.arcsin(s), 2 * np.pi - 2 * np.arcsin(s)):
        apc = np.angle(-a11 / a00) if abs(a00) > 1e-12 else 0.0
        amc = np.angle(a10 / a01) if abs(a01) > 1e-12 else 0.0
        for A, C in (((apc + amc) / 2, (apc - amc) / 2),
                     ((apc + amc) / 2 + np.pi, (apc - amc) / 2 - np.pi)):
            phi1 = -C
            phi2 = phi1 - beta
            yield [phi1, phi2], A - phi2


def _numeric(U, count, free_z, starts=48, seed=1234):
    rng = np.random.default_rng(seed)
    npar = count + (1 if free_z else 0)

    def cost(x):
        V = sequence_unitary(x[:count], x[count] if free_z else 0.0)
        return 1 - abs(np.trace(V.conj().T @ U)) ** 2 / 4

    best = None
    for k in range(starts):
        x0 = rng.uniform(-np.pi, np.pi, npar)
        res = minimize(cost, x0, method="BFGS", options={"gtol": 1e-12})
        if best is None or res.fun < best.fun:
            best = res
        if res.fun < 1e-15:
            break
    if best.fun > 1e-10:
        return None

    def resid(x):
        V = sequence_unitary(x[:count], x[count] if free_z else 0.0)
        tr = np.trace(U.conj().T @ V)
        D = V * (np.conj(tr) / abs(tr)) - U
        return np.concatenate([D.real.ravel(), D.imag.ravel()])

    x = least_squares(resid, best.x, xtol=1e-15, ftol=1e-15, gtol=1e-15).x
    return _make(U, x[:count], x[count] if free_z else 0.0)


def _exact_candidates(U, count):
    a00, a11, a01, a10 = U[0, 0], U[1, 1], U[0, 1], U[1, 0]
    if count == 0:
        yield []
    elif count == 1:
        if abs(a01) > 1e-12:
            yield [np.angle(a10 / a01) / 2 + k * np.pi for k in (0,)][0:1]
            yield [np.angle(a10 / a01) / 2 + np.pi]
    elif count == 2:
        for cand, z in _candidates_free_z(U, 2):
            if abs(_wrap(z)) < 1e-7:
                yield cand


def decompose_su2(U, count=None, trailing_z=True) -> Decomposition:
    """Fewest π/2 pulses (plus optional trailing z) realising ``U``.

    ``count`` forces an exact pulse number (must be feasible).
    """
    U = _su2(U)
    counts = [count] if count is not None else range(0, 7)
    for k in counts:
        if trailing_z and k <= 2:
            for phases, z in _candidates_free_z(U, k):
                d = _make(U, phases, z)
                if d is not None:
                    return d
            if k < 2:
                continue
        if not trailing_z and k <= 2:
            for phases in _exact_candidates(U, k):
                d = _make(U, phases, 0.0)
                if d is not None:
                    return d
            if k < 2 and count is None:
                continue
        if k >= 2:
            if not trailing_z and k == 2 and count is None:
                # two exact pulses cover a measure-zero set; closed form above is complete
                continue
            d = _numeric(U, k, trailing_z)
            if d is not None:
                return d
        if count is not None:
            break
    raise DecompositionError(f"no decomposition with count={count} (trailing_z={trailing_z})")


def minimal_count(U, trailing_z=True) -> int:
    return decompose_su2(U, trailing_z=trailing_z).count
