"""Output analysis: success probability, mutual information, Bell fidelity, error budgets."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .quantum import X, Y, Z, kron_all, shannon_entropy


@dataclass
class Histogram:
    """Outcome counts (or probabilities when ``shots == 0``) over basis strings."""
    counts: dict
    shots: int
    n: int = None
    ancilla_index: int = None

    def __post_init__(self):
        if self.shots and sum(self.counts.values()) != self.shots:
            raise ValueError("histogram counts do not sum to the shot number")

    @classmethod
    def from_probabilities(cls, probs, n, ancilla_index):
        return cls(dict(probs), 0, n, ancilla_index)

    def probabilities(self) -> dict:
        if self.shots:
            return {k: v / self.shots for k, v in self.counts.items()}
        total = sum(self.counts.values())
        return {k: v / total for k, v in self.counts.items()}


def data_bits(basis: str, ancilla_index: int) -> str:
    return basis[:ancilla_index] + basis[ancilla_index + 1:]


def success_probability(h: Histogram, s: str) -> float:
    """Probability that the data register reads ``s``, ancilla marginalised."""
    if h.n is None or h.ancilla_index is None:
        raise ValueError("histogram lacks n / ancilla_index metadata")
    if len(s) != h.n:
        raise ValueError(f"secret length {len(s)} does not match n={h.n}")
    return float(sum(p for b, p in h.probabilities().items()
                     if data_bits(b, h.ancilla_index) == s))


def data_distribution(h: Histogram) -> dict:
    """Distribution over data strings (ancilla traced out)."""
    out = {}
    for b, p in h.probabilities().items():
        k = data_bits(b, h.ancilla_index)
        out[k] = out.get(k, 0.0) + p
    return out


def classical_baseline(n: int) -> float:
    """Best single-query classical success probability, ``2^(1-n)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return 2.0 ** (1 - n)


def mutual_information(conditional: dict, prior: dict = None) -> float:
    """``I(S;X) = H(X) - Σ_s p(s) H(X|s)`` in bits.

    ``conditional`` maps each ``s`` to a distribution ``{x: p}``.
    """
    keys = sorted(conditional)
    prior = prior or {s: 1 / len(keys) for s in keys}
    ps = np.array([prior[s] for s in keys], dtype=float)
    if abs(ps.sum() - 1) > 1e-9:
        raise ValueError("prior is not normalised")
    outcomes = sorted({x for s in keys for x in conditional[s]})
    P = np.array([[conditional[s].get(x, 0.0) for x in outcomes] for s in keys], dtype=float)
    for row, s in zip(P, keys):
        if abs(row.sum() - 1) > 1e-9:
            raise ValueError(f"conditional distribution for {s!r} is not normalised")
    px = ps @ P
    hx = shannon_entropy(px / px.sum())
    hxs = sum(p * shannon_entropy(row) for p, row in zip(ps, P))
    return max(0.0, hx - hxs)


def classical_single_query(n: int) -> dict:
    """Conditional outputs of the classical strategy: read one bit, guess the rest."""
    out = {}
    for k in range(2 ** n):
        s = format(k, f"0{n}b")
        rest = 2 ** (n - 1)
        out[s] = {s[0] + format(j, f"0{n - 1}b") if n > 1 else s[0]: 1 / rest
                  for j in range(rest)}
    return out


def bell_fidelity(populations: dict, parity_contrast: float) -> float:
    """``(P00 + P11)/2 + A/2`` from populations and parity contrast."""
    p = np.array([populations[k] for k in ("00", "01", "10", "11")], dtype=float)
    if np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-6:
        raise ValueError("populations must be a normalised distribution")
    if not 0 <= parity_contrast <= 1 + 1e-9:
        raise ValueError("parity contrast must lie in [0, 1]")
    return float((p[0] + p[3]) / 2 + parity_contrast / 2)


def parity_curve(rho, phases):
    """⟨Z⊗Z⟩ after ``R_φ(π/2)`` on both qubits, for each analysis phase."""
    rho = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    ZZ = kron_all(Z, Z)
    out = []
    for phi in phases:
        a = np.cos(phi) * X + np.sin(phi) * Y
        R = np.cos(np.pi / 4) * np.eye(2) - 1j * np.sin(np.pi / 4) * a
        U = np.kron(R, R)
        out.append(float(np.real(np.trace(ZZ @ U @ rho @ U.conj().T))))
    return np.array(out)


def parity_scan(rho, phases=None) -> float:
    """Contrast of the 2φ component of the parity oscillation (least squares)."""
    phases = np.linspace(0, 2 * np.pi, 64, endpoint=False) if phases is None else np.asarray(phases)
    y = parity_curve(rho, phases)
    M = np.column_stack([np.ones_like(phases), np.cos(2 * phases), np.sin(2 * phases)])
    coef, *_ = np.linalg.lstsq(M, y, rcond=None)
    A = float(np.hypot(coef[1], coef[2]))
    if A < 1e-9:
        warnings.warn("flat parity signal; contrast set to 0")
        return 0.0
    return A


@dataclass(frozen=True)
class ErrorBudget:
    """Multiplicative, uncorrelated composition of gate fidelities."""
    f_pb1: float
    f_ms: float
    sigma_pb1: float = 0.0
    sigma_ms: float = 0.0

    def __post_init__(self):
        for v in (self.f_pb1, self.f_ms):
            if not 0 <= v <= 1:
                raise ValueError("fidelities must lie in [0, 1]")

    def predict(self, pb1_count, ms_count):
        F = self.f_pb1 ** pb1_count * self.f_ms ** ms_count
        # linear propagation of the input spreads
        dF = 0.0
        if F > 0:
            dF = F * np.hypot(pb1_count * self.sigma_pb1 / max(self.f_pb1, 1e-300),
                              ms_count * self.sigma_ms / max(self.f_ms, 1e-300))
        return float(F), float(dF)


def mean_pulses_per_clifford() -> float:
    """Average minimal π/2-pulse count of the 24 single-qubit Cliffords (free z)."""
    from .gates import clifford_table
    return float(np.mean([d.count for _, d in clifford_table()]))


def error_budget(counts: dict, fidelities: dict, mode="pi2"):
    """Predicted output fidelity ``f_pb1^pb1_count · f_ms^ms_count`` (and its spread).

    Parameters
    ----------
    counts : dict
        ``pb1_count`` and ``ms_count``.
    fidelities : dict
        ``pb1`` and ``ms`` fidelities, optional ``sigma_pb1`` / ``sigma_ms``.
    mode : {"pi2", "clifford"}
        With ``"clifford"`` the ``pb1`` entry is a per-Clifford fidelity
        and is converted to a per-pulse value as ``f^(1/m)``, where ``m`` is
        ``fidelities["pulses_per_clifford"]`` or the Clifford-group average.
    """
    f1 = fidelities.get("pb1", 1.0)
    s1 = fidelities.get("sigma_pb1", 0.0)
    if mode == "clifford":
        m = fidelities.get("pulses_per_clifford") or mean_pulses_per_clifford()
        s1 = s1 / m * f1 ** (1 / m - 1) if f1 > 0 else 0.0
        f1 = f1 ** (1 / m)
    elif mode != "pi2":
        raise ValueError(f"unknown budget mode {mode!r}")
    b = ErrorBudget(f1, fidelities.get("ms", 1.0), s1, fidelities.get("sigma_ms", 0.0))
    return b.predict(counts.get("pb1_count", 0), counts.get("ms_count", 0))


def solve_pb1_fidelity(target, pb1_count, f_ms, ms_count=1):
    """Per-π/2 fidelity ``f`` with ``f^pb1_count · f_ms^ms_count = target``."""
    return float((target / f_ms ** ms_count) ** (1 / pb1_count))


def rb_fidelity(survival, length=15):
    """Per-Clifford fidelity from single-length survival, ``survival^(1/length)``.

    This ignores SPAM and the inversion element, as in a single-length protocol.
    """
    return float(np.clip(survival, 0, 1) ** (1 / length))
