"""Dense linear-algebra and quantum-information primitives.

Basis ordering: qubit 0 is the most significant bit, so the basis string
``"110"`` is ion0=1, ion1=1, ion2=0.  Spin⊗Fock states put the spin register
first and the motional register last.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

MAX_DIM = 2 ** 20

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
# sigma^+ maps |0> -> |1>
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)


class DimensionError(ValueError):
    pass


def _as_array(x):
    if isinstance(x, (StateVector, DensityMatrix)):
        return x.data
    if isinstance(x, UnitaryOp):
        return x.matrix
    return np.asarray(x, dtype=complex)


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    qubit_count: int
    fock_dim: int = 1

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        expected = 2 ** self.qubit_count * self.fock_dim
        if amps.size != expected:
            raise DimensionError(f"expected dimension {expected}, got {amps.size}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > 1e-10:
            raise ValueError(f"state is not normalized (norm={norm:.12g})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def data(self):
        return self.amplitudes

    @property
    def dim(self):
        return self.amplitudes.size

    @classmethod
    def basis(cls, bits: str, fock_dim: int = 1, fock: int = 0):
        q = len(bits)
        v = np.zeros(2 ** q * fock_dim, dtype=complex)
        v[int(bits, 2) * fock_dim + fock] = 1
        return cls(v, q, fock_dim)

    def to_density(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(np.outer(a, a.conj()), self.qubit_count, self.fock_dim)

    def probabilities(self):
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    qubit_count: int
    fock_dim: int = 1
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        expected = 2 ** self.qubit_count * self.fock_dim
        if m.shape != (expected, expected):
            raise DimensionError(f"expected {expected}x{expected}, got {m.shape}")
        if self.check:
            if np.max(np.abs(m - m.conj().T)) > 1e-10:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(m) - 1) > 1e-10:
                raise ValueError(f"density matrix trace is {np.trace(m).real:.12g}")
            if np.linalg.eigvalsh(m).min() < -1e-8:
                raise ValueError("density matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def data(self):
        return self.matrix

    @property
    def dim(self):
        return self.matrix.shape[0]

    @classmethod
    def maximally_mixed(cls, qubit_count: int):
        d = 2 ** qubit_count
        return cls(np.eye(d) / d, qubit_count)

    def probabilities(self):
        return np.clip(np.real(np.diag(self.matrix)), 0.0, None)

    def evolve(self, U) -> "DensityMatrix":
        u = _as_array(U)
        return DensityMatrix(u @ self.matrix @ u.conj().T, self.qubit_count, self.fock_dim)


@dataclass(frozen=True)
class UnitaryOp:
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"unitary must be square, got {m.shape}")
        if np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) > 1e-10:
            raise ValueError(f"matrix {self.label!r} is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def dag(self) -> "UnitaryOp":
        return UnitaryOp(self.matrix.conj().T, f"{self.label}^dag")

    def __matmul__(self, other):
        if isinstance(other, UnitaryOp):
            return UnitaryOp(self.matrix @ other.matrix, f"{self.label}*{other.label}")
        if isinstance(other, StateVector):
            return StateVector(self.matrix @ other.amplitudes, other.qubit_count, other.fock_dim)
        return self.matrix @ np.asarray(other)


def tensor(a, b):
    """Kronecker product with ``a`` as the more-significant factor.

    Accepts raw arrays, :class:`StateVector`, :class:`DensityMatrix` or
    :class:`UnitaryOp`; the result has the same wrapper type as ``a`` when
    both inputs share it.
    """
    A, B = _as_array(a), _as_array(b)
    dim = A.shape[0] * B.shape[0]
    if dim > MAX_DIM:
        raise DimensionError(f"tensor product dimension {dim} exceeds {MAX_DIM}")
    out = np.kron(A, B)
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        if a.fock_dim != 1:
            raise DimensionError("the motional register must be the last factor")
        return StateVector(out, a.qubit_count + b.qubit_count, b.fock_dim)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        if a.fock_dim != 1:
            raise DimensionError("the motional register must be the last factor")
        return DensityMatrix(out, a.qubit_count + b.qubit_count, b.fock_dim, check=False)
    if isinstance(a, UnitaryOp) and isinstance(b, UnitaryOp):
        return UnitaryOp(out, f"{a.label}(x){b.label}")
    return out


def kron_all(*ops):
    return reduce(np.kron, ops)


def embed(op, target: int, n: int):
    """Single-qubit ``op`` acting on qubit ``target`` of an ``n``-qubit register."""
    mats = [I2] * n
    mats[target] = np.asarray(op, dtype=complex)
    return kron_all(*mats)


def partial_trace(rho, keep, dims=None) -> DensityMatrix:
    """Reduce ``rho`` onto the subsystems listed in ``keep``.

    ``dims`` defaults to all-qubit subsystems (plus the Fock register for
    spin⊗Fock states, which is the last subsystem index).
    """
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep set must not be empty")
    m = _as_array(rho)
    if dims is None:
        if isinstance(rho, DensityMatrix):
            dims = [2] * rho.qubit_count + ([rho.fock_dim] if rho.fock_dim > 1 else [])
        else:
            n = int(round(np.log2(m.shape[0])))
            dims = [2] * n
    dims = list(dims)
    if int(np.prod(dims)) != m.shape[0]:
        raise DimensionError("subsystem dims do not match matrix size")
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    t = m.reshape(dims + dims)
    drop = [k for k in range(n) if k not in keep]
    # trace out from the highest index down so axis numbers stay valid
    for k in sorted(drop, reverse=True):
        cur = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + cur)
    kd = [dims[k] for k in keep]
    out = t.reshape(int(np.prod(kd)), int(np.prod(kd)))
    n_spin = rho.qubit_count if isinstance(rho, DensityMatrix) else n
    q = sum(1 for k in keep if k < n_spin and dims[k] == 2)
    fock = int(np.prod(kd)) // 2 ** q
    return DensityMatrix(out, q, fock, check=False)


def fidelity(a, b) -> float:
    """State fidelity in the squared-overlap convention.

    ``F(ψ, φ) = |<ψ|φ>|²``; for a pure and a mixed state ``<ψ|ρ|ψ>``; for
    two mixed states ``(Tr sqrt(sqrt(ρ) σ sqrt(ρ)))²``.
    """
    A, B = _as_array(a), _as_array(b)
    if A.shape[0] != B.shape[0]:
        raise DimensionError(f"dimension mismatch: {A.shape[0]} vs {B.shape[0]}")
    if A.ndim == 1 and B.ndim == 1:
        return float(abs(np.vdot(A, B)) ** 2)
    if A.ndim == 1:
        A, B = B, A
    if B.ndim == 1:
        return float(np.real(np.vdot(B, A @ B)))
    w, v = np.linalg.eigh(A)
    sq = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    ev = np.linalg.eigvalsh(sq @ B @ sq)
    return float(min(1.0, np.sum(np.sqrt(np.clip(ev, 0, None))) ** 2))


def average_gate_fidelity(U, V) -> float:
    """Average gate fidelity between two unitaries on dimension d."""
    U, V = _as_array(U), _as_array(V)
    d = U.shape[0]
    f_pro = abs(np.trace(V.conj().T @ U)) ** 2 / d ** 2
    return float((d * f_pro + 1) / (d + 1))


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    if np.any(p < -1e-12):
        raise ValueError("probabilities must be non-negative")
    if abs(p.sum() - 1) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum():.12g}, not 1")
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def equal_up_to_phase(U, V, atol=1e-8) -> bool:
    U, V = _as_array(U), _as_array(V)
    k = np.argmax(np.abs(V))
    idx = np.unravel_index(k, V.shape)
    if abs(U[idx]) < 1e-12:
        return False
    ph = U[idx] / V[idx]
    ph /= abs(ph)
    return bool(np.max(np.abs(U - ph * V)) < atol)


def basis_strings(n: int):
    return [format(i, f"0{n}b") for i in range(2 ** n)]
