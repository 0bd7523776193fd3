import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from ionbv.quantum import (DensityMatrix, DimensionError, StateVector, UnitaryOp,
                           average_gate_fidelity, basis_strings, embed, equal_up_to_phase,
                           fidelity, kron_all, partial_trace, shannon_entropy, tensor, X, Y, Z)


def random_rho(rng, n):
    d = 2 ** n
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = G @ G.conj().T
    return DensityMatrix(m / np.trace(m), n)


def test_basis_ordering_msb_is_ion0():
    psi = StateVector.basis("100")
    assert psi.amplitudes[4] == 1
    assert basis_strings(2) == ["00", "01", "10", "11"]


def test_embed_acts_on_named_qubit():
    psi = StateVector.basis("00")
    out = embed(X, 0, 2) @ psi.amplitudes
    assert out[2] == 1


def test_state_validation():
    with pytest.raises(ValueError):
        StateVector(np.array([1.0, 1.0]), 1)
    with pytest.raises(DimensionError):
        StateVector(np.array([1.0, 0, 0]), 1)
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([0.5, 0.6]), 1)
    with pytest.raises(ValueError):
        UnitaryOp(np.array([[1, 1], [0, 1]]))


def test_tensor_dimension_guard():
    with pytest.raises(DimensionError):
        tensor(np.eye(2 ** 11), np.eye(2 ** 10))


def test_partial_trace_bell_is_mixed():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    r = partial_trace(StateVector(bell, 2).to_density(), [0])
    assert np.allclose(r.matrix, np.eye(2) / 2)


def test_fidelity_conventions(rng):
    a = StateVector.basis("0")
    plus = StateVector(np.array([1, 1]) / np.sqrt(2), 1)
    assert fidelity(a, plus) == pytest.approx(0.5)
    rho = random_rho(rng, 1)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
    assert fidelity(DensityMatrix.maximally_mixed(1), a.to_density()) == pytest.approx(0.5)


def test_average_gate_fidelity_known_value():
    # X against identity: process fidelity 0, average (0*2+1)/3
    assert average_gate_fidelity(X, np.eye(2)) == pytest.approx(1 / 3)


def test_entropy_and_phase_equality():
    assert shannon_entropy([0.5, 0.5]) == pytest.approx(1.0)
    assert equal_up_to_phase(1j * Z, Z)
    assert not equal_up_to_phase(Z, X)


# ---- invariants -------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_unitary_evolution_preserves_trace_and_hermiticity(seed, n):
    rng = np.random.default_rng(seed)
    rho = random_rho(rng, n)
    U = unitary_group.rvs(2 ** n, random_state=rng)
    out = rho.evolve(U).matrix
    assert abs(np.trace(out) - 1) < 1e-9
    assert np.max(np.abs(out - out.conj().T)) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_tensor_associative(seed):
    rng = np.random.default_rng(seed)
    # integer entries keep the products exact, so equality is bitwise
    a, b, c = (rng.integers(-9, 9, (2, 2)) + 1j * rng.integers(-9, 9, (2, 2)) for _ in range(3))
    assert np.array_equal(tensor(tensor(a, b), c), tensor(a, tensor(b, c)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 2), st.integers(1, 2))
def test_partial_trace_of_product(seed, na, nb):
    rng = np.random.default_rng(seed)
    A, B = random_rho(rng, na), random_rho(rng, nb)
    AB = tensor(A, B)
    assert np.max(np.abs(partial_trace(AB, range(na)).matrix - A.matrix)) < 1e-10
    assert np.max(np.abs(partial_trace(AB, range(na, na + nb)).matrix - B.matrix)) < 1e-10


def test_kron_all_matches_nested_kron():
    assert np.array_equal(kron_all(X, Y, Z), np.kron(np.kron(X, Y), Z))
