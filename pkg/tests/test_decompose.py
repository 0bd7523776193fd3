import numpy as np
import pytest
from scipy.optimize import least_squares

from conftest import haar_su2
from ionbv.decompose import DecompositionError, decompose_su2, minimal_count, sequence_unitary
from ionbv.gates import HALF_PI, clifford_group_1q, hadamard, rotation, rz
from ionbv.quantum import equal_up_to_phase


def search_oracle(U, count, free_z, starts=40, seed=3):
    """Independent feasibility check: least squares on the unitary entries."""
    rng = np.random.default_rng(seed)
    npar = count + int(free_z)

    def resid(x):
        V = sequence_unitary(x[:count], x[count] if free_z else 0.0)
        ph = np.trace(V.conj().T @ U)
        ph = ph / abs(ph) if abs(ph) > 1e-12 else 1.0
        D = V * ph - U
        return np.concatenate([D.real.ravel(), D.imag.ravel()])

    if npar == 0:
        return equal_up_to_phase(sequence_unitary([], 0.0), U, 1e-7)
    for _ in range(starts):
        r = least_squares(resid, rng.uniform(-np.pi, np.pi, npar), xtol=1e-14, ftol=1e-14)
        if np.max(np.abs(r.fun)) < 1e-7:
            return True
    return False


def certified_minimum(U, free_z=True):
    for k in range(0, 5):
        if search_oracle(U, k, free_z):
            return k
    raise AssertionError("oracle failed")


def test_identity_needs_no_pulse():
    assert decompose_su2(np.eye(2)).count == 0
    d = decompose_su2(rz(0.7).matrix)
    assert d.count == 0 and d.trailing_z == pytest.approx(0.7)


def test_half_pi_rotation_is_one_pulse():
    d = decompose_su2(rotation(0.4, HALF_PI).matrix)
    assert d.count == 1
    assert equal_up_to_phase(d.unitary(), rotation(0.4, HALF_PI).matrix)


def test_hadamard_with_free_z_is_one_pulse():
    d = decompose_su2(hadamard().matrix)
    assert d.count == 1
    assert equal_up_to_phase(d.unitary(), hadamard().matrix)


def test_exact_mode_x_gate():
    X = rotation(0, np.pi).matrix
    d = decompose_su2(X, trailing_z=False)
    assert d.count == 2 and d.trailing_z == 0.0
    assert equal_up_to_phase(d.unitary(), X)


def test_forced_count_infeasible():
    with pytest.raises(DecompositionError):
        decompose_su2(rotation(0, np.pi).matrix, count=1)


def test_rejects_wrong_shape():
    with pytest.raises(ValueError):
        decompose_su2(np.eye(4))


@pytest.mark.parametrize("free_z", [True, False])
def test_cliffords_match_search_oracle(free_z):
    for c in clifford_group_1q():
        d = decompose_su2(c.matrix, trailing_z=free_z)
        assert equal_up_to_phase(d.unitary(), c.matrix, 1e-8)
        assert d.count == certified_minimum(c.matrix, free_z)


def test_minimality_on_haar_unitaries(rng):
    # With a free z a generic element needs two pulses; fewer is possible only
    # on the measure-zero sets |U00| ∈ {0, 1} (none) or |U00|² = 1/2 (one).
    for _ in range(1000):
        U = haar_su2(rng)
        d = decompose_su2(U)
        assert equal_up_to_phase(d.unitary(), U, 1e-8)
        cert = 0 if abs(U[0, 1]) < 1e-12 else (1 if abs(abs(U[0, 0]) ** 2 - 0.5) < 1e-12 else 2)
        assert d.count <= cert


def test_exact_mode_on_random_unitaries(rng):
    for _ in range(30):
        U = haar_su2(rng)
        d = decompose_su2(U, trailing_z=False)
        assert equal_up_to_phase(d.unitary(), U, 1e-8)
        assert d.count <= 4
        assert minimal_count(U, trailing_z=False) == d.count
