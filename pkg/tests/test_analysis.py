import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionbv.analysis import (ErrorBudget, Histogram, bell_fidelity, classical_baseline,
                            classical_single_query, data_distribution, error_budget,
                            mean_pulses_per_clifford, mutual_information, parity_scan,
                            rb_fidelity, solve_pb1_fidelity, success_probability)
from ionbv.gates import MsGateSpec, ms_unitary
from ionbv.quantum import shannon_entropy


def bell_rho():
    psi = ms_unitary(MsGateSpec((0, 1))).matrix @ np.array([1, 0, 0, 0])
    return np.outer(psi, psi.conj())


def test_histogram_validation():
    with pytest.raises(ValueError):
        Histogram({"00": 3}, 5, 1, 1)


def test_success_probability_cases():
    ideal = Histogram({"110": 10}, 10, 2, 1)
    assert success_probability(ideal, "10") == 1.0
    uniform = Histogram.from_probabilities({format(k, "03b"): 1 / 8 for k in range(8)}, 2, 1)
    assert success_probability(uniform, "01") == pytest.approx(0.25)
    # ancilla-agnostic
    both = Histogram({"10": 3, "11": 7}, 10, 1, 1)
    assert success_probability(both, "1") == 1.0
    with pytest.raises(ValueError):
        success_probability(Histogram({"10": 1}, 1), "1")


def test_data_distribution_marginalises_ancilla():
    h = Histogram({"010": 2, "000": 2, "111": 4}, 8, 2, 1)
    assert data_distribution(h) == pytest.approx({"00": 0.5, "11": 0.5})


def test_classical_baseline():
    assert [classical_baseline(n) for n in (1, 2, 3)] == [1.0, 0.5, 0.25]
    with pytest.raises(ValueError):
        classical_baseline(0)


def test_mutual_information_cases():
    det = {s: {s: 1.0} for s in ("00", "01", "10", "11")}
    assert mutual_information(det) == pytest.approx(2.0)
    flat = {s: {x: 0.25 for x in det} for s in det}
    assert mutual_information(flat) == pytest.approx(0.0, abs=1e-12)
    for n in (1, 2, 3, 4):
        assert mutual_information(classical_single_query(n)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        mutual_information({"0": {"0": 0.7}})


def test_bell_fidelity_and_parity():
    assert bell_fidelity({"00": .5, "01": 0, "10": 0, "11": .5}, 1.0) == 1.0
    assert bell_fidelity({k: .25 for k in ("00", "01", "10", "11")}, 0.0) == 0.25
    assert parity_scan(bell_rho()) == pytest.approx(1.0, abs=1e-6)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        assert parity_scan(np.diag([1.0, 0, 0, 0])) == 0.0
        assert w


@pytest.mark.parametrize("p", [0.3, 0.75, 1.0])
def test_werner_contrast(p):
    rho = p * bell_rho() + (1 - p) * np.eye(4) / 4
    # parity contrast of a Werner state equals its Bell weight
    assert parity_scan(rho) == pytest.approx(p, abs=1e-9)


def test_error_budget():
    assert error_budget({"pb1_count": 7, "ms_count": 2}, {"pb1": 1.0, "ms": 1.0})[0] == 1.0
    assert error_budget({}, {"pb1": 0.3, "ms": 0.2})[0] == 1.0
    f = solve_pb1_fidelity(0.89, 15, 0.961)
    assert error_budget({"pb1_count": 15, "ms_count": 1}, {"pb1": f, "ms": 0.961})[0] == \
        pytest.approx(0.89, abs=1e-12)
    with pytest.raises(ValueError):
        ErrorBudget(1.2, 1.0)


def test_error_budget_clifford_mode():
    m = mean_pulses_per_clifford()
    f_c = 0.98
    a = error_budget({"pb1_count": 6}, {"pb1": f_c}, mode="clifford")[0]
    assert a == pytest.approx(f_c ** (6 / m))
    b = error_budget({"pb1_count": 6}, {"pb1": f_c, "pulses_per_clifford": 2.0}, mode="clifford")[0]
    assert b == pytest.approx(f_c ** 3)


def test_rb_fidelity():
    assert rb_fidelity(1.0) == 1.0
    assert rb_fidelity(0.5, 1) == 0.5


# ---- invariants -------------------------------------------------------------

def test_mutual_information_bounds_fuzz():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        ns, nx = rng.integers(1, 6), rng.integers(1, 6)
        prior = rng.dirichlet(np.ones(ns))
        cond = {f"s{i}": dict(zip([f"x{j}" for j in range(nx)], rng.dirichlet(np.ones(nx) * 0.5)))
                for i in range(ns)}
        pri = {f"s{i}": p for i, p in enumerate(prior)}
        mi = mutual_information(cond, pri)
        px = sum(p * np.array(list(cond[s].values())) for s, p in pri.items())
        assert -1e-12 <= mi <= min(shannon_entropy(prior), shannon_entropy(px / px.sum())) + 1e-9


@pytest.mark.parametrize("n", [1, 2, 3])
def test_uniform_model_success(n):
    nq = n + 1
    probs = {format(k, f"0{nq}b"): 1 / 2 ** nq for k in range(2 ** nq)}
    h = Histogram.from_probabilities(probs, n, 1)
    mean = np.mean([success_probability(h, format(k, f"0{n}b")) for k in range(2 ** n)])
    assert mean == pytest.approx(2.0 ** -n)


@settings(max_examples=40, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(0, 1))
def test_parity_invariant_under_global_z(a, p):
    rho = p * bell_rho() + (1 - p) * np.eye(4) / 4
    Rz = np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])
    U = np.kron(Rz, Rz)
    assert parity_scan(U @ rho @ U.conj().T) == pytest.approx(parity_scan(rho), abs=1e-9)
