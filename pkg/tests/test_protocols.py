import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdlab.protocols import (
    ASSUMED,
    DERIVED,
    check_universality_order6,
    dz3_universal_set,
    phase_walk_statistics,
    standard_gates,
    toric_cnot_circuit,
    toric_phase_gate_walk,
    toric_phase_round,
)


@given(st.integers(2, 6))
def test_standard_gate_relations(d):
    gs = standard_gates(d)
    H, X, Z, SUM, CZ = gs["H"], gs["X"], gs["Z"], gs["SUM"], gs["CZ"]
    w = np.exp(2j * np.pi / d)
    assert np.allclose(Z @ X, w * X @ Z)
    assert np.allclose(H @ X @ H.conj().T, Z.conj().T) or np.allclose(H @ X @ H.conj().T, Z)
    I = np.eye(d)
    assert np.allclose(CZ, np.kron(I, H) @ SUM @ np.kron(I, H.conj().T))
    assert np.allclose(np.linalg.matrix_power(SUM, d), np.eye(d * d))


def test_order6_set():
    rep = check_universality_order6()
    want = np.array([(3 - 1j * math.sqrt(7)) / 4, (3 + 1j * math.sqrt(7)) / 4])
    assert np.allclose(np.array(rep["eigenvalues_M"]), want, atol=1e-12)
    assert np.allclose(np.array(rep["eigenvalues_N"]), want, atol=1e-12)
    assert rep["commutator_norm"] > 0.1
    assert rep["passed"]


def test_dz3_gate_set_matches_wilson_operators():
    gs, rep = dz3_universal_set()
    errs = {k: v for k, v in rep.items() if k.endswith("_error")}
    assert max(errs.values()) < 1e-12, errs
    assert gs.provenance["H"] == ASSUMED
    assert all(gs.provenance[k] == DERIVED for k in ("X", "Z", "CZ", "SUM", "Q3", "M", "Flip3"))
    assert np.allclose(gs["M"], np.diag([0, 1, 1]), atol=1e-12)


@pytest.mark.parametrize("s2", [1, -1])
@pytest.mark.parametrize("s3", [1, -1])
def test_phase_round_factors(s2, s3):
    state = np.array([1, 1]) / math.sqrt(2)
    new, (f_plus, f_minus) = toric_phase_round(state, s2, s3)
    assert np.isclose(f_plus, (1 + 1j * s2 * s3) / 4)
    assert np.isclose(f_minus, (1 - 1j * s2 * s3) / 4)
    assert np.isclose(np.linalg.norm(new), 1)


def test_single_walk_ends_on_quarter_turn():
    res = toric_phase_gate_walk(seed=5)
    assert res.complete
    assert math.isclose(res.rounds[-1].net, math.pi / 2, abs_tol=1e-9)
    assert all(abs(abs(r.step) - math.pi / 2) < 1e-12 for r in res.rounds)


def test_walk_statistics_match_cycle_hitting_time():
    """Steps of +-pi/2 with probability 1/2 each: hitting +pi/2 from 0 on Z4 takes 1*3 = 3 rounds on average."""
    stats = phase_walk_statistics(trials=4000, seed=11)
    assert stats["success_fraction"] == 1.0
    assert abs(stats["mean_rounds"] - 3.0) < 0.2


def test_walk_statistics_deterministic():
    assert phase_walk_statistics(trials=300, seed=2) == phase_walk_statistics(trials=300, seed=2)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_cnot_circuit_gives_sum_for_every_outcome(p):
    SUM = standard_gates(p)["SUM"]
    for j in range(p):
        for k in range(p):
            assert np.allclose(toric_cnot_circuit(j, p, control_outcome=k).entries, SUM, atol=1e-12)


def test_cnot_circuit_rejects_bad_outcome():
    with pytest.raises(ValueError):
        toric_cnot_circuit(2, 2)
    with pytest.raises(ValueError):
        standard_gates(1)
