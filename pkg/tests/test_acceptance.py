"""Acceptance criteria 1-13, each at its stated tolerance and runtime budget.

A summary line per criterion is printed at the end of the pytest run.
"""
import math
import resource
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from qdlab.boundary_defect import boundary_label, condensation_map, condense, defect_types
from qdlab.group_core import parse_group, parse_subgroup
from qdlab.hopf_algebra import verify_quasi_hopf
from qdlab.lattice_sim import (
    PRESETS,
    build_terms,
    confinement_profile,
    ground_space_dimension,
    row_ribbon,
    spec_from_dict,
    verify_commuting,
)
from qdlab.mtc_data import (
    MSymbolSet,
    builtin_mtc,
    find_lagrangian_algebras,
    gauge_equivalent,
    m3j_residuals,
    parse_lagrangian,
    solve_m3j,
)
from qdlab.protocols import (
    check_universality_order6,
    dz3_universal_set,
    phase_walk_statistics,
    toric_phase_round,
)
from qdlab.qdouble import anyon_types, fusion_rules, modular_data, quantum_dim
from qdlab.wilson_ops import (
    braid_sigma2_squared,
    charge_projection,
    ground_state_basis,
    logical_subspace,
    loop_matrix,
    tunnel_matrix,
)

W = np.exp(2j * np.pi / 3)
R2 = math.sqrt(2)


@contextmanager
def budget(seconds):
    t0 = time.perf_counter()
    yield
    elapsed = time.perf_counter() - t0
    assert elapsed < seconds, f"took {elapsed:.2f}s, budget {seconds}s"


# -- 1

@pytest.mark.criterion(1, "anyon classification")
def test_anyon_classification():
    with budget(1):
        assert len(anyon_types(parse_group("z2"))) == 4
        dims = [quantum_dim(a) for a in anyon_types(parse_group("s3"))]
    assert dims == [1, 1, 2, 3, 3, 2, 2, 2]
    assert all(isinstance(d, int) for d in dims)


# -- 2

DS3_S = np.array([
    [1, 1, 2, 3, 3, 2, 2, 2],
    [1, 1, 2, -3, -3, 2, 2, 2],
    [2, 2, 4, 0, 0, -2, -2, -2],
    [3, -3, 0, 3, -3, 0, 0, 0],
    [3, -3, 0, -3, 3, 0, 0, 0],
    [2, 2, -2, 0, 0, 4, -2, -2],
    [2, 2, -2, 0, 0, -2, -2, 4],
    [2, 2, -2, 0, 0, -2, 4, -2],
]) / 6
DS3_T = np.array([1, 1, 1, 1, -1, 1, W, W * W])

DS3_FUSION = {
    "AA": "A", "AB": "B", "AC": "C", "AD": "D", "AE": "E", "AF": "F", "AG": "G", "AH": "H",
    "BB": "A", "BC": "C", "BD": "E", "BE": "D", "BF": "F", "BG": "G", "BH": "H",
    "CC": "ABC", "CD": "DE", "CE": "DE", "CF": "GH", "CG": "FH", "CH": "FG",
    "DD": "ACFGH", "DE": "BCFGH", "DF": "DE", "DG": "DE", "DH": "DE",
    "EE": "ACFGH", "EF": "DE", "EG": "DE", "EH": "DE",
    "FF": "ABF", "FG": "HC", "FH": "GC",
    "GG": "ABG", "GH": "FC",
    "HH": "ABH",
}


@pytest.mark.criterion(2, "modular data of D(S3)")
def test_modular_data():
    with budget(1):
        S, T = modular_data(parse_group("s3"))
        N = fusion_rules(S)
    assert np.abs(S - DS3_S).max() < 1e-12
    assert np.abs(np.diag(T) - DS3_T).max() < 1e-12 if np.ndim(T) == 2 else np.abs(T - DS3_T).max() < 1e-12
    labels = "ABCDEFGH"
    want = np.zeros((8, 8, 8), dtype=int)
    for pair, out in DS3_FUSION.items():
        a, b = labels.index(pair[0]), labels.index(pair[1])
        for c in out:
            want[a, b, labels.index(c)] += 1
            if a != b:
                want[b, a, labels.index(c)] += 1
    assert N.dtype.kind == "i"
    assert np.array_equal(N, want)


# -- 3

# excitation names follow the order of the computed boundary excitations
CASES = {
    "trivial": ("A+B+2C", {"A": "A", "B": "A", "C": "AA", "D": "DEF", "E": "DEF", "F": "BC",
                           "G": "BC", "H": "BC"}),
    "z2": ("A+C+D", {"A": "A", "B": "B", "C": "AB", "D": "AC", "E": "BC", "F": "C", "G": "C", "H": "C"}),
    "z3": ("A+B+2F", {"A": "A", "B": "A", "C": "BC", "D": "DEF", "E": "DEF", "F": "AA", "G": "BC",
                      "H": "BC"}),
    # F -> A + B: FPdim 2 = 1 + 1
    "full": ("A+F+D", {"A": "A", "B": "B", "C": "C", "D": "AC", "E": "BC", "F": "AB", "G": "C", "H": "C"}),
}


def _terms(label):
    return sorted(label.split("+"))


@pytest.mark.criterion(3, "boundary classification for S3")
@pytest.mark.parametrize("k", list(CASES))
def test_boundary_classification(k):
    G = parse_group("s3")
    K = parse_subgroup(G, k)
    label, table = CASES[k]
    with budget(1):
        lab = boundary_label(G, K)
        cm = condensation_map(G, K)
    assert _terms(str(lab)) == _terms(label)
    names = "ABCDEF"
    for i, a in enumerate(cm.anyons):
        got = "".join(sorted(names[j] * n for j, n in condense(G, K, i).items()))
        assert got == "".join(sorted(table[a.label])), a.label


# -- 4

@pytest.mark.criterion(4, "Lagrangian search")
@pytest.mark.parametrize("name,want", [
    ("tc", {"1+e", "1+m"}),
    ("ds3", {"A+C+D", "A+B+2C", "A+B+2F", "A+F+D"}),
    ("dz3", {"1+e+e2", "1+m+m2"}),
])
def test_lagrangian_search(name, want):
    mtc = builtin_mtc(name)
    with budget(5):
        found = find_lagrangian_algebras(mtc)
    assert {parse_lagrangian(mtc, x) for x in want} == set(found)
    assert len(found) == len(want)


# -- 5

@pytest.mark.criterion(5, "boundary defects and genons")
def test_defects():
    G = parse_group("z2")
    ds = defect_types(G, parse_subgroup(G, "trivial"), parse_subgroup(G, "full"))
    assert len(ds) == 1 and abs(ds[0].fpdim - R2) < 1e-12
    G = parse_group("s3")
    ds = defect_types(G, parse_subgroup(G, "z2"), parse_subgroup(G, "full"))
    assert len(ds) == 2 and all(abs(d.fpdim - math.sqrt(3)) < 1e-12 for d in ds)
    for g, n in (("z2", 2), ("z3", 3), ("s3", 6)):
        GG = parse_group(f"{g}x{g}")
        ds = defect_types(GG, parse_subgroup(GG, "(trivial,trivial)"), parse_subgroup(GG, "(full,trivial)"))
        assert len(ds) == n and all(abs(d.fpdim - math.sqrt(n)) < 1e-12 for d in ds)


# -- 6

@pytest.mark.criterion(6, "gate matrices")
def test_gate_matrices():
    tc = builtin_mtc("tc")
    basis = ground_state_basis(tc, ["1+e", "1+e"])
    assert np.abs(tunnel_matrix(tc, solve_m3j(tc, "1+e"), basis, "e").entries - [[0, 1], [1, 0]]).max() < 1e-9
    assert np.abs(loop_matrix(tc, basis, 2, "m").entries - np.diag([1, -1])).max() < 1e-9
    four = ground_state_basis(tc, ["1+m", "1+m", "1+e", "1+e"])
    block = braid_sigma2_squared(tc, four).restrict(logical_subspace(four))
    assert np.abs(block - np.diag([1, 1, 1, -1])).max() < 1e-9

    ds3 = builtin_mtc("ds3", "bundled")
    basis = ground_state_basis(ds3, ["A+C+D", "A+C+D"])
    ms = solve_m3j(ds3, "A+C+D")
    WC = tunnel_matrix(ds3, ms, basis, "C").entries
    WD = tunnel_matrix(ds3, ms, basis, "D").entries
    assert np.abs(WC - [[0, 1, 0], [1, 1 / R2, 0], [0, 0, R2]]).max() < 1e-9
    assert np.abs(WD - [[0, 0, 1], [0, 0, R2], [1, R2, 0]]).max() < 1e-9
    assert np.abs(loop_matrix(ds3, basis, 2, "B").entries - np.diag([1, 1, -1])).max() < 1e-9

    dz3 = builtin_mtc("dz3")
    four = ground_state_basis(dz3, ["1+m+m2", "1+m+m2", "1+e+e2", "1+e+e2"])
    block = braid_sigma2_squared(dz3, four).restrict(logical_subspace(four))
    assert np.abs(block - np.diag([1, 1, 1, 1, W, W * W, 1, W * W, W])).max() < 1e-9


# -- 7

def reference_ds3_msymbols(mtc, sign):
    """Reference A+C+D values; sign picks the +- branch."""
    A, C, D = (mtc.index(x) for x in "ACD")
    vals = {
        (A, A, A): 1, (A, C, C): 1, (C, A, C): 1, (A, D, D): 1, (D, A, D): 1,
        (C, C, A): 1 / math.sqrt(6), (C, C, C): sign * 1j / R2,
        (D, D, A): 1 / math.sqrt(6), (D, D, C): sign * 1j * math.sqrt(2 / 3),
        (C, D, D): -sign * 1j, (D, C, D): -sign * 1j,
    }
    bd = parse_lagrangian(mtc, "A+C+D")
    return MSymbolSet(mtc, bd, {k: np.array([[[v]]], dtype=complex) for k, v in vals.items()})


@pytest.mark.criterion(7, "M-3j solver")
def test_m3j_solver():
    ds3 = builtin_mtc("ds3", "bundled")
    ms = solve_m3j(ds3, "A+C+D")
    assert max(m3j_residuals(ms).values()) < 1e-9
    for name, alg in (("tc", "1+e"), ("tc", "1+m"), ("dz3", "1+e+e2"), ("dz3", "1+m+m2")):
        mtc = builtin_mtc(name)
        sol = solve_m3j(mtc, alg)
        assert max(m3j_residuals(sol).values()) < 1e-9
        assert all(np.allclose(v, 1, atol=1e-9) for _, v in sol.items())
    assert any(gauge_equivalent(ms, reference_ds3_msymbols(ds3, s)) for s in (1, -1))


# -- 8

@pytest.mark.criterion(8, "charge projection")
def test_charge_projection():
    dz3 = builtin_mtc("dz3")
    basis = ground_state_basis(dz3, ["1+e+e2", "1+e+e2"])
    ms = solve_m3j(dz3, "1+e+e2")
    P = charge_projection(dz3, basis, "arc", "e", ms).entries
    want = np.array([[1, W, W.conjugate()], [W.conjugate(), 1, W], [W, W.conjugate(), 1]]) / 3
    assert np.abs(P - want).max() < 1e-12
    assert np.abs(P @ P - P).max() < 1e-12
    v = np.array([1, W.conjugate(), W]) / math.sqrt(3)
    assert np.abs(P @ v - v).max() < 1e-12
    total = sum(charge_projection(dz3, basis, "arc", a, ms).entries for a in ("1", "e", "e2"))
    assert np.abs(total - np.eye(3)).max() < 1e-12


# -- 9

@pytest.mark.criterion(9, "universality checks")
def test_universality():
    rep = check_universality_order6()
    want = np.array([(3 - 1j * math.sqrt(7)) / 4, (3 + 1j * math.sqrt(7)) / 4])
    for key in ("eigenvalues_M", "eigenvalues_N"):
        got = sorted(rep[key], key=lambda z: z.imag)
        assert np.abs(np.array(got) - want).max() < 1e-12
    assert rep["commutator_norm"] > 0.1
    _, report = dz3_universal_set()
    errors = {k: v for k, v in report.items() if k.endswith("_error")}
    assert errors and max(errors.values()) < 1e-12, errors


# -- 10

@pytest.mark.criterion(10, "phase-gate walk")
def test_phase_walk():
    for s2 in (1, -1):
        for s3 in (1, -1):
            _, (fp, fm) = toric_phase_round(np.array([1, 1]) / R2, s2, s3)
            assert abs(fp - (1 + 1j * s2 * s3) / 4) < 1e-12
            assert abs(fm - (1 - 1j * s2 * s3) / 4) < 1e-12
    with budget(10):
        stats = phase_walk_statistics(trials=10_000, seed=0, max_rounds=64)
    assert stats["success_fraction"] >= 0.999


# -- 11

@pytest.mark.criterion(11, "quasi-Hopf verification")
@pytest.mark.parametrize("k", ["z2", "trivial"])
def test_quasi_hopf(k):
    G = parse_group("s3")
    with budget(5):
        rep = verify_quasi_hopf(G, parse_subgroup(G, k))
    assert max(rep.values()) < 1e-9, rep


# -- 12

def _max_rss_gb():
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 2 ** 20


@pytest.mark.criterion(12, "lattice commutation, degeneracy and confinement")
@pytest.mark.parametrize("preset,max_edges,gsd", [("tc-annulus", 20, 2), ("dz3-annulus", 12, 3)])
def test_lattice_degeneracy(preset, max_edges, gsd):
    spec = spec_from_dict(PRESETS[preset])
    assert spec.n_edges <= max_edges
    with budget(60):
        terms = build_terms(spec)
        assert verify_commuting(terms, trials=32) < 1e-10
        assert ground_space_dimension(terms) == gsd
    assert _max_rss_gb() < 1


@pytest.mark.criterion(12, "lattice commutation, degeneracy and confinement")
def test_lattice_confinement():
    spec = spec_from_dict(PRESETS["tc-confinement"])
    with budget(60):
        terms = build_terms(spec)
        ribbons = [row_ribbon(spec, 0, 0, n) for n in range(1, 5)]
        prof = confinement_profile(terms, ribbons, 1, 0, spec.group.trivial)
    # the ribbon state is an eigenstate, so the energy is the violated-term count
    lengths = [p[0] for p in prof]
    counts = [round(p[2]) for p in prof]
    assert all(abs(p[2] - c) < 1e-9 for p, c in zip(prof, counts))
    steps = [(c1 - c0) / (l1 - l0) for l0, l1, c0, c1 in zip(lengths, lengths[1:], counts, counts[1:])]
    assert len(set(steps)) == 1 and steps[0] >= 1
    assert _max_rss_gb() < 1


# -- 13

COMMANDS = [
    ["anyons", "s3"],
    ["modular", "s3"],
    ["fusion", "builtin:ds3", "--fr-data", "bundled"],
    ["boundary", "s3", "z2"],
    ["defects", "s3", "z2", "full"],
    ["lagrangian", "builtin:ds3"],
    ["msolve", "builtin:ds3", "A+C+D", "--fr-data", "bundled"],
    ["gate", "tunnel", "--mtc", "builtin:ds3", "--fr-data", "bundled", "--boundary", "A+C+D", "--anyon", "C"],
    ["gate", "loop", "--mtc", "builtin:ds3", "--boundary", "A+C+D", "--anyon", "B"],
    ["gate", "braid", "--mtc", "builtin:dz3", "--boundary", "1+m+m2,1+m+m2,1+e+e2,1+e+e2"],
    ["gate", "project", "--mtc", "builtin:dz3", "--boundary", "1+e+e2", "--anyon", "e"],
    ["protocol", "order6"],
    ["protocol", "dz3"],
    ["protocol", "tc-phase-walk", "--trials", "500"],
    ["hopf-check", "s3", "z2"],
    ["lattice", "check", "tc-annulus", "--trials", "4"],
    ["lattice", "gsd", "dz3-annulus"],
    ["lattice", "ribbon", "tc-confinement", "--end", "3", "--h", "g", "--boundary-k", "trivial"],
]


def _cli(argv):
    res = subprocess.run([sys.executable, "-m", "qdlab.cli", *argv], capture_output=True)
    return res.returncode, res.stdout


@pytest.mark.criterion(13, "CLI determinism")
@pytest.mark.parametrize("argv", COMMANDS, ids=lambda a: " ".join(a[:2]))
def test_cli_determinism(argv):
    for fmt in ([], ["--json"]):
        first = _cli(argv + fmt)
        assert first[0] == 0, first
        assert _cli(argv + fmt) == first
        assert _cli(argv + fmt + ["--threads", "4"]) == first
