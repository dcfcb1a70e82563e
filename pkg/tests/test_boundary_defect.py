import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdlab.boundary_defect import (
    boundary_excitations,
    boundary_label,
    condensation_map,
    condensation_map_bruteforce,
    condense,
    defect_fusion_degeneracy,
    defect_types,
    dual_defect,
    uncondense,
)
from qdlab.group_core import parse_group, parse_subgroup, subgroup_classes
from qdlab.qdouble import anyon_system

GROUPS = ["z2", "z3", "z4", "s3", "z2xz2", "d4"]


@st.composite
def group_and_subgroup(draw):
    G = parse_group(draw(st.sampled_from(GROUPS)))
    K = draw(st.sampled_from(list(subgroup_classes(G))))
    return G, K


@given(group_and_subgroup())
def test_condensation_map_matches_bruteforce(gk):
    G, K = gk
    cm = condensation_map(G, K)
    assert np.array_equal(cm.coefficients, np.round(condensation_map_bruteforce(G, K)))


@given(group_and_subgroup())
def test_condensation_preserves_dimension(gk):
    """d_a = sum_x n_ax d_x with boundary excitation dimensions |K| dim R / |K^r|."""
    G, K = gk
    cm = condensation_map(G, K)
    dx = np.array([x.fpdim for x in cm.excitations])
    da = np.array([a.fpdim for a in cm.anyons])
    assert np.allclose(cm.coefficients @ dx, da)


@given(group_and_subgroup())
def test_boundary_label_is_lagrangian(gk):
    G, K = gk
    sys_ = anyon_system(G)
    lab = boundary_label(G, K)
    assert lab.check(sys_.dims, sys_.t, sys_.fusion) == []
    assert lab[0] == 1


@given(group_and_subgroup())
def test_excitation_dimensions_sum_to_group_order(gk):
    """sum_x d_x^2 = |G| for the boundary fusion category."""
    G, K = gk
    assert math.isclose(sum(x.fpdim ** 2 for x in boundary_excitations(G, K)), G.order)


@given(group_and_subgroup())
def test_uncondense_is_transpose(gk):
    G, K = gk
    cm = condensation_map(G, K)
    for j in range(len(cm.excitations)):
        col = uncondense(G, K, j)
        assert dict(col) == {i: int(n) for i, n in enumerate(cm.coefficients[:, j]) if n}


@st.composite
def group_and_two_subgroups(draw):
    G, K1 = draw(group_and_subgroup())
    K2 = draw(st.sampled_from(list(subgroup_classes(G))))
    return G, K1, K2


@given(group_and_two_subgroups())
def test_defect_dimensions_sum(gk):
    """sum_X d_X^2 = |G| for the (K1, K2) bimodule category."""
    G, K1, K2 = gk
    ds = defect_types(G, K1, K2)
    assert math.isclose(sum(d.fpdim ** 2 for d in ds), G.order)


@given(group_and_two_subgroups())
def test_defect_with_its_dual_fuses_to_vacuum_once(gk):
    G, K1, K2 = gk
    for d in defect_types(G, K1, K2):
        dd = dual_defect(d)
        assert dd.left == K2 and dd.right == K1
        assert math.isclose(dd.fpdim, d.fpdim)
        assert defect_fusion_degeneracy(G, [(K1, d), (K2, dd)]) == 1


# -- worked tables for S3 (rows A..H, columns in excitation order)

S3_CASES = {
    "trivial": ("A+B+2C", ["1", "r", "r2", "s", "sr", "sr2"],
                {"A": {"1": 1}, "B": {"1": 1}, "C": {"1": 2}, "D": {"s": 1, "sr": 1, "sr2": 1},
                 "E": {"s": 1, "sr": 1, "sr2": 1}, "F": {"r": 1, "r2": 1}, "G": {"r": 1, "r2": 1},
                 "H": {"r": 1, "r2": 1}}),
    "z2": ("A+C+D", ["1:0", "1:1", "r"],
           {"A": {"1:0": 1}, "B": {"1:1": 1}, "C": {"1:0": 1, "1:1": 1}, "D": {"1:0": 1, "r": 1},
            "E": {"1:1": 1, "r": 1}, "F": {"r": 1}, "G": {"r": 1}, "H": {"r": 1}}),
    "z3": ("A+B+2F", ["1:0", "1:1", "1:2", "s:0", "s:1", "s:2"],
           {"A": {"1:0": 1}, "B": {"1:0": 1}, "C": {"1:1": 1, "1:2": 1},
            "D": {"s:0": 1, "s:1": 1, "s:2": 1}, "E": {"s:0": 1, "s:1": 1, "s:2": 1},
            "F": {"1:0": 2}, "G": {"1:1": 1, "1:2": 1}, "H": {"1:1": 1, "1:2": 1}}),
    # F condenses to A + B: restricting the S3 irreps to Z3 gives trivial, trivial, omega + omega^2
    "full": ("A+D+F", ["1:0", "1:1", "1:2"],
             {"A": {"1:0": 1}, "B": {"1:1": 1}, "C": {"1:2": 1}, "D": {"1:0": 1, "1:2": 1},
              "E": {"1:1": 1, "1:2": 1}, "F": {"1:0": 1, "1:1": 1}, "G": {"1:2": 1}, "H": {"1:2": 1}}),
}


@pytest.mark.parametrize("k", list(S3_CASES))
def test_s3_condensation_tables(k):
    G = parse_group("s3")
    K = parse_subgroup(G, k)
    label, exc, table = S3_CASES[k]
    assert str(boundary_label(G, K)) == label
    cm = condensation_map(G, K)
    assert [x.label for x in cm.excitations] == exc
    for i, a in enumerate(cm.anyons):
        got = {exc[j]: n for j, n in condense(G, K, i).items()}
        assert got == table[a.label], a.label


def test_toric_code_boundaries():
    G = parse_group("z2")
    assert str(boundary_label(G, parse_subgroup(G, "trivial"))) == "1+e"
    assert str(boundary_label(G, parse_subgroup(G, "full"))) == "1+m"


@pytest.mark.parametrize("g", ["z2", "z3", "s3"])
def test_genon_defects(g):
    G = parse_group(f"{g}x{g}")
    K1 = parse_subgroup(G, "(trivial,trivial)")
    K2 = parse_subgroup(G, "(full,trivial)")
    ds = defect_types(G, K1, K2)
    n = parse_group(g).order
    assert len(ds) == n
    assert all(math.isclose(d.fpdim, math.sqrt(n), abs_tol=1e-12) for d in ds)


def test_z2_rough_smooth_defect():
    G = parse_group("z2")
    ds = defect_types(G, parse_subgroup(G, "trivial"), parse_subgroup(G, "full"))
    assert len(ds) == 1 and abs(ds[0].fpdim - math.sqrt(2)) < 1e-12


def test_s3_z2_full_defects():
    G = parse_group("s3")
    ds = defect_types(G, parse_subgroup(G, "z2"), parse_subgroup(G, "full"))
    assert len(ds) == 2
    assert all(abs(d.fpdim - math.sqrt(3)) < 1e-12 for d in ds)
