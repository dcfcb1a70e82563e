import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdlab.group_core import (
    GroupError,
    character_table,
    conjugacy_classes,
    cyclic,
    dihedral,
    direct_product,
    double_cosets,
    from_table,
    matrix_irreps,
    parse_group,
    parse_subgroup,
    restriction_multiplicities,
    subgroup_classes,
    symmetric,
)

SMALL = ["z1", "z2", "z3", "z4", "z5", "z6", "s3", "d4", "dihedral(5)", "z2xz2", "z2xz3", "z2xs3", "s4"]
groups = st.sampled_from(SMALL).map(parse_group)


def _subgroups(G):
    return list(subgroup_classes(G))


# -- oracles: brute-force group facts

@given(groups)
def test_multiplication_table_is_a_group(G):
    mul = G.mul
    n = G.order
    assert all(sorted(row) == list(range(n)) for row in mul)
    assert all(sorted(col) == list(range(n)) for col in mul.T)
    for a, b, c in itertools.islice(itertools.product(range(n), repeat=3), 2000):
        assert mul[mul[a, b], c] == mul[a, mul[b, c]]
    assert all(mul[0, g] == g == mul[g, 0] for g in range(n))


@given(groups)
def test_classes_partition_group_and_sizes_divide_order(G):
    classes = conjugacy_classes(G)
    seen = sorted(g for c in classes for g in c.elements)
    assert seen == list(range(G.order))
    for c in classes:
        assert G.order % c.size == 0
        assert c.size * c.centralizer.order == G.order
        brute = {G.conj(h, c.representative) for h in range(G.order)}
        assert brute == set(c.elements)


@given(groups)
def test_character_table_orthogonality(G):
    tab = character_table(G)
    chi = tab.on_elements
    gram = chi @ chi.conj().T / G.order
    assert np.allclose(gram, np.eye(len(tab)), atol=1e-10)
    assert len(tab) == len(G.classes)
    assert sum(d * d for d in tab.dims) == G.order
    assert np.allclose(chi[:, 0], tab.dims)


@given(groups)
def test_matrix_irreps_are_unitary_homomorphisms_with_table_characters(G):
    tab = character_table(G)
    reps = matrix_irreps(G)
    assert len(reps) == len(tab)
    rng = np.random.default_rng(0)
    for rho in reps:
        for g in range(G.order):
            m = rho(g)
            assert np.allclose(m.conj().T @ m, np.eye(rho.dim), atol=1e-10)
        for _ in range(20):
            a, b = rng.integers(G.order, size=2)
            assert np.allclose(rho(G.m(a, b)), rho(a) @ rho(b), atol=1e-10)
        traces = np.array([np.trace(rho(g)) for g in range(G.order)])
        assert np.allclose(traces, tab.on_elements[rho.index], atol=1e-10)


@given(groups, st.data())
def test_double_cosets_partition_and_sizes(G, data):
    subs = _subgroups(G)
    K1 = data.draw(st.sampled_from(subs))
    K2 = data.draw(st.sampled_from(subs))
    cosets = double_cosets(G, K1, K2)
    assert sorted(g for T in cosets for g in T.elements) == list(range(G.order))
    for T in cosets:
        r = T.representative
        brute = {G.m(x, r, y) for x in K1.elements for y in K2.elements}
        assert brute == set(T.elements)
        # |K1 r K2| = |K1| |K2| / |K1 cap r K2 r^-1|
        assert T.size * T.stabilizer.order == K1.order * K2.order
        for g in T.elements:
            x, y = T.factor(g)
            assert G.m(x, r, int(G.inv[y])) == g


@given(groups, st.data())
def test_restriction_multiplicities_are_frobenius_reciprocity(G, data):
    H = data.draw(st.sampled_from(_subgroups(G)))
    tab = character_table(G)
    sub = character_table(H.group)
    for chi in tab.on_elements:
        mult = restriction_multiplicities(chi, H)
        rebuilt = mult @ sub.on_elements
        restricted = chi[list(H.elements)]
        assert np.allclose(rebuilt, restricted, atol=1e-9)
        assert np.all(mult >= 0)


# -- known tables

def test_s3_character_table_values():
    G = symmetric(3)
    tab = character_table(G)
    assert sorted(tab.dims) == [1, 1, 2]
    assert sorted(c.size for c in G.classes) == [1, 2, 3]


def test_named_constructors_agree():
    assert dihedral(3).order == symmetric(3).order == 6
    assert direct_product(cyclic(2), cyclic(3)).is_abelian
    assert not symmetric(3).is_abelian
    assert len(subgroup_classes(symmetric(3))) == 4


def test_parse_subgroup_forms():
    G = parse_group("s3")
    assert parse_subgroup(G, "trivial").order == 1
    assert parse_subgroup(G, "full").order == 6
    assert parse_subgroup(G, "z2").order == 2
    assert parse_subgroup(G, "z3").order == 3
    assert parse_subgroup(G, "{1,s}").order == 2
    P = parse_group("s3xs3")
    assert parse_subgroup(P, "(full,trivial)").order == 6


@pytest.mark.parametrize("text", ["nonsense", "z0", "dihedral(x)"])
def test_parse_group_rejects(text):
    with pytest.raises(GroupError):
        parse_group(text)


def test_from_table_rejects_non_group():
    with pytest.raises(GroupError):
        from_table([[0, 1], [0, 1]])


def test_parse_subgroup_rejects_missing_type():
    with pytest.raises(GroupError):
        parse_subgroup(parse_group("s3"), "z4")
