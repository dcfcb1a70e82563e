import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdlab.group_core import parse_group, parse_subgroup
from qdlab.lattice_sim import (
    DEFAULT_CAP,
    PRESETS,
    DefectLine,
    Hole,
    LatticeError,
    LatticeSpec,
    LatticeState,
    Triangle,
    anyon_sector_project,
    apply_boundary_ribbon,
    apply_ribbon_fg,
    apply_ribbon_sector,
    build_terms,
    column_ribbon,
    confinement_profile,
    dump_state,
    energy,
    ground_space_dimension,
    ground_state,
    gsd_formula,
    ribbon_operator_rank,
    row_ribbon,
    spec_from_dict,
    spec_to_dict,
    verify_commuting,
    violated_terms,
)
from qdlab.qdouble import anyon_system


def spec(group, w, h, holes=(), outer="trivial", defects=(), cap=DEFAULT_CAP):
    G = parse_group(group)
    hs = [Hole(*rect, parse_subgroup(G, k)) for rect, k in holes]
    ds = [DefectLine(i, x, parse_subgroup(G, a), parse_subgroup(G, b)) for i, x, a, b in defects]
    return LatticeSpec(w, h, G, hs, ds, parse_subgroup(G, outer), cap)


# -- geometry and terms

def test_edge_indexing_is_a_bijection():
    s = spec("z2", 3, 2)
    idx = [s.h(x, y) for y in range(3) for x in range(3)] + [s.v(x, y) for y in range(2) for x in range(4)]
    assert sorted(idx) == list(range(s.n_edges))
    assert s.edge_names[s.v(1, 0)] == "v(1,0)"


def test_planar_term_counts():
    terms = build_terms(spec("z2", 2, 2))
    # rough outer boundary: only the interior vertex keeps A; perimeter edges carry T^{1}
    assert terms.counts() == {"A": 1, "B": 4, "T": 8}
    full = build_terms(spec("z2", 2, 2), keep_identity=True).counts()
    assert full["A"] == 9 and full["B"] == 4


def test_hole_edge_terms_only_on_interior_edges():
    s = spec("z2", 4, 3, holes=[((1, 0, 3, 3), "full")], outer="full", cap=2**40)
    terms = build_terms(s, keep_identity=True)
    lk = {t.name[1:] for t in terms.terms if t.kind == "L"}
    # edges strictly inside the hole; the hole border edges stay in the bulk
    inside = {f"v(2,{y})" for y in range(3)} | {f"h({x},{y})" for x in (1, 2) for y in (1, 2)}
    assert lk == inside


def test_every_term_is_a_projector_on_random_states():
    s = spec("s3", 2, 1, holes=[((0, 0, 2, 1), "z2")])
    terms = build_terms(s)
    rng = np.random.default_rng(0)
    psi = LatticeState.random(s, rng).amplitudes
    for i in range(len(terms)):
        once = terms.apply(i, psi)
        assert np.allclose(terms.apply(i, once), once, atol=1e-12)
        assert abs(np.vdot(psi, once).imag) < 1e-12


@pytest.mark.parametrize("s,tol", [
    (spec("z2", 2, 2), 1e-12),
    (spec("z2", 3, 2, holes=[((1, 1, 1, 1), "trivial")]), 1e-10),
    (spec("z3", 2, 1, holes=[((0, 0, 2, 1), "full")]), 1e-10),
    (spec("s3", 2, 1, holes=[((0, 0, 2, 1), "full")], defects=[(0, 1, "z2", "full")]), 1e-10),
    (spec("s3", 2, 1, holes=[((0, 0, 2, 1), "z3")], defects=[(0, 1, "z3", "z2")]), 1e-10),
    (spec("s3", 2, 1, outer="z2"), 1e-10),
])
def test_terms_commute(s, tol):
    assert verify_commuting(build_terms(s), trials=8) < tol


def test_genon_term_set_commutes():
    """Bilayer Z2 x Z2: a hole split into K1 = {1} x {1} and K2 = Z2 x {1}."""
    s = spec("z2xz2", 2, 1, holes=[((0, 0, 2, 1), "(trivial,trivial)")],
             defects=[(0, 1, "(trivial,trivial)", "(full,trivial)")])
    terms = build_terms(s)
    right = {t.elements for t in terms.terms if t.name in ("A(2,0)", "A(2,1)", "B(1,0)")}
    assert right == {(0, 2)}
    assert not any(t.name.startswith("A(0") for t in terms.terms)
    assert verify_commuting(terms, trials=4) < 1e-10


def test_threads_do_not_change_results():
    terms = build_terms(spec("z3", 2, 1, holes=[((0, 0, 2, 1), "full")]))
    assert verify_commuting(terms, trials=6, threads=1) == verify_commuting(terms, trials=6, threads=3)
    assert ground_space_dimension(terms, threads=1) == ground_space_dimension(terms, threads=3)


# -- ground-space dimension

def test_planar_patches_are_nondegenerate():
    for outer in ("trivial", "full"):
        assert ground_space_dimension(build_terms(spec("z2", 2, 2, outer=outer))) == 1


EXHAUSTIVE = [
    # (outer, hole rect, hole K): holes touching the perimeter share the outer K
    ("trivial", (1, 1, 1, 1), "trivial"),
    ("full", (1, 1, 1, 1), "trivial"),
    ("full", (0, 0, 1, 1), "full"),
    ("trivial", (0, 0, 1, 1), "trivial"),
    ("trivial", (1, 0, 2, 1), "trivial"),
]


@pytest.mark.parametrize("group", ["z2", "z3"])
@pytest.mark.parametrize("outer,rect,k", EXHAUSTIVE)
def test_gsd_matches_boundary_formula(group, outer, rect, k):
    s = spec(group, 2, 2, holes=[(rect, k)], outer=outer)
    assert ground_space_dimension(build_terms(s)) == gsd_formula(s)


def test_formula_refuses_mixed_perimeter_junction():
    s = spec("z2", 2, 2, holes=[((0, 0, 1, 1), "full")], outer="trivial")
    with pytest.raises(LatticeError):
        gsd_formula(s)


# -- ribbons

def test_empty_ribbon_is_delta():
    s = spec("z2", 1, 1)
    psi = LatticeState.random(s, np.random.default_rng(1))
    assert np.allclose(apply_ribbon_fg(psi, (), 1, 1).amplitudes, 0)
    assert np.allclose(apply_ribbon_fg(psi, (), 1, 0).amplitudes, psi.amplitudes)


@pytest.mark.parametrize("group", ["z3", "s3"])
def test_ribbon_gluing(group):
    s = spec(group, 3, 1) if group == "z3" else spec(group, 2, 1)
    rib = row_ribbon(s, 0, 0, s.width - 1)
    G = s.group
    psi = LatticeState.random(s, np.random.default_rng(2))
    cut = 2
    r1, r2 = rib.triangles[:cut], rib.triangles[cut:]
    for h in range(G.order):
        for g in range(G.order):
            whole = apply_ribbon_fg(psi, rib, h, g).amplitudes
            glued = np.zeros_like(whole)
            for k in range(G.order):
                ki = int(G.inv[k])
                part = apply_ribbon_fg(psi, r2, G.m(ki, h, k), G.m(ki, g))
                glued += apply_ribbon_fg(part, r1, h, k).amplitudes
            assert np.allclose(whole, glued, atol=1e-12)


@pytest.mark.parametrize("group,w,h", [("z2", 3, 1), ("z3", 3, 1), ("s3", 2, 1), ("s3", 1, 2)])
def test_ribbons_only_excite_end_cilia(group, w, h):
    s = spec(group, w, h, outer="full")
    terms = build_terms(s)
    gs = ground_state(terms)
    rib = row_ribbon(s, 0, 0, w - 1) if w > 1 else column_ribbon(s, 1, 0, h - 1)
    ends = {f"A({x},{y})" for x, y in (rib.start[0], rib.end[0])}
    ends |= {f"B({x},{y})" for x, y in (rib.start[1], rib.end[1])}
    G = s.group
    rng = np.random.default_rng(0)
    for _ in range(4):
        hh, gg = (int(v) for v in rng.integers(G.order, size=2))
        out = apply_ribbon_fg(gs, rib, hh, gg)
        if out.norm < 1e-12:
            continue
        assert set(violated_terms(terms, out.normalized())) <= ends


@pytest.mark.parametrize("group,expected", [("z2", 4), ("z3", 9), ("s3", 36)])
def test_ribbon_operator_space_dimension(group, expected):
    s = spec(group, 2, 1)
    assert ribbon_operator_rank(s, row_ribbon(s, 0, 0, 1)) == expected


def test_e_sector_ribbon_is_sigma_z_string():
    s = spec("z2", 3, 1, outer="full")
    terms = build_terms(s)
    gs = ground_state(terms)
    rib = row_ribbon(s, 0, 1, 3, closing_dual=False)
    e = anyon_system(s.group).anyons[1]
    out = apply_ribbon_sector(gs, rib, e)
    # Z on h(1,0) and h(2,0)
    Z = np.array([1, -1])
    # dim(pi)/|E| = 1/2 in front of sum_k chi(k)^-1 F^{(1,k)}
    want = 0.5 * gs.amplitudes * Z[None, :, None, None, None, None, None, None, None, None] \
        * Z[None, None, :, None, None, None, None, None, None, None]
    assert np.allclose(out.amplitudes, want, atol=1e-12)
    assert set(violated_terms(terms, out.normalized())) == {"A(1,0)", "A(3,0)"}


def test_sector_projectors_resolve_identity():
    s = spec("s3", 2, 1, outer="full")
    terms = build_terms(s)
    gs = ground_state(terms)
    rib = row_ribbon(s, 0, 0, 1)
    st_ = apply_ribbon_fg(gs, rib, 1, 3)
    cil = rib.start
    total = sum(anyon_sector_project(st_, cil, a).amplitudes for a in anyon_system(s.group).anyons)
    assert np.allclose(total, st_.amplitudes, atol=1e-12)
    vac = anyon_system(s.group).anyons[0]
    assert np.allclose(anyon_sector_project(gs, cil, vac).amplitudes, gs.amplitudes, atol=1e-12)


def test_condensation_into_rough_boundary():
    """An e string from an interior vertex to the rough edge leaves a single excitation."""
    s = spec("z2", 2, 2)
    terms = build_terms(s)
    gs = ground_state(terms)
    rib = row_ribbon(s, 1, 1, 2, closing_dual=False)
    e = anyon_system(s.group).anyons[1]
    out = apply_ribbon_sector(gs, rib, e).normalized()
    assert violated_terms(terms, out) == ["A(1,1)"]


# -- boundary ribbons and confinement

def conf_spec():
    return spec_from_dict(PRESETS["tc-confinement"])


def test_vacuum_boundary_ribbon_is_identity():
    s = conf_spec()
    terms = build_terms(s)
    gs = ground_state(terms)
    K = s.group.trivial
    out = apply_boundary_ribbon(gs, row_ribbon(s, 0, 0, 3), 0, 0, K)
    assert np.allclose(out.amplitudes, gs.amplitudes, atol=1e-12)


@given(st.integers(1, 4))
def test_confinement_counts_crossed_edges(length):
    s = conf_spec()
    terms = build_terms(s)
    rib = row_ribbon(s, 0, 0, length)
    [(dual, edges, e)] = confinement_profile(terms, [rib], 1, 0, s.group.trivial)
    assert dual == edges == length
    assert np.isclose(e, length + 2)


def test_boundary_ribbon_off_boundary_is_rejected():
    s = spec("z2", 3, 1)
    gs = ground_state(build_terms(s))
    with pytest.raises(LatticeError):
        apply_boundary_ribbon(gs, row_ribbon(s, 0, 0, 2), 1, 0, s.group.trivial)


# -- specs and io

def test_spec_round_trip():
    for name, data in PRESETS.items():
        s = spec_from_dict(data)
        assert spec_to_dict(spec_from_dict(spec_to_dict(s))) == spec_to_dict(s), name


@pytest.mark.parametrize("bad", [
    {"width": 2, "height": 2, "group": "z2", "holes": [{"rect": [0, 0, 1, 1]}, {"rect": [1, 1, 2, 2]}]},
    {"width": 2, "height": 2, "group": "z2", "holes": [{"rect": [0, 0, 3, 1]}]},
    {"width": 6, "height": 6, "group": "z2"},
    {"width": 2, "group": "z2"},
    {"width": 2, "height": 1, "group": "z2", "holes": [{"rect": [0, 0, 2, 1]}],
     "defects": [{"hole": 0, "x": 2, "left": "trivial", "right": "full"}]},
])
def test_spec_errors(bad):
    with pytest.raises(LatticeError):
        spec_from_dict(bad)


def test_ribbon_leaving_patch_is_rejected():
    s = spec("z2", 2, 1)
    with pytest.raises(LatticeError):
        row_ribbon(s, 0, 0, 2)
    with pytest.raises(LatticeError):
        apply_ribbon_fg(ground_state(build_terms(s)), (Triangle("direct", 0, -1), Triangle("direct", 1, -1)), 0, 0)


def test_dump_state_layout(tmp_path):
    s = spec("z2", 1, 1)
    gs = ground_state(build_terms(s))
    p = tmp_path / "gs.bin"
    dump_state(gs, p)
    raw = p.read_bytes()
    head, body = raw.split(b"\n", 1)
    meta = json.loads(head)
    assert meta["shape"] == [2, 2, 2, 2] and meta["layout"] == "re,im"
    vals = np.frombuffer(body, dtype="<f8")
    back = (vals[0::2] + 1j * vals[1::2]).reshape(meta["shape"])
    assert np.array_equal(back, gs.amplitudes)
