"""Dense state-vector simulation of the Kitaev model with gapped boundaries.

Geometry: a width x height patch of plaquettes, vertices (x, y) with
0 <= x <= width, 0 <= y <= height. Horizontal edges point right, vertical
edges point up. A state is an array of shape (|G|,) * E whose axis i is
edge i; horizontal edges come first (row-major), then vertical ones.

Edge operators:
  L^g_+ |x> = |g x>,   L^g_- |x> = |x g^-1>,
  T^g_+ |x> = d(g, x), T^g_- |x> = d(g^-1, x).
A^g(v) uses L_- on edges leaving v and L_+ on edges entering v. The
holonomy of plaquette p based at a corner runs counterclockwise and
contributes x^-1 for an edge traversed along its orientation and x against
it, which makes A^g(base) act on it by conjugation.

Holes are vertex rectangles. A hole owns every vertex inside or on its
border, every plaquette inside, and every edge strictly inside; border edges
belong to the bulk. The outer boundary with subgroup K0 is the width-zero
limit of a K0 border ring: perimeter vertices carry A^{K0} and perimeter
edges T^{K0}, the latter being what the outside plaquettes' B^{K0} leaves
behind once the ring is traced out.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .boundary_defect import boundary_label
from .group_core import FiniteGroup, Subgroup, parse_group, parse_subgroup
from .qdouble import Anyon, anyon_system

__all__ = [
    "LatticeError",
    "Hole",
    "DefectLine",
    "LatticeSpec",
    "LatticeState",
    "Term",
    "HamiltonianTerms",
    "Triangle",
    "Ribbon",
    "build_terms",
    "verify_commuting",
    "ground_space_dimension",
    "ground_state",
    "energy",
    "violated_terms",
    "row_ribbon",
    "column_ribbon",
    "apply_ribbon_fg",
    "apply_ribbon_sector",
    "ribbon_operator_rank",
    "anyon_sector_project",
    "apply_boundary_ribbon",
    "confinement_profile",
    "gsd_formula",
    "spec_from_dict",
    "spec_to_dict",
    "PRESETS",
    "dump_state",
    "DEFAULT_CAP",
]

DEFAULT_CAP = 2 ** 24


class LatticeError(ValueError):
    """Malformed lattice specs, ribbons, or size-cap violations."""


# ---------------------------------------------------------------- spec

@dataclass(frozen=True)
class Hole:
    """Vertex rectangle [x0, x1] x [y0, y1] with boundary subgroup K."""

    x0: int
    y0: int
    x1: int
    y1: int
    K: Subgroup

    def has_vertex(self, x: int, y: int) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


@dataclass(frozen=True)
class DefectLine:
    """Vertical line x inside hole `hole`: K_left to its left, K_right to its
    right, and K_left & K_right on the line itself."""

    hole: int
    x: int
    K_left: Subgroup
    K_right: Subgroup


@dataclass(frozen=True)
class LatticeSpec:
    width: int
    height: int
    group: FiniteGroup
    holes: tuple[Hole, ...] = ()
    defects: tuple[DefectLine, ...] = ()
    outer: Subgroup | None = None      # None means the trivial subgroup
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        object.__setattr__(self, "holes", tuple(self.holes))
        object.__setattr__(self, "defects", tuple(self.defects))
        if self.width < 1 or self.height < 1:
            raise LatticeError("width and height must be positive")
        for h in self.holes:
            if h.K.parent is not self.group:
                raise LatticeError("hole subgroup belongs to a different group")
            if not (0 <= h.x0 <= h.x1 <= self.width and 0 <= h.y0 <= h.y1 <= self.height):
                raise LatticeError(f"hole {h.x0, h.y0, h.x1, h.y1} lies outside the patch")
        for a, b in itertools.combinations(self.holes, 2):
            if a.x0 <= b.x1 and b.x0 <= a.x1 and a.y0 <= b.y1 and b.y0 <= a.y1:
                raise LatticeError("holes overlap")
        seen = set()
        for d in self.defects:
            if not 0 <= d.hole < len(self.holes):
                raise LatticeError("defect line refers to a missing hole")
            if d.hole in seen:
                raise LatticeError("at most one defect line per hole")
            seen.add(d.hole)
            h = self.holes[d.hole]
            if not h.x0 < d.x < h.x1:
                raise LatticeError("defect line must run strictly inside its hole")
        if self.size > self.cap:
            raise LatticeError(
                f"|G|^E = {self.group.order}^{self.n_edges} exceeds the cap {self.cap}")

    @property
    def outer_K(self) -> Subgroup:
        return self.outer if self.outer is not None else self.group.trivial

    @property
    def n_edges(self) -> int:
        W, H = self.width, self.height
        return W * (H + 1) + H * (W + 1)

    @property
    def size(self) -> int:
        return self.group.order ** self.n_edges

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.group.order,) * self.n_edges

    def h(self, x: int, y: int) -> int:
        """Index of the horizontal edge (x, y) -> (x+1, y)."""
        return y * self.width + x

    def v(self, x: int, y: int) -> int:
        """Index of the vertical edge (x, y) -> (x, y+1)."""
        return self.width * (self.height + 1) + y * (self.width + 1) + x

    @cached_property
    def edge_names(self) -> tuple[str, ...]:
        W, H = self.width, self.height
        names = [f"h({x},{y})" for y in range(H + 1) for x in range(W)]
        names += [f"v({x},{y})" for y in range(H) for x in range(W + 1)]
        return tuple(names)

    def star(self, x: int, y: int) -> list[tuple[int, int]]:
        """(edge, sign) around vertex; sign -1 for edges leaving it."""
        W, H = self.width, self.height
        out = []
        if x < W:
            out.append((self.h(x, y), -1))
        if y < H:
            out.append((self.v(x, y), -1))
        if x > 0:
            out.append((self.h(x - 1, y), +1))
        if y > 0:
            out.append((self.v(x, y - 1), +1))
        return out

    def boundary(self, x: int, y: int) -> list[tuple[int, int]]:
        """(edge, exponent) of plaquette (x, y), counterclockwise from (x, y)."""
        return [(self.h(x, y), -1), (self.v(x + 1, y), -1),
                (self.h(x, y + 1), +1), (self.v(x, y), +1)]

    def region_of(self, kind: str, x: int, y: int) -> Subgroup | None:
        """Subgroup governing an element, or None for the bulk.

        kind is 'vertex', 'plaquette', 'hedge' or 'vedge'."""
        defect = {d.hole: d for d in self.defects}
        for i, hole in enumerate(self.holes):
            inside = _inside(hole, kind, x, y)
            if not inside:
                continue
            d = defect.get(i)
            if d is None:
                return hole.K
            lo, hi = _x_extent(kind, x)
            if lo == hi == d.x:
                return d.K_left.intersect(d.K_right)
            return d.K_left if hi <= d.x else d.K_right
        return None


def _inside(hole: Hole, kind: str, x: int, y: int) -> bool:
    if kind == "vertex":
        return hole.has_vertex(x, y)
    if kind == "plaquette":
        return hole.x0 <= x < hole.x1 and hole.y0 <= y < hole.y1
    if kind == "hedge":
        return hole.x0 <= x < hole.x1 and hole.y0 < y < hole.y1
    return hole.x0 < x < hole.x1 and hole.y0 <= y < hole.y1


def _x_extent(kind: str, x: int) -> tuple[int, int]:
    if kind in ("plaquette", "hedge"):
        return x, x + 1
    return x, x


# ---------------------------------------------------------------- terms

@dataclass(frozen=True)
class Term:
    """A projector. kind A/L average permutations over `elements`; kind B/T
    project a holonomy or edge value onto `elements`."""

    kind: str
    name: str
    support: tuple[tuple[int, int], ...]   # (edge, sign or exponent)
    elements: tuple[int, ...]
    base: int = 0                           # rotation of the plaquette loop

    @property
    def edges(self) -> tuple[int, ...]:
        return tuple(e for e, _ in self.support)


@dataclass
class HamiltonianTerms:
    spec: LatticeSpec
    terms: list[Term]

    def __len__(self) -> int:
        return len(self.terms)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for t in self.terms:
            out[t.kind] = out.get(t.kind, 0) + 1
        return out

    def apply(self, i: int, psi: np.ndarray) -> np.ndarray:
        return _apply_term(self.spec.group, self.terms[i], psi)

    def project(self, psi: np.ndarray) -> np.ndarray:
        """Product of all terms, the ground-space projector."""
        for t in self.terms:
            psi = _apply_term(self.spec.group, t, psi)
        return psi


def _perm(G: FiniteGroup, g: int, sign: int) -> np.ndarray:
    """Index map p with (L^g psi)[x] = psi[p[x]]."""
    x = np.arange(G.order)
    if sign > 0:
        return G.mul[G.inv[g], x]
    return G.mul[x, g]


def _axis_values(E: int, axis: int, n: int) -> np.ndarray:
    shape = [1] * E
    shape[axis] = n
    return np.arange(n).reshape(shape)


def _holonomy(G: FiniteGroup, E: int, support, base: int = 0) -> np.ndarray:
    """Broadcastable array of the loop product over the support edges."""
    n = G.order
    rot = list(support[base:]) + list(support[:base])
    hol = None
    for e, expo in rot:
        val = _axis_values(E, e, n)
        if expo < 0:
            val = G.inv[val]
        hol = val if hol is None else G.mul[hol, val]
    return hol


def _apply_term(G: FiniteGroup, term: Term, psi: np.ndarray) -> np.ndarray:
    E = psi.ndim
    if term.kind in ("A", "L"):
        out = np.zeros_like(psi)
        for g in term.elements:
            cur = psi
            for e, sign in term.support:
                cur = np.take(cur, _perm(G, g, sign), axis=e)
            out += cur
        out /= len(term.elements)
        return out
    if term.kind == "B":
        hol = _holonomy(G, E, term.support, term.base)
    else:
        (e, sign), = term.support
        hol = _axis_values(E, e, G.order)
        if sign < 0:
            hol = G.inv[hol]
    mask = np.isin(hol, term.elements)
    return psi * mask


def build_terms(spec: LatticeSpec, keep_identity: bool = False) -> HamiltonianTerms:
    """All projectors of the bulk, hole, defect-line and outer-boundary
    Hamiltonians. Terms equal to the identity are dropped unless asked."""
    G, W, H = spec.group, spec.width, spec.height
    full = tuple(range(G.order))
    K0 = spec.outer_K
    terms: list[Term] = []

    def add(kind, name, support, elements, base=0):
        elements = tuple(sorted(elements))
        trivial = (kind in ("A", "L") and elements == (0,)) or \
                  (kind in ("B", "T") and elements == full)
        if trivial and not keep_identity:
            return
        terms.append(Term(kind, name, tuple(support), elements, base))

    def on_perimeter(x, y):
        return x in (0, W) or y in (0, H)

    for y in range(H + 1):
        for x in range(W + 1):
            K = spec.region_of("vertex", x, y)
            if K is None and on_perimeter(x, y):
                K = K0
            els = full if K is None else K.elements
            add("A", f"A({x},{y})", spec.star(x, y), els)
    for y in range(H):
        for x in range(W):
            K = spec.region_of("plaquette", x, y)
            add("B", f"B({x},{y})", spec.boundary(x, y), (0,) if K is None else K.elements,
                _plaquette_base(spec, x, y))
    for kind, rng in (("hedge", ((x, y) for y in range(H + 1) for x in range(W))),
                      ("vedge", ((x, y) for y in range(H) for x in range(W + 1)))):
        for x, y in rng:
            e = spec.h(x, y) if kind == "hedge" else spec.v(x, y)
            name = spec.edge_names[e]
            K = spec.region_of(kind, x, y)
            if K is not None:
                add("L", f"L{name}", [(e, +1)], K.elements)
                add("T", f"T{name}", [(e, +1)], K.elements)
            elif _perimeter_edge(kind, x, y, W, H) and not _hole_border(spec, kind, x, y, K0):
                add("T", f"T{name}", [(e, +1)], K0.elements)
    return HamiltonianTerms(spec, terms)


# corner (0 BL, 1 BR, 2 TR, 3 TL) at the head of bottom, right, top, left
_HEADS = (1, 2, 2, 3)


def _plaquette_base(spec: LatticeSpec, x: int, y: int) -> int:
    """Base corner of B^K(p). For a subgroup that is not normal, B^K
    commutes with L^K(e) only when e's head is the base, so the base goes to
    the common head of the plaquette's L-carrying edges when there is one."""
    kinds = (("hedge", x, y), ("vedge", x + 1, y), ("hedge", x, y + 1), ("vedge", x, y))
    heads = {_HEADS[i] for i, (k, ex, ey) in enumerate(kinds)
             if spec.region_of(k, ex, ey) is not None}
    return heads.pop() if len(heads) == 1 else 0


def _perimeter_edge(kind, x, y, W, H) -> bool:
    if kind == "hedge":
        return y in (0, H)
    return x in (0, W)


def _hole_border(spec: LatticeSpec, kind, x, y, K0) -> bool:
    """Perimeter edge on the border of a hole with a different subgroup.
    T^{K0} there would not commute with the hole's vertex terms."""
    ends = [(x, y), (x + 1, y)] if kind == "hedge" else [(x, y), (x, y + 1)]
    regions = [spec.region_of("vertex", *p) for p in ends]
    return any(K is not None and K.elementset != K0.elementset for K in regions)


# ---------------------------------------------------------------- states

@dataclass
class LatticeState:
    spec: LatticeSpec
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != self.spec.shape:
            self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(self.spec.shape)

    @classmethod
    def basis(cls, spec: LatticeSpec, config: dict[int, int] | None = None) -> "LatticeState":
        psi = np.zeros(spec.shape, dtype=complex)
        idx = [0] * spec.n_edges
        for e, g in (config or {}).items():
            idx[e] = g
        psi[tuple(idx)] = 1.0
        return cls(spec, psi)

    @classmethod
    def random(cls, spec: LatticeSpec, rng: np.random.Generator) -> "LatticeState":
        psi = rng.standard_normal(spec.size) + 1j * rng.standard_normal(spec.size)
        return cls(spec, (psi / np.linalg.norm(psi)).reshape(spec.shape))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "LatticeState":
        n = self.norm
        if n == 0:
            raise LatticeError("cannot normalize the zero state")
        return LatticeState(self.spec, self.amplitudes / n)

    def inner(self, other: "LatticeState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _pmap(fn, items, threads: int):
    """Map in a thread pool, returning results in input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def verify_commuting(terms: HamiltonianTerms, trials: int = 32, seed: int = 0,
                     threads: int = 1) -> float:
    """Largest ||[P_i, P_j] psi|| and ||(P_i^2 - P_i) psi|| over random unit
    states. Pairs with disjoint supports are tensor factors and are skipped."""
    spec = terms.spec
    pairs = [(i, j) for i, j in itertools.combinations(range(len(terms)), 2)
             if set(terms.terms[i].edges) & set(terms.terms[j].edges)]
    seeds = np.random.SeedSequence(seed).spawn(trials)

    def one(ss):
        psi = LatticeState.random(spec, np.random.default_rng(ss)).amplitudes
        single = [terms.apply(i, psi) for i in range(len(terms))]
        worst = 0.0
        for i, s in enumerate(single):
            worst = max(worst, float(np.linalg.norm(terms.apply(i, s) - s)))
        for i, j in pairs:
            d = terms.apply(i, single[j]) - terms.apply(j, single[i])
            worst = max(worst, float(np.linalg.norm(d)))
        return worst

    return max(_pmap(one, seeds, threads), default=0.0)


def ground_space_dimension(terms: HamiltonianTerms, seed: int = 0, threads: int = 1,
                           start: int = 4, threshold: float = 1e-8) -> int:
    """Rank of the product of all projectors.

    A random orthonormal frame of r columns is projected and the singular
    values above `threshold` are counted; r doubles until the rank is
    strictly below it."""
    spec = terms.spec
    N = spec.size
    r = max(1, start)
    while True:
        rng = np.random.default_rng(np.random.SeedSequence([seed, r]))
        frame = rng.standard_normal((N, r)) + 1j * rng.standard_normal((N, r))
        frame, _ = np.linalg.qr(frame)
        cols = _pmap(lambda k: terms.project(frame[:, k].reshape(spec.shape)).ravel(),
                     range(r), threads)
        sv = np.linalg.svd(np.stack(cols, axis=1), compute_uv=False)
        rank = int(np.sum(sv > threshold))
        if rank < r or r >= N:
            return rank
        r *= 2


def ground_state(terms: HamiltonianTerms, config: dict[int, int] | None = None) -> LatticeState:
    """Normalized projection of a basis state (all edges 1 by default)."""
    spec = terms.spec
    psi = terms.project(LatticeState.basis(spec, config).amplitudes)
    return LatticeState(spec, psi).normalized()


def energy(terms: HamiltonianTerms, state: LatticeState) -> float:
    """sum_i (1 - <P_i>) for a normalized state."""
    psi = state.amplitudes
    return float(sum(1 - np.vdot(psi, terms.apply(i, psi)).real for i in range(len(terms))))


def violated_terms(terms: HamiltonianTerms, state: LatticeState, tol: float = 1e-9) -> list[str]:
    psi = state.amplitudes
    out = []
    for i, t in enumerate(terms.terms):
        if np.vdot(psi, terms.apply(i, psi)).real < 1 - tol:
            out.append(t.name)
    return out


# ---------------------------------------------------------------- ribbons

@dataclass(frozen=True)
class Triangle:
    kind: str    # 'direct' or 'dual'
    edge: int
    sign: int    # +1: L_+ / T_+, -1: L_- / T_-


@dataclass(frozen=True)
class Ribbon:
    triangles: tuple[Triangle, ...]
    start: tuple[tuple[int, int], tuple[int, int]]   # cilium (vertex, plaquette)
    end: tuple[tuple[int, int], tuple[int, int]]

    def __len__(self) -> int:
        return len(self.triangles)

    @property
    def dual_length(self) -> int:
        return sum(t.kind == "dual" for t in self.triangles)

    @property
    def edges(self) -> tuple[int, ...]:
        return tuple(t.edge for t in self.triangles)


def _check_ribbon(triangles) -> None:
    edges = [t.edge for t in triangles]
    if len(set(edges)) != len(edges):
        raise LatticeError("malformed ribbon: an edge is used twice")
    for a, b in zip(triangles, triangles[1:]):
        if a.kind == b.kind:
            raise LatticeError("malformed ribbon: triangles must alternate direct/dual")
    for t in triangles:
        if t.kind not in ("direct", "dual") or t.sign not in (1, -1):
            raise LatticeError(f"malformed triangle {t}")


def row_ribbon(spec: LatticeSpec, y: int, x_start: int, x_end: int,
               closing_dual: bool = True) -> Ribbon:
    """Ribbon whose direct path runs right along vertex row y, with the strip
    in plaquette row y. Starts at cilium ((x_start, y), (x_start, y))."""
    if not (0 <= y < spec.height and 0 <= x_start < x_end <= spec.width):
        raise LatticeError("row ribbon leaves the patch")
    if closing_dual and x_end >= spec.width:
        raise LatticeError("closing dual triangle needs a plaquette to the right")
    tris = []
    for x in range(x_start, x_end):
        tris.append(Triangle("direct", spec.h(x, y), -1))
        if x + 1 < x_end or closing_dual:
            tris.append(Triangle("dual", spec.v(x + 1, y), -1))
    last_p = (x_end, y) if closing_dual else (x_end - 1, y)
    r = Ribbon(tuple(tris), ((x_start, y), (x_start, y)), ((x_end, y), last_p))
    _check_ribbon(r.triangles)
    return r


def column_ribbon(spec: LatticeSpec, x: int, y_start: int, y_end: int,
                  closing_dual: bool = True) -> Ribbon:
    """Ribbon whose direct path runs up vertex column x, with the strip in
    plaquette column x - 1 (to the left of the path)."""
    if not (1 <= x <= spec.width and 0 <= y_start < y_end <= spec.height):
        raise LatticeError("column ribbon leaves the patch")
    if closing_dual and y_end >= spec.height:
        raise LatticeError("closing dual triangle needs a plaquette above")
    tris = []
    for y in range(y_start, y_end):
        tris.append(Triangle("direct", spec.v(x, y), -1))
        if y + 1 < y_end or closing_dual:
            tris.append(Triangle("dual", spec.h(x - 1, y + 1), +1))
    last_p = (x - 1, y_end) if closing_dual else (x - 1, y_end - 1)
    r = Ribbon(tuple(tris), ((x, y_start), (x - 1, y_start)), ((x, y_end), last_p))
    _check_ribbon(r.triangles)
    return r


def _ribbon_rec(G, psi, tris, axes, h, g, dual_elems, direct_ok, weight_of):
    """Recursive gluing on an array; `axes` gives each triangle's axis."""
    if not tris:
        return psi if g == 0 else np.zeros_like(psi)
    t, ax = tris[0], axes[0]
    if t.kind == "dual":
        out = _ribbon_rec(G, psi, tris[1:], axes[1:], h, g, dual_elems, direct_ok, weight_of)
        acc = np.zeros_like(out)
        for x in dual_elems(h):
            acc += np.take(out, _perm(G, x, t.sign), axis=ax)
        return acc * weight_of(h)
    out = np.zeros_like(psi)
    rest_axes = [a - (a > ax) for a in axes[1:]]
    for val in range(G.order):
        k = val if t.sign > 0 else int(G.inv[val])
        if not direct_ok(k):
            continue
        ki = int(G.inv[k])
        idx = (slice(None),) * ax + (val,)
        out[idx] = _ribbon_rec(G, psi[idx], tris[1:], rest_axes,
                               G.m(ki, h, k), G.m(ki, g), dual_elems, direct_ok, weight_of)
    return out


def _ribbon_array(G, psi, ribbon, h, g):
    return _ribbon_rec(G, psi, list(ribbon.triangles), [t.edge for t in ribbon.triangles],
                       h, g, lambda x: (x,), lambda k: True, lambda x: 1.0)


def apply_ribbon_fg(state: LatticeState, ribbon: Ribbon | tuple, h: int, g: int) -> LatticeState:
    """F^{(h,g)} on the ribbon; an empty ribbon gives delta_{1,g}."""
    G = state.spec.group
    tris = ribbon.triangles if isinstance(ribbon, Ribbon) else tuple(ribbon)
    _check_ribbon(tris)
    rib = Ribbon(tris, ((0, 0), (0, 0)), ((0, 0), (0, 0)))
    return LatticeState(state.spec, _ribbon_array(G, state.amplitudes, rib, h, g))


def apply_ribbon_sector(state: LatticeState, ribbon: Ribbon, anyon: Anyon,
                        u: tuple[int, int] = (0, 0), v: tuple[int, int] = (0, 0)) -> LatticeState:
    """F^{(C,pi);(u,v)} = dim(pi)/|E(C)| sum_k (Gamma_pi(k)^-1)_{jj'} F^{(c_i^-1, p_i k p_i'^-1)}."""
    from .group_core import matrix_irreps

    G = state.spec.group
    cls = anyon.cls
    E = cls.centralizer
    irr = matrix_irreps(E.group)[anyon.irrep]
    (i, j), (i2, j2) = u, v
    p_i, p_i2 = cls.transversal[i], cls.transversal[i2]
    c_i = cls.elements[i]
    out = np.zeros_like(state.amplitudes)
    for k in E.elements:
        gam = np.linalg.inv(irr(E.local[k]))[j, j2]
        if abs(gam) < 1e-15:
            continue
        gg = G.m(p_i, k, int(G.inv[p_i2]))
        out += gam * _ribbon_array(G, state.amplitudes, ribbon, int(G.inv[c_i]), gg)
    return LatticeState(state.spec, out * irr.dim / E.order)


def ribbon_operator_rank(spec: LatticeSpec, ribbon: Ribbon, tol: float = 1e-9) -> int:
    """Dimension of span{F^{(h,g)}} restricted to the ribbon's edges."""
    G = spec.group
    m = len(ribbon.triangles)
    local = Ribbon(tuple(Triangle(t.kind, i, t.sign) for i, t in enumerate(ribbon.triangles)),
                   ribbon.start, ribbon.end)
    dim = G.order ** m
    eye = np.eye(dim, dtype=complex).reshape((dim,) + (G.order,) * m)
    rows = []
    for h, g in itertools.product(range(G.order), repeat=2):
        cols = [_ribbon_array(G, eye[b], local, h, g).ravel() for b in range(dim)]
        rows.append(np.stack(cols, axis=1).ravel())
    return int(np.linalg.matrix_rank(np.array(rows), tol=tol))


def _cilium_terms(spec: LatticeSpec, cilium):
    (vx, vy), (px, py) = cilium
    corners = [(px, py), (px + 1, py), (px + 1, py + 1), (px, py + 1)]
    if (vx, vy) not in corners:
        raise LatticeError("cilium vertex is not a corner of its plaquette")
    return spec.star(vx, vy), spec.boundary(px, py), corners.index((vx, vy))


def anyon_sector_project(state: LatticeState, cilium, anyon: Anyon) -> LatticeState:
    """Projector D^{(C,pi)}(s) onto charge (C, pi) at cilium s = (v, p):
    dim(pi)/|E(C)| sum_{k in E(C)} conj(chi_pi(k)) sum_{q} B^{q r q^-1}(s) A^{q k q^-1}(v)."""
    spec, G = state.spec, state.spec.group
    star, loop, base = _cilium_terms(spec, cilium)
    cls = anyon.cls
    E = cls.centralizer
    chi = anyon.character
    psi = state.amplitudes
    hol = _holonomy(G, psi.ndim, loop, base)
    out = np.zeros_like(psi)
    for q, c in zip(cls.transversal, cls.elements):
        qi = int(G.inv[q])
        acc = np.zeros_like(psi)
        for k in E.elements:
            coef = np.conj(chi[E.local[k]])
            if abs(coef) < 1e-15:
                continue
            g = G.m(q, k, qi)
            cur = psi
            for e, sign in star:
                cur = np.take(cur, _perm(G, g, sign), axis=e)
            acc += coef * cur
        out += acc * (hol == c)
    return LatticeState(spec, out * anyon.irrep_dim / E.order)


def apply_boundary_ribbon(state: LatticeState, ribbon: Ribbon, h: int, k: int,
                          K: Subgroup) -> LatticeState:
    """Y^{(hK,k)} on a ribbon: dual triangles average L over the coset hK,
    direct triangles project onto K, glued by
    Y_{r1 r2} = sum_{j in K} Y^{(hK,j)}_{r1} Y^{(j^-1 h j K, j^-1 k)}_{r2}."""
    G = state.spec.group
    if k not in K.elementset:
        raise LatticeError("k must lie in K")
    _check_ribbon(ribbon.triangles)
    _check_on_boundary(state.spec, ribbon, K)
    coset = lambda x: tuple(G.m(x, y) for y in K.elements)   # noqa: E731
    arr = _ribbon_rec(G, state.amplitudes, list(ribbon.triangles),
                      [t.edge for t in ribbon.triangles], h, k,
                      coset, lambda j: j in K.elementset, lambda x: 1.0 / K.order)
    return LatticeState(state.spec, arr)


def _check_on_boundary(spec: LatticeSpec, ribbon: Ribbon, K: Subgroup) -> None:
    """Every dual triangle of a boundary ribbon must cross an edge of a K region."""
    for t in ribbon.triangles:
        if t.kind != "dual":
            continue
        name = spec.edge_names[t.edge]
        kind = "hedge" if name[0] == "h" else "vedge"
        x, y = (int(s) for s in name[2:-1].split(","))
        region = spec.region_of(kind, x, y)
        if region is None or region.elementset != K.elementset:
            raise LatticeError(f"ribbon not on boundary: {name} is outside the K region")


def confinement_profile(terms: HamiltonianTerms, ribbons: list[Ribbon], h: int, k: int,
                        K: Subgroup) -> list[tuple[int, int, float]]:
    """(dual length, violated edge terms, energy) for each boundary ribbon
    applied to the ground state."""
    gs = ground_state(terms)
    out = []
    for rib in ribbons:
        st = apply_boundary_ribbon(gs, rib, h, k, K)
        if st.norm < 1e-12:
            raise LatticeError("boundary ribbon annihilates the ground state")
        st = st.normalized()
        bad = violated_terms(terms, st)
        edges = sum(name[0] in "LT" for name in bad)
        out.append((rib.dual_length, edges, energy(terms, st)))
    return out


# ---------------------------------------------------------------- formula

def gsd_formula(spec: LatticeSpec) -> int:
    """dim Hom(1, A_0 (x) A_1 (x) ...) over the outer boundary and all holes,
    the count for a sphere with that many holes."""
    if spec.defects:
        raise LatticeError("the formula covers holes without defect lines")
    for hole in spec.holes:
        touches = hole.x0 == 0 or hole.y0 == 0 or hole.x1 == spec.width or hole.y1 == spec.height
        if touches and hole.K.elementset != spec.outer_K.elementset:
            raise LatticeError("a hole touching the perimeter must share the outer subgroup; "
                               "the junctions would carry boundary defects")
    G = spec.group
    sys_ = anyon_system(G)
    N = np.asarray(sys_.fusion)
    vec = np.array(boundary_label(G, spec.outer_K).multiplicities, dtype=np.int64)
    for hole in spec.holes:
        n = np.array(boundary_label(G, hole.K).multiplicities, dtype=np.int64)
        vec = np.einsum("a,b,abc->c", vec, n, N)
    return int(vec[0])


# ---------------------------------------------------------------- io

def spec_from_dict(data: dict, cap: int = DEFAULT_CAP) -> LatticeSpec:
    """Build a spec from {"width", "height", "group", "outer", "holes":
    [{"rect": [x0, y0, x1, y1], "K": ...}], "defects": [{"hole", "x",
    "left", "right"}]}. Subgroups use parse_subgroup syntax."""
    try:
        G = parse_group(str(data["group"]))
        holes = [Hole(*map(int, h["rect"]), parse_subgroup(G, str(h.get("K", "trivial"))))
                 for h in data.get("holes", [])]
        defects = [DefectLine(int(d["hole"]), int(d["x"]), parse_subgroup(G, str(d["left"])),
                              parse_subgroup(G, str(d["right"])))
                   for d in data.get("defects", [])]
        outer = parse_subgroup(G, str(data.get("outer", "trivial")))
        return LatticeSpec(int(data["width"]), int(data["height"]), G, holes, defects, outer, cap)
    except (KeyError, TypeError) as exc:
        raise LatticeError(f"malformed lattice spec: {exc}") from exc


def spec_to_dict(spec: LatticeSpec) -> dict:
    G = spec.group
    return {
        "width": spec.width,
        "height": spec.height,
        "group": G.name,
        "outer": spec.outer_K.describe(),
        "holes": [{"rect": [h.x0, h.y0, h.x1, h.y1], "K": h.K.describe()} for h in spec.holes],
        "defects": [{"hole": d.hole, "x": d.x, "left": d.K_left.describe(),
                     "right": d.K_right.describe()} for d in spec.defects],
    }


# annulus: the outer boundary plus one hole; confinement: a trivial-subgroup
# region with interior edges along a row
PRESETS = {
    "tc-annulus": {"width": 3, "height": 2, "group": "z2", "outer": "trivial",
                   "holes": [{"rect": [1, 1, 1, 1], "K": "trivial"}]},
    "dz3-annulus": {"width": 2, "height": 2, "group": "z3", "outer": "trivial",
                    "holes": [{"rect": [1, 1, 1, 1], "K": "trivial"}]},
    "tc-planar": {"width": 2, "height": 2, "group": "z2"},
    "tc-confinement": {"width": 5, "height": 1, "group": "z2",
                       "holes": [{"rect": [0, 0, 5, 1], "K": "trivial"}]},
    "s3-defect": {"width": 2, "height": 1, "group": "s3", "outer": "trivial",
                  "holes": [{"rect": [0, 0, 2, 1], "K": "full"}],
                  "defects": [{"hole": 0, "x": 1, "left": "z2", "right": "full"}]},
}


def dump_state(state: LatticeState, path) -> None:
    """One JSON header line (spec, edge names, shape), then the amplitudes as
    little-endian float64 pairs (re, im) in C order."""
    header = {"spec": spec_to_dict(state.spec), "edges": list(state.spec.edge_names),
              "shape": list(state.spec.shape), "dtype": "<f8", "layout": "re,im"}
    raw = np.ascontiguousarray(state.amplitudes, dtype="<c16").view("<f8")
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(raw.tobytes())
