"""Finite groups as multiplication tables, with classes, cosets and characters.

Every group element is a dense integer index and index 0 is the identity.
Groups are built from a small catalog (cyclic, dihedral, symmetric, direct
products) or from an explicit multiplication table.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GroupError",
    "FiniteGroup",
    "Subgroup",
    "ConjugacyClass",
    "DoubleCoset",
    "CharacterTable",
    "MatrixIrrep",
    "build_group",
    "cyclic",
    "dihedral",
    "symmetric",
    "direct_product",
    "from_table",
    "parse_group",
    "conjugacy_classes",
    "double_cosets",
    "character_table",
    "matrix_irreps",
    "restriction_multiplicities",
    "subgroup",
    "generated_subgroup",
    "subgroup_classes",
    "canonical_conjugate",
    "parse_subgroup",
]

CHARACTER_TABLE_CAP = 256
SNAP_TOL = 1e-6


class GroupError(ValueError):
    """Raised for malformed groups, subgroups or unsupported requests."""


class FiniteGroup:
    """A finite group given by its multiplication table.

    ``mul[a, b]`` is the index of the product ``a*b``. Instances are treated
    as immutable; derived structure is cached on first use.
    """

    def __init__(
        self,
        mul: np.ndarray | Sequence[Sequence[int]],
        name: str = "G",
        labels: Sequence[str] | None = None,
        kind: str = "table",
        params: tuple = (),
        validate: bool = True,
    ):
        table = np.array(mul, dtype=np.int64)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] == 0:
            raise GroupError("multiplication table must be a non-empty square array")
        n = table.shape[0]
        if validate:
            _validate_table(table)
        inv = np.empty(n, dtype=np.int64)
        for g in range(n):
            inv[g] = int(np.flatnonzero(table[g] == 0)[0])
        table.setflags(write=False)
        inv.setflags(write=False)
        self.mul = table
        self.inv = inv
        self.order = n
        self.identity = 0
        self.name = name
        self.kind = kind
        self.params = params
        self.labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(n))
        if len(self.labels) != n:
            raise GroupError("labels must match the group order")

    def __repr__(self) -> str:
        return f"FiniteGroup({self.name}, order={self.order})"

    def m(self, *elements: int) -> int:
        """Product of the given elements, left to right."""
        out = 0
        for g in elements:
            out = int(self.mul[out, g])
        return out

    def conj(self, g: int, h: int) -> int:
        """Return g h g^-1."""
        return int(self.mul[self.mul[g, h], self.inv[g]])

    def label(self, g: int) -> str:
        return self.labels[g]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            if re.fullmatch(r"\d+", label) and int(label) < self.order:
                return int(label)
            raise GroupError(f"unknown element {label!r} of {self.name}") from None

    def element_order(self, g: int) -> int:
        k, x = 1, g
        while x != 0:
            x = int(self.mul[x, g])
            k += 1
        return k

    def power(self, g: int, k: int) -> int:
        k %= self.element_order(g)
        x = 0
        for _ in range(k):
            x = int(self.mul[x, g])
        return x

    @cached_property
    def conj_table(self) -> np.ndarray:
        """``conj_table[h, g] = h g h^-1``."""
        return np.array([self.mul[self.mul[h], self.inv[h]] for h in range(self.order)])

    @cached_property
    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mul, self.mul.T))

    @cached_property
    def exponent(self) -> int:
        return math.lcm(*(self.element_order(g) for g in range(self.order)))

    @cached_property
    def classes(self) -> tuple["ConjugacyClass", ...]:
        return tuple(conjugacy_classes(self))

    @cached_property
    def class_of(self) -> np.ndarray:
        ids = np.empty(self.order, dtype=np.int64)
        for i, c in enumerate(self.classes):
            ids[list(c.elements)] = i
        return ids

    @cached_property
    def full(self) -> "Subgroup":
        return Subgroup(self, tuple(range(self.order)))

    @cached_property
    def trivial(self) -> "Subgroup":
        return Subgroup(self, (0,))


def _validate_table(table: np.ndarray) -> None:
    n = table.shape[0]
    if table.min() < 0 or table.max() >= n:
        raise GroupError("multiplication table has out-of-range entries")
    ident = np.arange(n)
    if not (np.array_equal(table[0], ident) and np.array_equal(table[:, 0], ident)):
        raise GroupError("element 0 is not a two-sided identity")
    for g in range(n):
        if len(set(table[g].tolist())) != n or len(set(table[:, g].tolist())) != n:
            raise GroupError(f"element {g} is not invertible (row/column is not a permutation)")
    if n <= 64:
        # full associativity check, vectorized over the third index
        for a in range(n):
            lhs = table[table[a]]          # (a*b)*c  indexed [b, c]
            rhs = table[a][table]          # a*(b*c)
            bad = np.argwhere(lhs != rhs)
            if bad.size:
                b, c = bad[0]
                raise GroupError(f"table is not associative at triple ({a}, {b}, {c})")
    else:
        rng = np.random.default_rng(0)
        trip = rng.integers(0, n, size=(4096, 3))
        for a, b, c in trip:
            if table[table[a, b], c] != table[a, table[b, c]]:
                raise GroupError(f"table is not associative at triple ({a}, {b}, {c})")


# ---------------------------------------------------------------- catalog

def cyclic(n: int) -> FiniteGroup:
    if n < 1:
        raise GroupError("cyclic group needs n >= 1")
    a = np.arange(n)
    labels = ["1"] + [f"g{k}" if n > 2 else "g" for k in range(1, n)]
    if n > 2:
        labels = ["1", "g"] + [f"g{k}" for k in range(2, n)]
    return FiniteGroup((a[:, None] + a[None, :]) % n, name=f"Z{n}", labels=labels,
                       kind="cyclic", params=(n,), validate=False)


def dihedral(n: int, name: str | None = None) -> FiniteGroup:
    """Dihedral group of order 2n with elements s^j r^k at index j*n + k."""
    if n < 2:
        raise GroupError("dihedral group needs n >= 2")
    order = 2 * n
    mul = np.empty((order, order), dtype=np.int64)
    for j1, k1, j2, k2 in itertools.product(range(2), range(n), range(2), range(n)):
        # s^j1 r^k1 s^j2 r^k2 = s^(j1+j2) r^((-1)^j2 k1 + k2)
        j = (j1 + j2) % 2
        k = ((-k1 if j2 else k1) + k2) % n
        mul[j1 * n + k1, j2 * n + k2] = j * n + k
    rot = ["1", "r"] + [f"r{k}" for k in range(2, n)]
    labels = rot + ["s" + (x if x != "1" else "") for x in rot]
    return FiniteGroup(mul, name=name or f"D{n}", labels=labels, kind="dihedral",
                       params=(n,), validate=False)


def symmetric(n: int) -> FiniteGroup:
    """Symmetric group S_n for n <= 5.

    S_3 is presented as r^3 = s^2 = srsr = 1 with elements 1, r, r2, s, sr, sr2.
    Larger n use permutations of 0..n-1 in lexicographic order.
    """
    if n < 1 or n > 5:
        raise GroupError("symmetric(n) is supported for 1 <= n <= 5")
    if n == 1:
        g = cyclic(1)
        return FiniteGroup(g.mul, name="S1", labels=["1"], kind="symmetric", params=(1,), validate=False)
    if n == 2:
        return FiniteGroup(cyclic(2).mul, name="S2", labels=["1", "(01)"], kind="symmetric",
                           params=(2,), validate=False)
    if n == 3:
        d = dihedral(3)
        return FiniteGroup(d.mul, name="S3", labels=d.labels, kind="dihedral", params=(3,),
                           validate=False)
    perms = list(itertools.permutations(range(n)))
    pos = {p: i for i, p in enumerate(perms)}
    # (p*q)(x) = p(q(x)): apply q first
    mul = np.array([[pos[tuple(p[q[x]] for x in range(n))] for q in perms] for p in perms])
    return FiniteGroup(mul, name=f"S{n}", labels=[_cycle_label(p) for p in perms],
                       kind="symmetric", params=(n,), validate=False)


def _cycle_label(p: tuple[int, ...]) -> str:
    seen, parts = set(), []
    for start in range(len(p)):
        if start in seen or p[start] == start:
            continue
        cyc, x = [], start
        while x not in seen:
            seen.add(x)
            cyc.append(str(x))
            x = p[x]
        parts.append("(" + "".join(cyc) + ")")
    return "".join(parts) or "1"


def direct_product(a: FiniteGroup, b: FiniteGroup) -> FiniteGroup:
    """A x B with element (x, y) at index x*|B| + y."""
    na, nb = a.order, b.order
    mul = (a.mul[:, None, :, None] * nb + b.mul[None, :, None, :]).reshape(na * nb, na * nb)
    labels = [f"({x},{y})" for x in a.labels for y in b.labels]
    labels[0] = "1"
    return FiniteGroup(mul, name=f"{a.name}x{b.name}", labels=labels, kind="product",
                       params=(a, b), validate=False)


def from_table(table: Sequence[Sequence[int]], name: str = "G",
               labels: Sequence[str] | None = None) -> FiniteGroup:
    return FiniteGroup(table, name=name, labels=labels, kind="table")


def build_group(spec) -> FiniteGroup:
    """Build a group from a spec dict, a spec string, or a FiniteGroup.

    Dict form: {"kind": "cyclic"|"symmetric"|"dihedral"|"product"|"table", ...}.
    """
    if isinstance(spec, FiniteGroup):
        return spec
    if isinstance(spec, str):
        return parse_group(spec)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise GroupError(f"cannot interpret group spec {spec!r}")
    kind = spec["kind"]
    if kind == "cyclic":
        return cyclic(int(spec["n"]))
    if kind == "dihedral":
        return dihedral(int(spec["n"]))
    if kind == "symmetric":
        return symmetric(int(spec["n"]))
    if kind == "product":
        return direct_product(build_group(spec["left"]), build_group(spec["right"]))
    if kind == "table":
        return from_table(spec["table"], name=spec.get("name", "G"), labels=spec.get("labels"))
    raise GroupError(f"unknown group kind {kind!r}")


_ATOM = re.compile(r"^(?:(z|c|cyclic)\(?(\d+)\)?|(s|symmetric)\(?(\d+)\)?|(d|dihedral)\(?(\d+)\)?)$")


@lru_cache(maxsize=64)
def parse_group(text: str) -> FiniteGroup:
    """Parse strings like ``z2``, ``s3``, ``dihedral(4)``, ``s3xs3``,
    ``direct_product(z2,z3)`` or a path to a JSON group-spec file."""
    t = text.strip()
    path = Path(t)
    if t.endswith(".json") and path.exists():
        return build_group(json.loads(path.read_text()))
    t = t.lower().replace(" ", "")
    m = re.fullmatch(r"(?:direct_product|product)\((.*)\)", t)
    if m:
        left, right = _split_top(m.group(1))
        return direct_product(parse_group(left), parse_group(right))
    parts = _split_x(t)
    if len(parts) > 1:
        g = parse_group(parts[0])
        for p in parts[1:]:
            g = direct_product(g, parse_group(p))
        return g
    m = _ATOM.match(t)
    if not m:
        raise GroupError(f"cannot parse group spec {text!r}")
    if m.group(2):
        return cyclic(int(m.group(2)))
    if m.group(4):
        return symmetric(int(m.group(4)))
    return dihedral(int(m.group(6)))


def _split_top(s: str) -> tuple[str, str]:
    depth = 0
    for i, ch in enumerate(s):
        depth += ch == "("
        depth -= ch == ")"
        if ch == "," and depth == 0:
            return s[:i], s[i + 1:]
    raise GroupError(f"expected two comma-separated factors in {s!r}")


def _split_x(s: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in s:
        depth += ch == "("
        depth -= ch == ")"
        if ch == "x" and depth == 0 and cur:
            out.append(cur)
            cur = ""
        else:
            cur += ch
    out.append(cur)
    return out


# ---------------------------------------------------------------- subgroups

@dataclass(frozen=True, eq=False)
class Subgroup:
    parent: FiniteGroup
    elements: tuple[int, ...]

    def __post_init__(self):
        els = tuple(sorted(set(int(e) for e in self.elements)))
        object.__setattr__(self, "elements", els)
        if not els or els[0] != 0:
            raise GroupError("subgroup must contain the identity")
        s = set(els)
        mul, inv = self.parent.mul, self.parent.inv
        for a in els:
            if int(inv[a]) not in s:
                raise GroupError(f"subgroup not closed under inverse at {a}")
            for b in els:
                if int(mul[a, b]) not in s:
                    raise GroupError(f"subgroup not closed under multiplication at ({a}, {b})")

    def __eq__(self, other):
        return isinstance(other, Subgroup) and other.parent is self.parent \
            and other.elements == self.elements

    def __hash__(self):
        return hash((id(self.parent), self.elements))

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, g) -> bool:
        return int(g) in self.elementset

    def __iter__(self):
        return iter(self.elements)

    @property
    def order(self) -> int:
        return len(self.elements)

    @cached_property
    def elementset(self) -> frozenset[int]:
        return frozenset(self.elements)

    @cached_property
    def local(self) -> dict[int, int]:
        """Map parent index -> index inside the subgroup-as-group."""
        return {g: i for i, g in enumerate(self.elements)}

    @cached_property
    def group(self) -> FiniteGroup:
        """The subgroup as a standalone FiniteGroup (element i is elements[i])."""
        loc = self.local
        els = self.elements
        mul = [[loc[int(self.parent.mul[a, b])] for b in els] for a in els]
        return FiniteGroup(mul, name=f"{self.parent.name}|{len(els)}",
                           labels=[self.parent.labels[e] for e in els], kind="table",
                           validate=False)

    def conjugate(self, g: int) -> "Subgroup":
        """g K g^-1."""
        return Subgroup(self.parent, tuple(self.parent.conj(g, k) for k in self.elements))

    def intersect(self, other: "Subgroup") -> "Subgroup":
        return Subgroup(self.parent, tuple(sorted(self.elementset & other.elementset)))

    def left_cosets(self) -> list[tuple[int, ...]]:
        """Left cosets gK, each sorted, ordered by their minimal element."""
        seen: set[int] = set()
        out = []
        for g in range(self.parent.order):
            if g in seen:
                continue
            coset = tuple(sorted(int(self.parent.mul[g, k]) for k in self.elements))
            seen.update(coset)
            out.append(coset)
        return out

    def describe(self) -> str:
        return "{" + ",".join(self.parent.labels[e] for e in self.elements) + "}"


def subgroup(G: FiniteGroup, elements: Iterable[int]) -> Subgroup:
    return Subgroup(G, tuple(elements))


def generated_subgroup(G: FiniteGroup, generators: Iterable[int]) -> Subgroup:
    els = {0}
    frontier = [0]
    gens = [int(g) for g in generators]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = int(G.mul[x, g])
                if y not in els:
                    els.add(y)
                    nxt.append(y)
        frontier = nxt
    return Subgroup(G, tuple(els))


def _check_sub(G: FiniteGroup, K: Subgroup) -> None:
    if K.parent is not G:
        if K.parent.order != G.order or not np.array_equal(K.parent.mul, G.mul):
            raise GroupError("subgroup is not contained in the given group")


def canonical_conjugate(K: Subgroup) -> Subgroup:
    """Conjugate of K with the lexicographically least element tuple."""
    G = K.parent
    best = K.elements
    for g in range(G.order):
        cand = tuple(sorted(G.conj(g, k) for k in K.elements))
        if cand < best:
            best = cand
    return K if best == K.elements else Subgroup(G, best)


@lru_cache(maxsize=32)
def subgroup_classes(G: FiniteGroup) -> tuple[Subgroup, ...]:
    """Canonical representatives of subgroups up to conjugacy (|G| <= 64).

    Ordered by (order, element tuple).
    """
    if G.order > 64:
        raise GroupError("subgroup enumeration is limited to groups of order <= 64")
    cyclics = {generated_subgroup(G, [g]).elements for g in range(G.order)}
    found = set(cyclics)
    frontier = set(cyclics)
    while frontier:
        nxt = set()
        for a in frontier:
            for b in cyclics:
                if set(b) <= set(a):
                    continue
                j = generated_subgroup(G, set(a) | set(b)).elements
                if j not in found:
                    found.add(j)
                    nxt.add(j)
        frontier = nxt
    reps = {canonical_conjugate(Subgroup(G, e)).elements for e in found}
    return tuple(Subgroup(G, e) for e in sorted(reps, key=lambda e: (len(e), e)))


def _invariant(G: FiniteGroup) -> tuple:
    return (G.order, tuple(sorted(G.element_order(g) for g in range(G.order))))


def parse_subgroup(G: FiniteGroup, text: str) -> Subgroup:
    """Parse a subgroup description.

    Accepted: ``trivial``/``1``, ``full``/``G``, an isomorphism-type name such as
    ``z2`` or ``s3`` (first conjugacy class of matching subgroups), an element
    list ``{1,s}`` or ``0,3`` (the generated subgroup), or for product groups a
    pair ``(A,B)`` of factor subgroup descriptions.
    """
    t = text.strip()
    low = t.lower()
    if low in ("trivial", "1", "{1}", "{}", "e"):
        return G.trivial
    if low in ("full", "g", "all", G.name.lower()):
        return G.full
    if t.startswith("(") and t.endswith(")") and G.kind == "product":
        a, b = G.params
        left, right = _split_top(t[1:-1])
        ka, kb = parse_subgroup(a, left), parse_subgroup(b, right)
        els = [x * b.order + y for x in ka.elements for y in kb.elements]
        return Subgroup(G, tuple(els))
    if t.startswith("{") or "," in t:
        items = [x.strip() for x in t.strip("{}").split(",") if x.strip()]
        return generated_subgroup(G, [G.index(x) for x in items])
    try:
        target = parse_group(low)
    except GroupError:
        target = None
    if target is not None:
        inv = _invariant(target)
        for K in subgroup_classes(G):
            if _invariant(K.group) == inv:
                return K
        raise GroupError(f"{G.name} has no subgroup isomorphic to {text!r}")
    return generated_subgroup(G, [G.index(t)])


# ---------------------------------------------------------------- classes

@dataclass(frozen=True, eq=False)
class ConjugacyClass:
    group: FiniteGroup
    representative: int
    elements: tuple[int, ...]
    centralizer: Subgroup
    transversal: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def size(self) -> int:
        return len(self.elements)

    @cached_property
    def position(self) -> dict[int, int]:
        return {c: i for i, c in enumerate(self.elements)}

    def transversal_of(self, c: int) -> int:
        """p with c = p r_C p^-1."""
        return self.transversal[self.position[c]]


def conjugacy_classes(G: FiniteGroup) -> list[ConjugacyClass]:
    """Conjugacy classes sorted by (size, representative index)."""
    ct = G.conj_table
    seen: set[int] = set()
    raw = []
    for g in range(G.order):
        if g in seen:
            continue
        els = tuple(sorted(set(ct[:, g].tolist())))
        seen.update(els)
        raw.append((len(els), g, els))
    raw.sort()
    out = []
    for _, r, els in raw:
        cent = Subgroup(G, tuple(int(h) for h in np.flatnonzero(G.mul[:, r] == G.mul[r, :])))
        trans = []
        for c in els:
            trans.append(int(np.flatnonzero(ct[:, r] == c)[0]))
        out.append(ConjugacyClass(G, r, els, cent, tuple(trans)))
    return out


# ---------------------------------------------------------------- double cosets

@dataclass(frozen=True, eq=False)
class DoubleCoset:
    left: Subgroup
    right: Subgroup
    representative: int
    elements: tuple[int, ...]
    stabilizer: Subgroup
    transversal: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.elements)

    @cached_property
    def s_elements(self) -> tuple[int, ...]:
        """q_i r_T q_i^-1 for the transversal Q of K1 / stabilizer."""
        G = self.left.parent
        return tuple(G.conj(q, self.representative) for q in self.transversal)

    def factor(self, g: int) -> tuple[int, int]:
        """Return (x, y) in K1 x K2 with g = x r_T y^-1."""
        G = self.left.parent
        r = self.representative
        for x in self.left.elements:
            y_inv = G.m(int(G.inv[r]), int(G.inv[x]), g)
            if y_inv in self.right:
                return x, int(G.inv[y_inv])
        raise GroupError(f"element {g} is not in this double coset")


def double_cosets(G: FiniteGroup, K1: Subgroup, K2: Subgroup) -> list[DoubleCoset]:
    """Double cosets K1 g K2 ordered by minimal representative."""
    _check_sub(G, K1)
    _check_sub(G, K2)
    seen: set[int] = set()
    out = []
    for g in range(G.order):
        if g in seen:
            continue
        els = tuple(sorted({G.m(a, g, b) for a in K1.elements for b in K2.elements}))
        seen.update(els)
        stab_set = K1.elementset & {G.conj(g, k) for k in K2.elements}
        stab = Subgroup(G, tuple(sorted(stab_set)))
        trans, covered = [], set()
        for q in K1.elements:
            if q in covered:
                continue
            trans.append(q)
            covered.update(G.m(q, s) for s in stab.elements)
        out.append(DoubleCoset(K1, K2, g, els, stab, tuple(trans)))
    return out


# ---------------------------------------------------------------- characters

@dataclass(frozen=True, eq=False)
class CharacterTable:
    group: FiniteGroup
    rows: np.ndarray
    dims: tuple[int, ...]

    @property
    def classes(self) -> tuple[ConjugacyClass, ...]:
        return self.group.classes

    def __len__(self) -> int:
        return len(self.dims)

    @cached_property
    def on_elements(self) -> np.ndarray:
        """Character values indexed [irrep, element]."""
        out = self.rows[:, self.group.class_of]
        out.setflags(write=False)
        return out

    def inner(self, f1: np.ndarray, f2: np.ndarray) -> complex:
        """<f1, f2> = (1/|G|) sum_g f1(g) conj(f2(g)) for element-indexed functions."""
        return complex(np.dot(f1, np.conj(f2)) / self.group.order)


def _root(k: int, m: int) -> complex:
    """exp(2 pi i k / m) with exact zeros for the axis-aligned cases."""
    k %= m
    if (4 * k) % m == 0:
        return [1, 1j, -1, -1j][(4 * k) // m]
    ang = 2 * math.pi * k / m
    return complex(math.cos(ang), math.sin(ang))


def _snap_row(G: FiniteGroup, row: np.ndarray) -> np.ndarray:
    """Snap each class value to an exact sum of roots of unity when possible.

    On <g> of order m the character restricts to sum_t mult_t zeta^t with
    nonnegative integer mult_t, which are recovered by a discrete Fourier sum.
    """
    out = np.asarray(row, dtype=complex).copy()
    for i, c in enumerate(G.classes):
        g = c.representative
        m = G.element_order(g)
        vals = [row[G.class_of[G.power(g, j)]] for j in range(m)]
        mult = [sum(vals[j] * _root(-t * j, m) for j in range(m)) / m for t in range(m)]
        rounded = [round(x.real) for x in mult]
        if all(abs(x - r) < SNAP_TOL for x, r in zip(mult, rounded)) and min(rounded) >= 0:
            v = sum(r * _root(t, m) for t, r in enumerate(rounded))
            v = complex(v)
            re_, im_ = v.real, v.imag
            re_ = 0.0 if abs(re_) < 1e-14 else re_
            im_ = 0.0 if abs(im_) < 1e-14 else im_
            out[i] = complex(re_, im_)
    return out


def _value_key(v: complex) -> tuple[float, float]:
    ang = math.atan2(v.imag, v.real) % (2 * math.pi)
    if ang > 2 * math.pi - 1e-9:
        ang = 0.0
    return (round(ang, 9), round(abs(v), 9))


@lru_cache(maxsize=128)
def character_table(G: FiniteGroup, cap: int = CHARACTER_TABLE_CAP) -> CharacterTable:
    """Character table by the class-algebra eigenvector method.

    Rows: trivial first, then ascending (dim, per-class (phase, modulus)).
    """
    if G.order > cap:
        raise GroupError(f"group order {G.order} exceeds the character-table cap {cap}; "
                         "supply an explicit table")
    classes = G.classes
    nc = len(classes)
    sizes = np.array([c.size for c in classes], dtype=float)
    cid = G.class_of
    # a[i, j, k] = #{x in C_i : x^-1 z in C_j}, z = r_k  (class constants, exact ints)
    a = np.zeros((nc, nc, nc))
    for i, ci in enumerate(classes):
        xs = np.array(ci.elements)
        for k, ck in enumerate(classes):
            ys = G.mul[G.inv[xs], ck.representative]
            a[i, :, k] = np.bincount(cid[ys], minlength=nc)
    rng = np.random.default_rng(12345)
    omegas = None
    for _ in range(16):
        coeff = rng.normal(size=nc)
        A = np.tensordot(coeff, a, axes=1)
        w, v = np.linalg.eig(A)
        gaps = np.abs(w[:, None] - w[None, :]) + np.eye(nc) * 1e9
        if gaps.min() < 1e-6:
            continue
        omegas = (v / v[0:1, :]).T
        break
    if omegas is None:
        raise GroupError("class-algebra eigenproblem did not separate the characters")
    rows = []
    for om in omegas:
        d = math.sqrt(G.order / float(np.sum(np.abs(om) ** 2 / sizes)))
        d = round(d)
        rows.append(_snap_row(G, d * om / sizes))
    rows_arr = np.array(rows)
    dims = [int(round(r[0].real)) for r in rows_arr]
    order = sorted(range(nc), key=lambda i: (
        0 if np.allclose(rows_arr[i], 1.0) else 1,
        dims[i],
        tuple(_value_key(v) for v in rows_arr[i]),
    ))
    rows_arr = rows_arr[order]
    dims = tuple(dims[i] for i in order)
    table = CharacterTable(G, rows_arr, dims)
    _check_orthogonality(table)
    rows_arr.setflags(write=False)
    return table


def _check_orthogonality(table: CharacterTable, tol: float = 1e-9) -> None:
    G = table.group
    sizes = np.array([c.size for c in G.classes], dtype=float)
    gram = (table.rows * sizes) @ table.rows.conj().T / G.order
    if not np.allclose(gram, np.eye(len(table)), atol=tol):
        raise GroupError("character table failed row orthogonality")
    if sum(d * d for d in table.dims) != G.order:
        raise GroupError("sum of squared dimensions does not equal the group order")


def restriction_multiplicities(character: np.ndarray, H: Subgroup) -> np.ndarray:
    """Multiplicities of the irreps of H in the restriction of a character of H.parent.

    ``character`` is indexed by parent element. Returns integers ordered like
    ``character_table(H.group)``.
    """
    character = np.asarray(character)
    if character.shape != (H.parent.order,):
        raise GroupError("character must be indexed by elements of the parent group")
    tab = character_table(H.group)
    restricted = character[list(H.elements)]
    raw = tab.on_elements.conj() @ restricted / H.order
    mult = np.rint(raw.real).astype(int)
    if np.max(np.abs(raw - mult)) > 1e-6 or mult.min() < 0:
        raise GroupError("restriction is not a character of the subgroup")
    return mult


# ---------------------------------------------------------------- matrix irreps

@dataclass(frozen=True, eq=False)
class MatrixIrrep:
    index: int
    matrices: np.ndarray  # [element, dim, dim]

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    def __call__(self, g: int) -> np.ndarray:
        return self.matrices[g]


@lru_cache(maxsize=128)
def matrix_irreps(G: FiniteGroup) -> tuple[MatrixIrrep, ...]:
    """Unitary matrix irreps in character-table order.

    Abelian groups use their characters, dihedral groups the rotation and
    reflection matrices, products the Kronecker products of factor irreps.
    Anything else is split out of the regular representation.
    """
    tab = character_table(G)
    if all(d == 1 for d in tab.dims):
        mats = [tab.on_elements[i][:, None, None].astype(complex) for i in range(len(tab))]
    elif G.kind == "dihedral":
        mats = _dihedral_irreps(G, tab)
    elif G.kind == "product":
        mats = _product_irreps(G, tab)
    else:
        mats = _regular_irreps(G, tab)
    out = []
    for i, m in enumerate(mats):
        m = np.ascontiguousarray(m)
        m.setflags(write=False)
        out.append(MatrixIrrep(i, m))
    return tuple(out)


def _match_rows(G: FiniteGroup, tab: CharacterTable, candidates: list[np.ndarray]) -> list[np.ndarray]:
    out: list[np.ndarray | None] = [None] * len(tab)
    for m in candidates:
        tr = np.trace(m, axis1=1, axis2=2)
        for i in range(len(tab)):
            if out[i] is None and np.allclose(tr, tab.on_elements[i], atol=1e-9):
                out[i] = m
                break
    if any(x is None for x in out):
        raise GroupError(f"could not match matrix irreps of {G.name} to its characters")
    return out  # type: ignore[return-value]


def _dihedral_irreps(G: FiniteGroup, tab: CharacterTable) -> list[np.ndarray]:
    n = G.params[0]
    cands = [tab.on_elements[i][:, None, None].astype(complex)
             for i in range(len(tab)) if tab.dims[i] == 1]
    refl = np.array([[1, 0], [0, -1]], dtype=complex)
    for j in range(1, (n - 1) // 2 + 1):
        ang = 2 * math.pi * j / n
        rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]], dtype=complex)
        mats = np.empty((G.order, 2, 2), dtype=complex)
        for s in range(2):
            for k in range(n):
                mats[s * n + k] = np.linalg.matrix_power(refl, s) @ np.linalg.matrix_power(rot, k)
        cands.append(mats)
    return _match_rows(G, tab, cands)


def _product_irreps(G: FiniteGroup, tab: CharacterTable) -> list[np.ndarray]:
    a, b = G.params
    cands = []
    for ia in matrix_irreps(a):
        for ib in matrix_irreps(b):
            mats = np.empty((G.order, ia.dim * ib.dim, ia.dim * ib.dim), dtype=complex)
            for x in range(a.order):
                for y in range(b.order):
                    mats[x * b.order + y] = np.kron(ia.matrices[x], ib.matrices[y])
            cands.append(mats)
    return _match_rows(G, tab, cands)


def _regular_irreps(G: FiniteGroup, tab: CharacterTable) -> list[np.ndarray]:
    """Split each isotypic block of the left-regular representation with a
    generic element of the commutant (the right-regular action)."""
    n = G.order
    L = np.zeros((n, n, n))
    R = np.zeros((n, n, n))
    for g in range(n):
        L[g, G.mul[g], np.arange(n)] = 1.0
        R[g, G.mul[np.arange(n), G.inv[g]], np.arange(n)] = 1.0
    rng = np.random.default_rng(2024)
    X = np.tensordot(rng.normal(size=n), R, axes=1)
    X = X + X.T
    out = []
    for i, d in enumerate(tab.dims):
        P = (d / n) * np.tensordot(tab.on_elements[i].conj(), L, axes=1)
        w, v = np.linalg.eigh((P + P.conj().T) / 2)
        B = v[:, w > 0.5]
        h = B.conj().T @ X @ B
        hw, hv = np.linalg.eigh((h + h.conj().T) / 2)
        U = B @ hv[:, :d]
        out.append(np.einsum("ai,gab,bj->gij", U.conj(), L, U))
    return out
