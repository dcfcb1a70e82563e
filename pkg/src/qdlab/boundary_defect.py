"""Gapped boundaries of D(G) labeled by subgroups K: boundary excitations,
bulk-to-boundary condensation, Lagrangian labels, and defect types."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .group_core import (
    DoubleCoset,
    FiniteGroup,
    GroupError,
    Subgroup,
    character_table,
    double_cosets,
)
from .qdouble import Anyon, anyon_system

__all__ = [
    "BoundaryExcitation",
    "DefectType",
    "CondensationMap",
    "LagrangianVector",
    "boundary_excitations",
    "defect_types",
    "condense",
    "uncondense",
    "condensation_map",
    "condensation_map_bruteforce",
    "boundary_label",
    "dual_defect",
    "defect_fusion_degeneracy",
]


@dataclass(frozen=True, eq=False)
class DefectType:
    """Simple (K1, K2)-bimodule (T, R); a boundary excitation when K1 = K2."""

    coset: DoubleCoset
    irrep: int

    @property
    def left(self) -> Subgroup:
        return self.coset.left

    @property
    def right(self) -> Subgroup:
        return self.coset.right

    @property
    def stabilizer(self) -> Subgroup:
        return self.coset.stabilizer

    @property
    def irrep_dim(self) -> int:
        return character_table(self.stabilizer.group).dims[self.irrep]

    @property
    def character(self) -> np.ndarray:
        """Character of R indexed by local stabilizer index."""
        return character_table(self.stabilizer.group).on_elements[self.irrep]

    @property
    def fpdim(self) -> float:
        k1, k2 = self.left.order, self.right.order
        return math.sqrt(k1 * k2) * self.irrep_dim / self.stabilizer.order

    @property
    def label(self) -> str:
        G = self.left.parent
        r = G.labels[self.coset.representative]
        if len(character_table(self.stabilizer.group)) == 1:
            return r
        return f"{r}:{self.irrep}"

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label}, dim={self.fpdim:g})"


class BoundaryExcitation(DefectType):
    """Simple boundary excitation (T, R) with FPdim |K| dim(R) / |K^{r_T}|."""

    @property
    def fpdim(self) -> float:
        return self.left.order * self.irrep_dim / self.stabilizer.order


def defect_types(G: FiniteGroup, K1: Subgroup, K2: Subgroup) -> list[DefectType]:
    """One defect per (T in K1\\G/K2, irrep of K1 cap r_T K2 r_T^-1)."""
    out = []
    for T in double_cosets(G, K1, K2):
        for i in range(len(character_table(T.stabilizer.group))):
            out.append(DefectType(T, i))
    return out


def boundary_excitations(G: FiniteGroup, K: Subgroup) -> list[BoundaryExcitation]:
    """Boundary excitations for subgroup K; the vacuum comes first."""
    return [BoundaryExcitation(d.coset, d.irrep) for d in defect_types(G, K, K)]


@dataclass(frozen=True)
class LagrangianVector:
    """Multiplicities n_a of the anyons in a condensable algebra."""

    multiplicities: tuple[int, ...]
    labels: tuple[str, ...]

    def __getitem__(self, a: int) -> int:
        return self.multiplicities[a]

    def __len__(self) -> int:
        return len(self.multiplicities)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(a for a, n in enumerate(self.multiplicities) if n)

    def __str__(self) -> str:
        parts = []
        for a, n in enumerate(self.multiplicities):
            if n:
                parts.append((f"{n}" if n > 1 else "") + self.labels[a])
        return "+".join(parts)

    def check(self, dims, thetas, fusion, tol: float = 1e-9) -> list[str]:
        """Return violated Lagrangian conditions (empty when all hold)."""
        n = np.array(self.multiplicities)
        dims = np.asarray(dims, dtype=float)
        problems = []
        if n[0] != 1:
            problems.append("vacuum multiplicity is not 1")
        if abs(n @ dims - math.sqrt(np.sum(dims ** 2))) > tol:
            problems.append("dimension is not the square root of the category dimension")
        if any(n[a] and abs(thetas[a] - 1) > tol for a in range(len(n))):
            problems.append("contains a non-boson")
        lhs = np.outer(n, n)
        rhs = np.tensordot(fusion, n, axes=([2], [0]))
        if np.any(lhs > rhs):
            problems.append("violates n_a n_b <= sum_c N_ab^c n_c")
        return problems


@dataclass(frozen=True, eq=False)
class CondensationMap:
    """Coefficients n[a, x]: anyon a condenses to excitation x with multiplicity n."""

    anyons: tuple[Anyon, ...]
    excitations: tuple[BoundaryExcitation, ...]
    coefficients: np.ndarray
    # number of (C, T) orbits, the group-theoretic n_{C,T}
    orbit_counts: np.ndarray

    @cached_property
    def transpose(self) -> np.ndarray:
        return self.coefficients.T


def _twisted_character(anyon: Anyon, G: FiniteGroup, c: int, k2: int) -> complex:
    """chi_pi(p^-1 k2 p) where c = p r_C p^-1 and k2 centralizes c."""
    p = anyon.cls.transversal_of(c)
    loc = anyon.cls.centralizer.local[G.m(int(G.inv[p]), k2, p)]
    return anyon.character[loc]


def _orbit_data(G: FiniteGroup, K: Subgroup, anyon: Anyon, T: DoubleCoset):
    """Orbits of K^{r_T} on Y = {k in K : k^-1 r_T in C} under k -> k1 k k2^-1,
    where k2 = r_T^-1 k1 r_T. Returns [(orbit rep, stabilizer list of k1)]."""
    r = T.representative
    cset = set(anyon.cls.elements)
    Y = [k for k in K.elements if G.m(int(G.inv[k]), r) in cset]
    stab = T.stabilizer.elements
    rinv = int(G.inv[r])
    seen: set[int] = set()
    out = []
    for k in Y:
        if k in seen:
            continue
        orbit = set()
        fix = []
        for k1 in stab:
            k2 = G.m(rinv, k1, r)
            y = G.m(k1, k, int(G.inv[k2]))
            orbit.add(y)
            if y == k:
                fix.append(k1)
        seen.update(orbit)
        out.append((k, fix))
    return out


def _coefficient(G: FiniteGroup, K: Subgroup, anyon: Anyon, x: BoundaryExcitation) -> tuple[int, int]:
    """(multiplicity of x in anyon restricted to the boundary, number of orbits)."""
    T = x.coset
    r = T.representative
    rinv = int(G.inv[r])
    chiR = x.character
    loc = T.stabilizer.local
    total = 0.0 + 0.0j
    orbits = _orbit_data(G, K, anyon, T)
    for k, fix in orbits:
        c = G.m(int(G.inv[k]), r)
        acc = 0.0 + 0.0j
        for k1 in fix:
            k2 = G.m(rinv, k1, r)
            acc += _twisted_character(anyon, G, c, k2) * np.conj(chiR[loc[k1]])
        total += acc / len(fix)
    n = int(round(total.real))
    if abs(total - n) > 1e-8 or n < 0:
        raise GroupError(f"non-integer condensation coefficient {total}")
    return n, len(orbits)


@lru_cache(maxsize=64)
def condensation_map(G: FiniteGroup, K: Subgroup) -> CondensationMap:
    """Bulk-to-boundary coefficients for every (anyon, boundary excitation) pair."""
    system = anyon_system(G)
    excs = boundary_excitations(G, K)
    coeff = np.zeros((len(system.anyons), len(excs)), dtype=int)
    orbits = np.zeros_like(coeff)
    for i, a in enumerate(system.anyons):
        for j, x in enumerate(excs):
            coeff[i, j], orbits[i, j] = _coefficient(G, K, a, x)
    coeff.setflags(write=False)
    orbits.setflags(write=False)
    return CondensationMap(system.anyons, tuple(excs), coeff, orbits)


def condensation_map_bruteforce(G: FiniteGroup, K: Subgroup) -> np.ndarray:
    """Same coefficients from the fixed-point character formula
    n = 1/|K^r| sum_{k1} conj chi_R(k1) sum_{k in Y, k1 k k2^-1 = k} chi_pi(...),
    summing over every group element without orbit bookkeeping."""
    system = anyon_system(G)
    excs = boundary_excitations(G, K)
    out = np.zeros((len(system.anyons), len(excs)))
    for i, a in enumerate(system.anyons):
        cset = set(a.cls.elements)
        for j, x in enumerate(excs):
            T = x.coset
            r = T.representative
            rinv = int(G.inv[r])
            acc = 0.0 + 0.0j
            for k1 in T.stabilizer.elements:
                k2 = G.m(rinv, k1, r)
                for k in K.elements:
                    c = G.m(int(G.inv[k]), r)
                    if c in cset and G.m(k1, k, int(G.inv[k2])) == k:
                        acc += _twisted_character(a, G, c, k2) * np.conj(
                            x.character[T.stabilizer.local[k1]])
            out[i, j] = (acc / T.stabilizer.order).real
    return out


def condense(G: FiniteGroup, K: Subgroup, anyon: Anyon | int) -> Counter:
    """Boundary excitations (by index) produced by condensing an anyon."""
    cm = condensation_map(G, K)
    a = anyon if isinstance(anyon, int) else cm.anyons.index(anyon)
    return Counter({j: int(n) for j, n in enumerate(cm.coefficients[a]) if n})


def uncondense(G: FiniteGroup, K: Subgroup, excitation: BoundaryExcitation | int) -> Counter:
    """Bulk anyons (by index) obtained by pulling an excitation off the boundary."""
    cm = condensation_map(G, K)
    if isinstance(excitation, int):
        x = excitation
    else:
        x = next(j for j, e in enumerate(cm.excitations)
                 if e.coset.representative == excitation.coset.representative
                 and e.irrep == excitation.irrep)
    return Counter({i: int(n) for i, n in enumerate(cm.coefficients[:, x]) if n})


def boundary_label(G: FiniteGroup, K: Subgroup) -> LagrangianVector:
    """The Lagrangian algebra of the boundary: the anyons condensing to vacuum."""
    cm = condensation_map(G, K)
    system = anyon_system(G)
    return LagrangianVector(tuple(int(n) for n in cm.coefficients[:, 0]), system.labels)


# ---------------------------------------------------------------- defect fusion

@dataclass(frozen=True, eq=False)
class _Bundle:
    """Character function f[a, b, g] of a (K1 x K2)-equivariant bundle on G:
    the trace of (a, b) on the fiber at g when a g b^-1 = g, zero otherwise."""

    left: Subgroup
    right: Subgroup
    f: np.ndarray


def _bundle(d: DefectType) -> _Bundle:
    G = d.left.parent
    K1, K2 = d.left, d.right
    f = np.zeros((K1.order, K2.order, G.order), dtype=complex)
    r = d.coset.representative
    rinv = int(G.inv[r])
    stab = d.stabilizer
    for g in d.coset.elements:
        x, y = d.coset.factor(g)
        xinv, yinv = int(G.inv[x]), int(G.inv[y])
        for ia, a in enumerate(K1.elements):
            u = G.m(xinv, a, x)
            if u not in stab:
                continue
            for ib, b in enumerate(K2.elements):
                if G.m(yinv, b, y) == G.m(rinv, u, r):
                    f[ia, ib, g] = d.character[stab.local[u]]
    return _Bundle(K1, K2, f)


def _tensor(x: _Bundle, y: _Bundle) -> _Bundle:
    """Balanced product over the shared middle subgroup."""
    G = x.left.parent
    out = np.zeros((x.left.order, y.right.order, G.order), dtype=complex)
    mid = x.right.order
    for g1 in range(G.order):
        if not np.any(x.f[:, :, g1]):
            continue
        for g2 in range(G.order):
            if not np.any(y.f[:, :, g2]):
                continue
            out[:, :, G.mul[g1, g2]] += np.einsum("ab,bc->ac", x.f[:, :, g1], y.f[:, :, g2])
    return _Bundle(x.left, y.right, out / mid)


def _hom_dim(x: _Bundle, y: _Bundle) -> complex:
    return np.sum(np.conj(x.f) * y.f) / (x.left.order * x.right.order)


def dual_defect(d: DefectType) -> DefectType:
    """The simple (K2, K1)-defect dual to d."""
    G = d.left.parent
    target = _bundle(d)
    conj_f = np.conj(target.f.transpose(1, 0, 2))[:, :, G.inv]
    for cand in defect_types(G, d.right, d.left):
        if abs(_hom_dim(_bundle(cand), _Bundle(d.right, d.left, conj_f)) - 1) < 1e-9:
            return cand
    raise GroupError("dual defect not found")


def defect_fusion_degeneracy(G: FiniteGroup, chain: list[tuple[Subgroup, DefectType]]) -> int:
    """dim Hom(1_{M_1}, X_12 (x) X_23 (x) ... (x) X_n1).

    ``chain[i] = (K_i, X_i)`` with X_i a (K_i, K_{i+1})-defect, indices mod n.
    """
    if not chain:
        raise GroupError("empty defect chain")
    n = len(chain)
    for i, (K, X) in enumerate(chain):
        nxt = chain[(i + 1) % n][0]
        if X.left != K or X.right != nxt:
            raise GroupError(f"defect chain does not close at position {i}")
    acc = _bundle(chain[0][1])
    for _, X in chain[1:]:
        acc = _tensor(acc, _bundle(X))
    K1 = chain[0][0]
    unit = _bundle(defect_types(G, K1, K1)[0])
    val = _hom_dim(unit, acc)
    out = int(round(val.real))
    if abs(val - out) > 1e-8:
        raise GroupError(f"non-integer hom dimension {val}")
    return out
