"""Anyons of the quantum double D(G): types, dimensions, S/T data and fusion."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .group_core import ConjugacyClass, FiniteGroup, GroupError, character_table

__all__ = [
    "Anyon",
    "AnyonSystem",
    "anyon_types",
    "anyon_system",
    "quantum_dim",
    "modular_data",
    "fusion_rules",
    "zn_label",
]

S3_LETTERS = "ABCDEFGH"


@dataclass(frozen=True, eq=False)
class Anyon:
    """Simple object (C, pi) of D(G): a class and an irrep of its centralizer."""

    cls: ConjugacyClass
    irrep: int
    label: str

    @property
    def irrep_dim(self) -> int:
        return character_table(self.cls.centralizer.group).dims[self.irrep]

    @property
    def fpdim(self) -> int:
        return self.cls.size * self.irrep_dim

    @property
    def character(self) -> np.ndarray:
        """Character of pi, indexed by local centralizer index."""
        return character_table(self.cls.centralizer.group).on_elements[self.irrep]

    def __repr__(self) -> str:
        return f"Anyon({self.label})"


def quantum_dim(anyon: Anyon) -> int:
    """FPdim(C, pi) = |C| dim(pi)."""
    return anyon.fpdim


def zn_label(a1: int, a2: int, n: int) -> str:
    """Display label of e^a1 m^a2 in D(Z_n)."""
    if n == 2:
        return ["1", "e", "m", "eps"][a1 + 2 * a2]
    part = ""
    if a1:
        part += "e" + (str(a1) if a1 > 1 else "")
    if a2:
        part += "m" + (str(a2) if a2 > 1 else "")
    return part or "1"


def _is_s3(G: FiniteGroup) -> bool:
    return G.kind == "dihedral" and G.params == (3,)


def anyon_types(G: FiniteGroup) -> list[Anyon]:
    """All (C, pi) pairs, vacuum first.

    Generic order is (class order, irrep order). Cyclic groups put e^a1 m^a2
    at position a1 + n a2; S3 uses the letter order A..H.
    """
    out = []
    classes = list(G.classes)
    if _is_s3(G):
        # {1}, then the transposition class, then the 3-cycles
        classes = [classes[0], classes[2], classes[1]]
    n_letter = 0
    for c in classes:
        tab = character_table(c.centralizer.group)
        for i in range(len(tab)):
            if _is_s3(G):
                label = S3_LETTERS[n_letter]
                n_letter += 1
            elif G.kind == "cyclic":
                label = zn_label(i, c.representative, G.order)
            else:
                label = f"({G.labels[c.representative]},{i})"
            out.append(Anyon(c, i, label))
    return out


def _s_matrix(G: FiniteGroup, anyons: list[Anyon]) -> np.ndarray:
    """S_{(A,a),(B,b)} = 1/|G| sum_{g in A, h in B, gh = hg}
    conj chi_a(x_g^-1 h x_g) conj chi_b(x_h^-1 g x_h)."""
    blocks: dict[int, list[int]] = {}
    for pos, a in enumerate(anyons):
        blocks.setdefault(id(a.cls), []).append(pos)
    classes = {id(a.cls): a.cls for a in anyons}
    n = len(anyons)
    S = np.zeros((n, n), dtype=complex)
    mul, inv = G.mul, G.inv
    for ka, A in classes.items():
        chiA = np.array([anyons[p].character for p in blocks[ka]])
        locA = A.centralizer.local
        for kb, B in classes.items():
            chiB = np.array([anyons[p].character for p in blocks[kb]])
            locB = B.centralizer.local
            acc = np.zeros((len(blocks[ka]), len(blocks[kb])), dtype=complex)
            for g in A.elements:
                xg = A.transversal_of(g)
                for h in B.elements:
                    if mul[g, h] != mul[h, g]:
                        continue
                    xh = B.transversal_of(h)
                    u = locA[int(mul[mul[inv[xg], h], xg])]
                    v = locB[int(mul[mul[inv[xh], g], xh])]
                    acc += np.outer(np.conj(chiA[:, u]), np.conj(chiB[:, v]))
            S[np.ix_(blocks[ka], blocks[kb])] = acc / G.order
    return S


def _t_vector(anyons: list[Anyon]) -> np.ndarray:
    """theta_(C,pi) = chi_pi(r_C) / dim pi."""
    out = []
    for a in anyons:
        r = a.cls.centralizer.local[a.cls.representative]
        out.append(a.character[r] / a.irrep_dim)
    return np.array(out, dtype=complex)


def fusion_rules(S: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """N_{ab}^c from the Verlinde formula sum_x S_ax S_bx conj(S_cx) / S_0x."""
    S = np.asarray(S, dtype=complex)
    if np.min(np.abs(S[0])) < 1e-12:
        raise ValueError("first row of S must be nonzero")
    raw = np.einsum("ax,bx,cx->abc", S, S, S.conj() / S[0][None, :])
    N = np.rint(raw.real)
    resid = np.max(np.abs(raw - N))
    if resid > tol or N.min() < 0:
        raise ValueError(f"Verlinde formula gave non-integer fusion coefficients (residual {resid:.2e})")
    return N.astype(int)


@dataclass(frozen=True, eq=False)
class AnyonSystem:
    group: FiniteGroup
    anyons: tuple[Anyon, ...]
    s: np.ndarray
    t: np.ndarray
    fusion: np.ndarray

    @cached_property
    def labels(self) -> tuple[str, ...]:
        return tuple(a.label for a in self.anyons)

    @cached_property
    def dims(self) -> np.ndarray:
        return np.array([a.fpdim for a in self.anyons], dtype=float)

    @cached_property
    def dual(self) -> tuple[int, ...]:
        return tuple(int(np.flatnonzero(self.fusion[a, :, 0])[0]) for a in range(len(self.anyons)))

    def index(self, label: str) -> int:
        return self.labels.index(label)


@lru_cache(maxsize=32)
def anyon_system(G: FiniteGroup) -> AnyonSystem:
    anyons = anyon_types(G)
    S = _s_matrix(G, anyons)
    T = _t_vector(anyons)
    N = fusion_rules(S)
    for arr in (S, T, N):
        arr.setflags(write=False)
    return AnyonSystem(G, tuple(anyons), S, T, N)


def modular_data(G: FiniteGroup) -> tuple[np.ndarray, np.ndarray]:
    """(S, T) with S_00 = 1/|G| and T given as the diagonal vector."""
    if not isinstance(G, FiniteGroup):
        raise GroupError("modular_data expects a FiniteGroup")
    sys = anyon_system(G)
    return sys.s, sys.t
