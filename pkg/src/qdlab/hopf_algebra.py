"""The quasi-Hopf algebra Z(G,1,K,1) of local boundary operators.

Basis elements are Z^{(hK,k)} = B^{hK} A^k with hK a left coset and k in K.
Every element of G factors uniquely as g = r(g) {g}^-1 with r(g) in a fixed
transversal R of G/K and {g} in K. R is chosen two-sided (it also meets every
right coset Kg once), which the antipode needs; within that constraint each
coset gets its smallest admissible element. Products of basis elements are
again basis elements or zero, so elements of Z and its tensor powers are stored as sparse
tensors (index rows plus coefficients).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .group_core import FiniteGroup, GroupError, Subgroup

__all__ = [
    "ZBasisElement",
    "ZAlgebra",
    "STensor",
    "two_sided_transversal",
    "z_multiply",
    "z_comultiply",
    "verify_quasi_hopf",
]

Tensor = dict  # tuple[int, ...] -> complex

# bound on the number of index pairs formed per block in ZAlgebra.mult
_MULT_BLOCK = 1 << 22


def two_sided_transversal(K: Subgroup, cosets: list[tuple[int, ...]] | None = None) -> tuple[int, ...]:
    """Representatives of the left cosets gK that also meet each right coset Kg once.

    Inside a double coset every left coset meets every right coset, so a
    greedy pass in coset order always succeeds.
    """
    G = K.parent
    cosets = cosets if cosets is not None else K.left_cosets()
    right_of: dict[int, frozenset] = {}
    for g in range(G.order):
        if g not in right_of:
            rc = frozenset(G.m(k, g) for k in K.elements)
            for x in rc:
                right_of[x] = rc
    used: set[frozenset] = set()
    out = []
    for c in cosets:
        pick = next(g for g in sorted(c) if right_of[g] not in used)
        used.add(right_of[pick])
        out.append(pick)
    return tuple(out)


@dataclass(frozen=True)
class ZBasisElement:
    coset: int  # index into the transversal R
    k: int      # element of K (parent index)


@dataclass(eq=False)
class ZAlgebra:
    group: FiniteGroup
    subgroup: Subgroup
    coproduct: str = "standard"
    cosets: list[tuple[int, ...]] = field(init=False)

    def __post_init__(self):
        G, K = self.group, self.subgroup
        if K.parent is not G:
            raise GroupError("subgroup belongs to a different group")
        self.cosets = K.left_cosets()
        self.transversal = two_sided_transversal(K, self.cosets)
        self._coset_of = {g: i for i, c in enumerate(self.cosets) for g in c}
        self.basis = tuple(ZBasisElement(i, k) for i in range(len(self.cosets)) for k in K.elements)
        self._pos = {b: n for n, b in enumerate(self.basis)}

    # -- factorization g = r(g) {g}^-1  (r(g) in R, {g} in K)
    def r(self, g: int) -> int:
        return self.transversal[self._coset_of[g]]

    def brace(self, g: int) -> int:
        """{g} = g^-1 r(g), an element of K."""
        G = self.group
        return G.m(int(G.inv[g]), self.r(g))

    def coset_index(self, g: int) -> int:
        return self._coset_of[g]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def idx(self, coset: int, k: int) -> int:
        return self._pos[ZBasisElement(coset, k)]

    def element(self, coset: int, k: int) -> "STensor":
        return self.basis_tensor(self.idx(coset, k))

    # -- structure maps on basis indices
    @cached_property
    def mul_table(self) -> list[list[int]]:
        """Z^{(h1K,k1)} Z^{(h2K,k2)} = delta_{h1K, k1 h2 K} Z^{(h1K, k1 k2)}; -1 for zero."""
        G = self.group
        out = []
        for x in self.basis:
            row = []
            h1 = self.transversal[x.coset]
            for y in self.basis:
                h2 = self.transversal[y.coset]
                if self._coset_of[h1] == self._coset_of[G.m(x.k, h2)]:
                    row.append(self.idx(x.coset, G.m(x.k, y.k)))
                else:
                    row.append(-1)
            out.append(row)
        return out

    @cached_property
    def unit(self) -> "STensor":
        return self.from_dict({(self.idx(i, 0),): 1.0 for i in range(len(self.cosets))})

    def counit(self, x: int) -> float:
        return 1.0 if self.basis[x].coset == self._coset_of[0] else 0.0

    @cached_property
    def coproduct_table(self) -> list[list[tuple[int, int]]]:
        """Delta(Z^{(hK,k)}) = sum_{h1 in R} Z^{(h1K, k)} (x) Z^{(r(h1^-1 h)K, {k^-1 h1})}.

        ``coproduct="flipped"`` swaps the two legs; the flipped form is only
        quasi-coassociative for special transversals (e.g. complements).
        """
        G = self.group
        out = []
        for x in self.basis:
            h, k = self.transversal[x.coset], x.k
            terms = []
            for h1 in self.transversal:
                left = self.idx(self._coset_of[G.m(int(G.inv[h1]), h)],
                                self.brace(G.m(int(G.inv[k]), h1)))
                right = self.idx(self._coset_of[h1], k)
                terms.append((right, left) if self.coproduct == "standard" else (left, right))
            out.append(terms)
        return out

    @cached_property
    def antipode_table(self) -> list[int]:
        """S(Z^{(hK,k)}) = Z^{(r(r(k^-1 h)^-1)K, {k^-1 h}^-1)}."""
        G = self.group
        out = []
        for x in self.basis:
            h, k = self.transversal[x.coset], x.k
            kh = G.m(int(G.inv[k]), h)
            coset = self._coset_of[int(G.inv[self.r(kh)])]
            out.append(self.idx(coset, int(G.inv[self.brace(kh)])))
        return out

    @cached_property
    def alpha(self) -> "STensor":
        # The unit. The projector Z^{(K,1)} breaks the Phi/alpha/beta identities
        # whenever K != G; verify_quasi_hopf(..., alpha="projector") shows it.
        return self.unit

    @cached_property
    def alpha_projector(self) -> "STensor":
        return self.element(self._coset_of[0], 0)

    @cached_property
    def beta(self) -> "STensor":
        """sum_{h in R} Z^{(hK, {h^-1})}."""
        out: Tensor = {}
        for i, h in enumerate(self.transversal):
            key = (self.idx(i, self.brace(int(self.group.inv[h]))),)
            out[key] = out.get(key, 0.0) + 1.0
        return self.from_dict(out)

    @cached_property
    def phi(self) -> "STensor":
        """sum_{h1,h2,h3 in R} Z^{(h1K,1)} (x) Z^{(h2K,1)} (x) Z^{(h3K,{h1 h2})}."""
        G = self.group
        out: Tensor = {}
        R = self.transversal
        for (i1, h1), (i2, h2), i3 in itertools.product(enumerate(R), enumerate(R), range(len(R))):
            key = (self.idx(i1, 0), self.idx(i2, 0), self.idx(i3, self.brace(G.m(h1, h2))))
            out[key] = out.get(key, 0.0) + 1.0
        return self.from_dict(out)

    @cached_property
    def phi_inverse(self) -> "STensor":
        G = self.group
        out: Tensor = {}
        R = self.transversal
        for (i1, h1), (i2, h2), i3 in itertools.product(enumerate(R), enumerate(R), range(len(R))):
            key = (self.idx(i1, 0), self.idx(i2, 0),
                   self.idx(i3, int(G.inv[self.brace(G.m(h1, h2))])))
            out[key] = out.get(key, 0.0) + 1.0
        return self.from_dict(out)

    def dual_coproduct(self, z: int) -> list[tuple[int, int]]:
        """Coproduct of the dual basis vector z* in Y: all (x, y) with x y = z."""
        return [(x, y) for x, row in enumerate(self.mul_table) for y, w in enumerate(row) if w == z]

    # -- sparse tensor arithmetic
    @cached_property
    def _mul_ext(self) -> np.ndarray:
        """Multiplication table with an absorbing zero index ``dim``."""
        n = self.dim
        ext = np.full((n + 1, n + 1), n, dtype=np.int64)
        ext[:n, :n] = np.where(np.array(self.mul_table) < 0, n, np.array(self.mul_table))
        return ext

    @cached_property
    def _cop(self) -> np.ndarray:
        return np.array(self.coproduct_table, dtype=np.int64)

    def mult(self, a: "STensor", b: "STensor") -> "STensor":
        """Componentwise product of two tensors of equal rank."""
        step = max(1, _MULT_BLOCK // max(1, len(b.vals) * b.keys.shape[1]))
        keys, vals = [], []
        for lo in range(0, len(a.vals), step):
            ak, av = a.keys[lo:lo + step], a.vals[lo:lo + step]
            z = self._mul_ext[ak[:, None, :], b.keys[None, :, :]]
            mask = np.all(z < self.dim, axis=2)
            keys.append(z[mask])
            vals.append((av[:, None] * b.vals[None, :])[mask])
        if not keys:
            return STensor(np.zeros((0, a.keys.shape[1]), dtype=np.int64), np.zeros(0, dtype=complex))
        return STensor.build(np.concatenate(keys), np.concatenate(vals), self.dim)

    def delta_at(self, t: "STensor", leg: int) -> "STensor":
        """Apply the coproduct to one tensor leg."""
        parts = self._cop[t.keys[:, leg]]          # (m, |R|, 2)
        m, nr = parts.shape[:2]
        before = np.repeat(t.keys[:, None, :leg], nr, axis=1)
        after = np.repeat(t.keys[:, None, leg + 1:], nr, axis=1)
        keys = np.concatenate([before, parts, after], axis=2).reshape(m * nr, -1)
        return STensor.build(keys, np.repeat(t.vals, nr), self.dim)

    def eps_at(self, t: "STensor", leg: int) -> "STensor":
        e = np.array([self.counit(x) for x in range(self.dim)])[t.keys[:, leg]]
        keep = e != 0
        keys = np.delete(t.keys[keep], leg, axis=1)
        return STensor.build(keys, (t.vals * e)[keep], self.dim)

    def antipode(self, t: "STensor") -> "STensor":
        return STensor.build(np.array(self.antipode_table)[t.keys], t.vals, self.dim)

    def tensor(self, *parts: "STensor") -> "STensor":
        keys = np.zeros((1, 0), dtype=np.int64)
        vals = np.ones(1, dtype=complex)
        for p in parts:
            keys = np.concatenate([np.repeat(keys, len(p.vals), axis=0),
                                   np.tile(p.keys, (len(vals), 1))], axis=1)
            vals = np.outer(vals, p.vals).ravel()
        return STensor.build(keys, vals, self.dim)

    def basis_tensor(self, x: int) -> "STensor":
        return STensor(np.array([[x]], dtype=np.int64), np.ones(1, dtype=complex))

    def from_dict(self, d: Tensor) -> "STensor":
        keys = np.array(list(d.keys()), dtype=np.int64).reshape(len(d), -1)
        return STensor.build(keys, np.array(list(d.values()), dtype=complex), self.dim)


@dataclass(frozen=True, eq=False)
class STensor:
    """Sparse tensor: integer index rows ``keys`` with coefficients ``vals``."""

    keys: np.ndarray
    vals: np.ndarray

    @staticmethod
    def build(keys: np.ndarray, vals: np.ndarray, n: int, tol: float = 1e-14) -> "STensor":
        keys = np.asarray(keys, dtype=np.int64)
        if keys.ndim == 1:
            keys = keys[:, None]
        vals = np.asarray(vals, dtype=complex)
        if len(vals) == 0:
            return STensor(keys.reshape(0, keys.shape[1]), vals)
        code = np.zeros(len(vals), dtype=np.int64)
        for col in range(keys.shape[1]):
            code = code * (n + 1) + keys[:, col]
        uniq, first, inv = np.unique(code, return_index=True, return_inverse=True)
        acc = np.zeros(len(uniq), dtype=complex)
        np.add.at(acc, inv.ravel(), vals)
        keep = np.abs(acc) > tol
        return STensor(keys[first][keep], acc[keep])

    def as_dict(self) -> Tensor:
        return {tuple(int(x) for x in k): complex(v) for k, v in zip(self.keys, self.vals)}

    def terms(self):
        for k, v in zip(self.keys, self.vals):
            yield v, k

    def __len__(self) -> int:
        return len(self.vals)


def _distance(a: STensor, b: STensor) -> float:
    da, db = a.as_dict(), b.as_dict()
    keys = set(da) | set(db)
    return max((abs(da.get(k, 0.0) - db.get(k, 0.0)) for k in keys), default=0.0)


def z_multiply(x: ZBasisElement, y: ZBasisElement, algebra: ZAlgebra) -> Tensor:
    """Product of two basis elements as a sparse linear combination."""
    if x not in algebra._pos or y not in algebra._pos:
        raise GroupError("basis element does not belong to this algebra")
    t = algebra.mult(algebra.basis_tensor(algebra._pos[x]), algebra.basis_tensor(algebra._pos[y]))
    return t.as_dict()


def z_comultiply(x: ZBasisElement, algebra: ZAlgebra) -> Tensor:
    return algebra.delta_at(algebra.basis_tensor(algebra._pos[x]), 0).as_dict()


def _legs(t: STensor):
    """Yield (coefficient, [one-leg basis tensors]) for every term of t."""
    for v, key in t.terms():
        yield v, [STensor(np.array([[x]], dtype=np.int64), np.ones(1, dtype=complex)) for x in key]


def _sum(Z: ZAlgebra, terms: list[STensor], rank: int) -> STensor:
    if not terms:
        return STensor(np.zeros((0, rank), dtype=np.int64), np.zeros(0, dtype=complex))
    return STensor.build(np.concatenate([t.keys for t in terms]),
                         np.concatenate([t.vals for t in terms]), Z.dim)


def _scale(t: STensor, c: complex) -> STensor:
    return STensor(t.keys, t.vals * c)


AXIOMS = (
    "algebra_associativity", "unit", "coproduct_multiplicative", "counit_multiplicative",
    "quasi_coassociativity", "pentagon", "counit", "phi_counit", "phi_invertible",
    "antipode_antimorphism", "antipode_alpha", "antipode_beta", "phi_beta_alpha",
    "phi_inverse_alpha_beta",
)


def verify_quasi_hopf(G: FiniteGroup, K: Subgroup, alpha: str = "unit",
                      coproduct: str = "standard") -> dict[str, float]:
    """Maximum residual of every quasi-Hopf axiom, checked on all basis elements.

    ``alpha="projector"`` uses Z^{(K,1)} for alpha instead of the unit;
    ``coproduct="flipped"`` swaps the two tensor legs of the coproduct.
    """
    if G.order > 1000:
        raise GroupError("algebra too large for exhaustive verification")
    Z = ZAlgebra(G, K, coproduct)
    n = Z.dim
    al = Z.alpha if alpha == "unit" else Z.alpha_projector
    be, phi, phinv = Z.beta, Z.phi, Z.phi_inverse
    report = dict.fromkeys(AXIOMS, 0.0)

    ext = Z._mul_ext
    idx = np.arange(n + 1)
    if n <= 128:
        lhs = ext[ext[idx[:, None, None], idx[None, :, None]], idx[None, None, :]]
        rhs = ext[idx[:, None, None], ext[idx[None, :, None], idx[None, None, :]]]
        report["algebra_associativity"] = float(np.any(lhs != rhs))
    eps = np.array([Z.counit(x) for x in range(n)])
    S = np.array(Z.antipode_table + [n])
    units = Z.unit.keys[:, 0]
    for x in range(n):
        if (ext[units, x] == x).sum() != 1 or (ext[x, units] == x).sum() != 1:
            report["unit"] = 1.0
        for y in range(n):
            z = ext[x, y]
            prod_eps = eps[z] if z < n else 0.0
            report["counit_multiplicative"] = max(report["counit_multiplicative"],
                                                  abs(prod_eps - eps[x] * eps[y]))
            if S[z] != ext[S[y], S[x]]:
                report["antipode_antimorphism"] = 1.0

    basis = [Z.basis_tensor(x) for x in range(n)]
    deltas = [Z.delta_at(b, 0) for b in basis]
    for x, a in enumerate(basis):
        da = deltas[x]
        for y in range(n):
            z = ext[x, y]
            lhs = deltas[z] if z < n else _sum(Z, [], 2)
            report["coproduct_multiplicative"] = max(report["coproduct_multiplicative"],
                                                     _distance(lhs, Z.mult(da, deltas[y])))
        lhs = Z.mult(Z.delta_at(da, 1), phi)
        rhs = Z.mult(phi, Z.delta_at(da, 0))
        report["quasi_coassociativity"] = max(report["quasi_coassociativity"], _distance(lhs, rhs))
        report["counit"] = max(report["counit"], _distance(Z.eps_at(da, 0), a), _distance(Z.eps_at(da, 1), a))
        s1, s2 = [], []
        for v, (p, q) in _legs(da):
            s1.append(_scale(Z.mult(Z.mult(Z.antipode(p), al), q), v))
            s2.append(_scale(Z.mult(Z.mult(p, be), Z.antipode(q)), v))
        report["antipode_alpha"] = max(report["antipode_alpha"],
                                       _distance(_sum(Z, s1, 1), _scale(al, eps[x])))
        report["antipode_beta"] = max(report["antipode_beta"],
                                      _distance(_sum(Z, s2, 1), _scale(be, eps[x])))

    one3 = Z.tensor(Z.unit, Z.unit, Z.unit)
    lhs = Z.mult(Z.delta_at(phi, 2), Z.delta_at(phi, 0))
    rhs = Z.mult(Z.mult(Z.tensor(Z.unit, phi), Z.delta_at(phi, 1)), Z.tensor(phi, Z.unit))
    report["pentagon"] = _distance(lhs, rhs)
    report["phi_counit"] = _distance(Z.eps_at(phi, 1), Z.tensor(Z.unit, Z.unit))
    report["phi_invertible"] = max(_distance(Z.mult(phi, phinv), one3), _distance(Z.mult(phinv, phi), one3))
    terms = [_scale(Z.mult(Z.mult(Z.mult(Z.mult(x, be), Z.antipode(y)), al), z), v)
             for v, (x, y, z) in _legs(phi)]
    report["phi_beta_alpha"] = _distance(_sum(Z, terms, 1), Z.unit)
    terms = [_scale(Z.mult(Z.mult(Z.mult(Z.mult(Z.antipode(x), al), y), be), Z.antipode(z)), v)
             for v, (x, y, z) in _legs(phinv)]
    report["phi_inverse_alpha_beta"] = _distance(_sum(Z, terms, 1), Z.unit)
    return {k: float(v) for k, v in report.items()}
