"""Ground-state spaces of planar regions with gapped holes and their Wilson operators.

Two holes. The ground space is spanned by tunneling channels |s; mu, nu>, one per
anyon s with n_1(s) n_2(s) > 0, where s is the charge seen at hole 2 (hole 1
carries sbar) and mu, nu are the condensation channels at the two holes.

n holes. Basis vectors are left-associated splitting trees
vacuum -> (..((a_1 a_2) p_2 a_3) p_3 ..) a_n with a_i condensable on hole i.
Braids act on trees over the union of the supports; pure braids preserve the
charge of every hole, so restricting them back is exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .boundary_defect import LagrangianVector
from .mtc_data import MSymbolSet, MtcData, parse_lagrangian

__all__ = [
    "WilsonError",
    "GroundBasis",
    "OperatorMatrix",
    "ground_state_basis",
    "tunnel_matrix",
    "loop_matrix",
    "braid_generators",
    "braid_sigma2_squared",
    "all_pure_braid_generators",
    "pure_braid_relation_residuals",
    "logical_subspace",
    "factor_double",
    "charge_projection",
    "measurement_operator",
]


class WilsonError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GroundBasis:
    """Labelled basis of the ground space.

    Two holes: labels are (s, mu, nu). n holes: labels are
    (charges, partial charges p_2..p_n, channels).
    """

    mtc: MtcData
    boundaries: tuple[LagrangianVector, ...]
    labels: tuple[tuple, ...]

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def holes(self) -> int:
        return len(self.boundaries)

    @cached_property
    def position(self) -> dict:
        return {lab: i for i, lab in enumerate(self.labels)}

    def describe(self, i: int) -> str:
        names = self.mtc.labels
        lab = self.labels[i]
        if self.holes == 2:
            s, mu, nu = lab
            return names[s] + (f"[{mu},{nu}]" if max(self.boundaries[0][s], self.boundaries[1][s]) > 1 else "")
        charges, partial, _ = lab
        return "(" + ",".join(names[a] for a in charges) + ";" + ",".join(names[p] for p in partial) + ")"


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    basis: GroundBasis | None
    entries: np.ndarray
    name: str = ""

    def __post_init__(self):
        if not np.all(np.isfinite(self.entries)):
            raise WilsonError(f"{self.name}: non-finite entries")
        if self.basis is not None and self.entries.shape != (self.basis.dim, self.basis.dim):
            raise WilsonError(f"{self.name}: shape {self.entries.shape} does not match basis dimension {self.basis.dim}")

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.basis, self.entries @ other.entries, f"{self.name}*{other.name}")

    @property
    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.basis, self.entries.conj().T, f"{self.name}^dag")

    def is_unitary(self, tol: float = 1e-9) -> bool:
        d = self.entries.shape[0]
        return bool(np.abs(self.entries.conj().T @ self.entries - np.eye(d)).max(initial=0.0) < tol)

    def is_hermitian(self, tol: float = 1e-9) -> bool:
        return bool(np.abs(self.entries - self.entries.conj().T).max(initial=0.0) < tol)

    def restrict(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=int)
        return self.entries[np.ix_(idx, idx)]


def _boundaries(mtc: MtcData, boundaries) -> tuple[LagrangianVector, ...]:
    out = []
    for b in boundaries:
        vec = parse_lagrangian(mtc, b)
        problems = vec.check(mtc.dims, mtc.t, mtc.fusion)
        if problems:
            raise WilsonError(f"{vec} is not a Lagrangian algebra of {mtc.name}: {'; '.join(problems)}")
        out.append(vec)
    return tuple(out)


def _trees(mtc: MtcData, allowed: list[tuple[int, ...]]):
    """Left-associated trees with total charge vacuum; yields (charges, partials)."""
    N = mtc.fusion
    if N.max() > 1:
        raise WilsonError("fusion multiplicities > 1 are not supported for n-hole trees")

    def grow(charges, partials):
        k = len(charges)
        if k == len(allowed):
            if partials[-1] == 0:
                yield tuple(charges), tuple(partials[1:])
            return
        for a in allowed[k]:
            for p in np.flatnonzero(N[partials[-1], a]):
                yield from grow(charges + [a], partials + [int(p)])

    for a in allowed[0]:
        yield from grow([a], [a])


def ground_state_basis(mtc: MtcData, boundaries) -> GroundBasis:
    """Basis of the ground space of the plane with one hole per boundary algebra."""
    bds = _boundaries(mtc, boundaries)
    if len(bds) < 2:
        raise WilsonError("need at least two holes")
    if len(bds) == 2:
        n1, n2 = bds[0].multiplicities, bds[1].multiplicities
        dual = mtc.dual
        labels = tuple((s, mu, nu) for s in range(mtc.rank)
                       for mu in range(n1[dual[s]]) for nu in range(n2[s]))
        return GroundBasis(mtc, bds, labels)
    labels = []
    for charges, partials in _trees(mtc, [b.support for b in bds]):
        ranges = [range(b[a]) for a, b in zip(charges, bds)]
        for chan in itertools.product(*ranges):
            labels.append((charges, partials, chan))
    return GroundBasis(mtc, bds, tuple(labels))


def _two_hole(basis: GroundBasis) -> None:
    if basis.holes != 2:
        raise WilsonError("operator needs a two-hole basis")


def _msym_pair(msymbols) -> tuple[MSymbolSet, MSymbolSet]:
    if isinstance(msymbols, MSymbolSet):
        return msymbols, msymbols
    m1, m2 = msymbols
    return m1, m2


def tunnel_matrix(mtc: MtcData, msymbols, basis: GroundBasis, a, channel: int = 0) -> OperatorMatrix:
    """W_a(gamma): tunnel a from hole 1 to hole 2.

    Entry [c, b] = M^{abar bbar}_{cbar}(A_1) conj(M^{ab}_c(A_2)) sqrt(d_a d_b / d_c),
    taking the condensation channel ``channel`` for a itself.
    """
    _two_hole(basis)
    m1, m2 = _msym_pair(msymbols)
    for m, bd in ((m1, basis.boundaries[0]), (m2, basis.boundaries[1])):
        if m.boundary.multiplicities != bd.multiplicities:
            raise WilsonError(f"M symbols are for {m.boundary}, hole has {bd}")
    a = mtc.index(a)
    dual, dims = mtc.dual, mtc.dims
    abar = dual[a]
    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    if basis.boundaries[0][abar] <= channel or basis.boundaries[1][a] <= channel:
        return OperatorMatrix(basis, out, f"W_{mtc.labels[a]}(gamma)")
    pos = basis.position
    for (b, mu, nu), col in pos.items():
        for c in np.flatnonzero(mtc.fusion[a, b]):
            c = int(c)
            left = m1.block(abar, dual[b], dual[c])
            right = m2.block(a, b, c)
            if left.size == 0 or right.size == 0:
                continue
            w = math.sqrt(dims[a] * dims[b] / dims[c])
            for mu2 in range(left.shape[2]):
                for nu2 in range(right.shape[2]):
                    row = pos.get((c, mu2, nu2))
                    if row is not None:
                        out[row, col] += left[channel, mu, mu2] * np.conj(right[channel, nu, nu2]) * w
    return OperatorMatrix(basis, out, f"W_{mtc.labels[a]}(gamma)")


def loop_matrix(mtc: MtcData, basis: GroundBasis, hole_index: int, a) -> OperatorMatrix:
    """W_a(alpha_i): loop a around hole ``hole_index`` (1 or 2); diagonal S_ab / S_0b."""
    _two_hole(basis)
    if hole_index not in (1, 2):
        raise WilsonError("hole_index must be 1 or 2")
    a = mtc.index(a)
    S = mtc.s
    diag = []
    for s, _, _ in basis.labels:
        b = s if hole_index == 2 else mtc.dual[s]
        diag.append(S[a, b] / S[0, b])
    return OperatorMatrix(basis, np.diag(np.array(diag, dtype=complex)),
                          f"W_{mtc.labels[a]}(alpha_{hole_index})")


# -- braiding

class _TreeSpace:
    """Trees over the union of hole supports, with sparse braid generators."""

    def __init__(self, mtc: MtcData, n: int, support: tuple[int, ...]):
        if not mtc.has_fr:
            raise WilsonError(f"{mtc.name} has no F/R data (supply an F/R data file)")
        self.mtc = mtc
        self.trees = list(_trees(mtc, [support] * n))
        self.index = {t: i for i, t in enumerate(self.trees)}
        self.n = n

    def sigma(self, k: int, inverse: bool = False) -> np.ndarray:
        """Exchange of strands k, k+1 (1-based); ``inverse`` uses c^{-1}."""
        mtc, N = self.mtc, self.mtc.fusion
        out = np.zeros((len(self.trees),) * 2, dtype=complex)

        def r(x, y, z):
            return 1 / mtc.R(y, x, z) if inverse else mtc.R(x, y, z)

        for col, (charges, partials) in enumerate(self.trees):
            full = (charges[0],) + partials          # p_1 .. p_n
            ak, ak1 = charges[k - 1], charges[k]
            swapped = charges[:k - 1] + (ak1, ak) + charges[k + 1:]
            if k == 1:
                row = self.index[(swapped, partials)]
                out[row, col] += r(ak, ak1, full[1])
                continue
            left, top, mid = full[k - 2], full[k], full[k - 1]
            for y in np.flatnonzero(N[ak, ak1]):
                f1 = mtc.F(left, ak, ak1, top, mid, int(y))
                if f1 == 0:
                    continue
                ry = r(ak, ak1, int(y))
                for z in np.flatnonzero(N[left, ak1]):
                    f2 = mtc.F(left, ak1, ak, top, int(z), int(y))
                    if f2 == 0:
                        continue
                    new = list(partials)
                    new[k - 2] = int(z)
                    row = self.index[(swapped, tuple(new))]
                    out[row, col] += f1 * ry * np.conj(f2)
        return out


def _restriction(basis: GroundBasis, space: _TreeSpace) -> np.ndarray:
    """Row of the tree space for each basis label."""
    return np.array([space.index[(ch, p)] for ch, p, _ in basis.labels], dtype=int)


def _tree_space(basis: GroundBasis) -> _TreeSpace:
    if basis.holes < 3:
        raise WilsonError("braiding needs at least three holes")
    support = tuple(sorted(set().union(*(b.support for b in basis.boundaries))))
    return _TreeSpace(basis.mtc, basis.holes, support)


def _pure(basis: GroundBasis, space: _TreeSpace, word: list[tuple[int, int]], name: str) -> OperatorMatrix:
    """Product of sigma_k^{+-1} (applied right to left) restricted to the basis."""
    gens = {}
    op = np.eye(len(space.trees), dtype=complex)
    for k, e in reversed(word):
        if (k, e) not in gens:
            s = space.sigma(k, inverse=True)    # see braid_generators
            gens[k, e] = s if e > 0 else s.conj().T
        op = gens[k, e] @ op
    rows = _restriction(basis, space)
    block = op[np.ix_(rows, rows)]
    chans = [lab[2] for lab in basis.labels]
    same = np.array([[ci == cj for cj in chans] for ci in chans], dtype=bool)
    return OperatorMatrix(basis, np.where(same, block, 0), name)


def braid_generators(basis: GroundBasis) -> list[np.ndarray]:
    """sigma_1 .. sigma_{n-1} on the union tree space.

    The exchange is the inverse braiding c^{-1}, so that a full twist of hole 2
    around hole 3 multiplies |m^i, e^j> by omega^{ij} in D(Z_3).
    """
    space = _tree_space(basis)
    return [space.sigma(k, inverse=True) for k in range(1, basis.holes)]


def _pure_word(i: int, j: int) -> list[tuple[int, int]]:
    """A_ij = sigma_{j-1}..sigma_{i+1} sigma_i^2 sigma_{i+1}^-1..sigma_{j-1}^-1 (1-based)."""
    up = [(k, 1) for k in range(j - 1, i, -1)]
    down = [(k, -1) for k in range(i + 1, j)]
    return up + [(i, 1), (i, 1)] + down


def braid_sigma2_squared(mtc: MtcData, basis4: GroundBasis) -> OperatorMatrix:
    """Full twist of hole 2 around hole 3."""
    if basis4.mtc is not mtc:
        raise WilsonError("basis belongs to a different category")
    space = _tree_space(basis4)
    return _pure(basis4, space, [(2, 1), (2, 1)], "sigma_2^2")


def all_pure_braid_generators(mtc: MtcData, basis4: GroundBasis) -> dict[tuple[int, int], OperatorMatrix]:
    """A_ij for 1 <= i < j <= n."""
    if basis4.mtc is not mtc:
        raise WilsonError("basis belongs to a different category")
    space = _tree_space(basis4)
    n = basis4.holes
    return {(i, j): _pure(basis4, space, _pure_word(i, j), f"A_{i}{j}")
            for i in range(1, n) for j in range(i + 1, n + 1)}


def pure_braid_relation_residuals(gens: dict[tuple[int, int], OperatorMatrix]) -> dict[str, float]:
    """Max residuals of the defining relations of the spherical pure braid group.

    Checked: unitarity, A_rs^-1 A_ij A_rs = A_ij for disjoint or nested pairs,
    the triangle relations A_ij A_ik A_jk = A_ik A_jk A_ij = A_jk A_ij A_ik, and
    the sphere relation A_12 A_13 .. A_1n = 1.
    """
    n = max(j for _, j in gens)
    M = {k: v.entries for k, v in gens.items()}
    d = next(iter(M.values())).shape[0]
    eye = np.eye(d)
    res = {"unitary": 0.0, "commuting": 0.0, "triangle": 0.0, "sphere": 0.0}
    for m in M.values():
        res["unitary"] = max(res["unitary"], float(np.abs(m.conj().T @ m - eye).max(initial=0.0)))
    for (r, s), (i, j) in itertools.permutations(M, 2):
        if s < i or (r < i and j < s):
            diff = M[r, s] @ M[i, j] - M[i, j] @ M[r, s]
            res["commuting"] = max(res["commuting"], float(np.abs(diff).max(initial=0.0)))
    for i, j, k in itertools.combinations(range(1, n + 1), 3):
        x = M[i, j] @ M[i, k] @ M[j, k]
        y = M[i, k] @ M[j, k] @ M[i, j]
        z = M[j, k] @ M[i, j] @ M[i, k]
        res["triangle"] = max(res["triangle"], float(np.abs(x - y).max(initial=0.0)),
                              float(np.abs(x - z).max(initial=0.0)))
    prod = np.eye(d, dtype=complex)
    for j in range(2, n + 1):
        prod = prod @ M[1, j]
    res["sphere"] = float(np.abs(prod - eye).max(initial=0.0))
    return res


def logical_subspace(basis: GroundBasis) -> list[int]:
    """Channels where holes (1,2) and (3,4) each fuse to vacuum, ordered by (a_2, a_4)."""
    if basis.holes != 4:
        raise WilsonError("logical subspace is defined for four holes")
    picks = []
    for i, (charges, partials, chan) in enumerate(basis.labels):
        if partials[0] == 0:
            picks.append(((charges[1], charges[3], chan), i))
    return [i for _, i in sorted(picks)]


# -- topological charge measurement

@dataclass(frozen=True)
class _Factor:
    """B = C (x) Cbar for modular C: embedding (x, y) -> label of B."""

    s: np.ndarray
    theta: np.ndarray
    labels: tuple[str, ...]
    embed: np.ndarray           # embed[x, y]


def _balanced_s(theta: np.ndarray, fusion: np.ndarray) -> np.ndarray:
    """S_xa = (1/D) sum_c N_{xbar a}^c theta_c / (theta_x theta_a) d_c for a pointed category."""
    k = len(theta)
    dual = [int(np.flatnonzero(fusion[x, :, 0])[0]) for x in range(k)]
    S = np.zeros((k, k), dtype=complex)
    for x, a in itertools.product(range(k), repeat=2):
        for c in np.flatnonzero(fusion[dual[x], a]):
            S[x, a] += fusion[dual[x], a, c] * theta[c] / (theta[x] * theta[a])
    return S / math.sqrt(k)


def factor_double(mtc: MtcData, tol: float = 1e-9) -> _Factor:
    """Split D(Z_n), n odd, as C (x) Cbar with C = Z_n, theta_x = omega^{h x^2}, h = 2^-1 mod n.

    Embedding: x (x) y -> e^{x+y} m^{h(x-y)}. The split is verified against S of B.
    """
    k = mtc.rank
    n = int(round(math.sqrt(k)))
    labels = mtc.labels
    ok = n * n == k and n % 2 == 1 and all(labels[a1 + n * a2] == _zn(a1, a2, n)
                                           for a1 in range(n) for a2 in range(n))
    if not ok:
        raise WilsonError("charge projection requires modular input category "
                          f"({mtc.name} is not recognised as C (x) Cbar)")
    h = (n + 1) // 2
    w = np.exp(2j * np.pi / n)
    theta = np.array([w ** ((h * x * x) % n) for x in range(n)])
    N = np.zeros((n, n, n), dtype=int)
    for x, y in itertools.product(range(n), repeat=2):
        N[x, y, (x + y) % n] = 1
    S = _balanced_s(theta, N)
    embed = np.array([[(x + y) % n + n * ((h * (x - y)) % n) for y in range(n)] for x in range(n)])
    big = np.einsum("xa,yb->xyab", S, S.conj())
    for x, y, a, b in itertools.product(range(n), repeat=4):
        if abs(big[x, y, a, b] - mtc.s[embed[x, y], embed[a, b]]) > tol:
            raise WilsonError("charge projection requires modular input category (S does not factor)")
    for x, y in itertools.product(range(n), repeat=2):
        if abs(theta[x] * np.conj(theta[y]) - mtc.t[embed[x, y]]) > tol:
            raise WilsonError("charge projection requires modular input category (T does not factor)")
    return _Factor(S, theta, tuple(_zn(x, 0, n) for x in range(n)), embed)


def _zn(a1: int, a2: int, n: int) -> str:
    from .qdouble import zn_label
    return zn_label(a1, a2, n)


def charge_projection(mtc: MtcData, basis: GroundBasis, target: str, a, msymbols=None,
                      hole_index: int = 2) -> OperatorMatrix:
    """P^{(a)} = sum_x S_0a conj(S_xa) W_x, with S and the labels x of the factor C.

    ``target="arc"`` uses the tunneling operators W_{x xbar}(gamma) of B;
    ``target="loop"`` uses the loops W_x(alpha_i) of x (x) 1 around ``hole_index``.
    ``a`` is an index or label of C.
    """
    _two_hole(basis)
    fac = factor_double(mtc)
    a = fac.labels.index(a) if isinstance(a, str) else int(a)
    S = fac.s
    n = len(fac.labels)
    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    for x in range(n):
        coef = S[0, a] * np.conj(S[x, a])
        if target == "arc":
            if msymbols is None:
                raise WilsonError("arc projection needs M symbols")
            w = tunnel_matrix(mtc, msymbols, basis, int(fac.embed[x, x])).entries
        elif target == "loop":
            w = loop_matrix(mtc, basis, hole_index, int(fac.embed[x, 0])).entries
        else:
            raise WilsonError(f"unknown target {target!r} (arc, loop)")
        out += coef * w
    return OperatorMatrix(basis, out, f"P^({fac.labels[a]})_{target}")


def measurement_operator(ops: list[OperatorMatrix], tol: float = 1e-9) -> OperatorMatrix:
    """sqrt(alpha) H_1 .. H_k for Hermitian H_i with H_k .. H_1 = alpha H_1 .. H_k."""
    if not ops:
        raise WilsonError("need at least one operator")
    for h in ops:
        if not h.is_hermitian(tol):
            raise WilsonError(f"{h.name} is not Hermitian")
    fwd = ops[0].entries
    rev = ops[-1].entries
    for h in ops[1:]:
        fwd = fwd @ h.entries
    for h in reversed(ops[:-1]):
        rev = rev @ h.entries
    i = np.unravel_index(np.argmax(np.abs(fwd)), fwd.shape)
    if abs(fwd[i]) < tol:
        raise WilsonError("product of the operators vanishes")
    alpha = rev[i] / fwd[i]
    if abs(abs(alpha) - 1) > tol or np.abs(rev - alpha * fwd).max() > tol:
        raise WilsonError("not reversal-proportional")
    out = np.sqrt(alpha) * fwd
    name = "sqrt(alpha)*" + "*".join(h.name for h in ops)
    return OperatorMatrix(ops[0].basis, out, name)
