"""Modular tensor category data: container, D(Z_n) generator, JSON files,
Lagrangian-algebra search and the M-3j solver.

Conventions. Splitting vertices psi^{ab}_c : c -> a (x) b are isometries and

    (psi^{ab}_e (x) 1) psi^{ec}_d = sum_f F^{abc}_{d;ef} (1 (x) psi^{bc}_f) psi^{af}_d,
    c_{a,b} psi^{ab}_c = R^{ab}_c psi^{ba}_c.

For D(Z_n) this gives R^{ab} = omega^{a2 b1}. M symbols are defined by
m (iota_a (x) iota_b) = sum_c M^{ab}_c iota_c psi^{ab,dagger}_c for the
multiplication m of the condensable algebra, which yields

    sum_{e,s} M^{ab}_e[m,n,s] M^{ec}_d[s,l,p] conj(F^{abc}_{d;ef})
        = sum_t M^{bc}_f[n,l,t] M^{af}_d[m,t,p]                (pentagon)
    M^{ba}_c[n,m,l] R^{ab}_c = M^{ab}_c[m,n,l]                (braid)
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.linalg import expm
from scipy.optimize import least_squares

from .boundary_defect import LagrangianVector
from .qdouble import anyon_system, fusion_rules, zn_label
from .group_core import parse_group

__all__ = [
    "MtcError",
    "MtcData",
    "Residual",
    "MSymbolSet",
    "abelian_double",
    "double_of_group",
    "builtin_mtc",
    "bundled_data",
    "load_mtc",
    "save_mtc",
    "mtc_to_json",
    "mtc_from_json",
    "check_pentagon",
    "check_hexagon",
    "parse_lagrangian",
    "find_lagrangian_algebras",
    "m3j_residuals",
    "solve_m3j",
    "gauge_fix",
    "gauge_transform",
    "gauge_equivalent",
]

FORMAT = "qdlab-mtc/1"
EXHAUSTIVE_LIMIT = 16
LOAD_TOL = 1e-7


class MtcError(ValueError):
    pass


@dataclass(frozen=True)
class Residual:
    """Worst violation of an identity and where it occurs."""

    value: float
    identity: str
    indices: tuple = ()

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True, eq=False)
class MtcData:
    name: str
    labels: tuple[str, ...]
    s: np.ndarray
    t: np.ndarray
    fusion: np.ndarray
    f_symbols: dict = field(default_factory=dict)   # (a,b,c,d,e,f) -> complex
    r_symbols: dict = field(default_factory=dict)   # (a,b,c) -> complex
    trivial_f_default: bool = False

    @property
    def rank(self) -> int:
        return len(self.labels)

    @cached_property
    def dims(self) -> np.ndarray:
        return np.real(self.s[0] / self.s[0, 0])

    @cached_property
    def dual(self) -> tuple[int, ...]:
        return tuple(int(np.flatnonzero(self.fusion[a, :, 0])[0]) for a in range(self.rank))

    @property
    def total_dim(self) -> float:
        """D = sqrt(sum_a d_a^2) = 1/S_00."""
        return float(math.sqrt(np.sum(self.dims ** 2)))

    @property
    def has_fr(self) -> bool:
        return bool(self.r_symbols) and (bool(self.f_symbols) or self.trivial_f_default)

    def index(self, label: str | int) -> int:
        if isinstance(label, (int, np.integer)):
            return int(label)
        text = label.strip()
        if text in self.labels:
            return self.labels.index(text)
        alias = _alias(text, self.labels)
        if alias is not None:
            return alias
        raise MtcError(f"unknown anyon label {label!r} (known: {', '.join(self.labels)})")

    def admissible(self, a: int, b: int, c: int) -> bool:
        return bool(self.fusion[a, b, c])

    def F(self, a: int, b: int, c: int, d: int, e: int, f: int) -> complex:
        N = self.fusion
        if not (N[a, b, e] and N[e, c, d] and N[b, c, f] and N[a, f, d]):
            return 0.0
        key = (a, b, c, d, e, f)
        if key in self.f_symbols:
            return self.f_symbols[key]
        if self.trivial_f_default:
            return 1.0
        return 0.0

    def R(self, a: int, b: int, c: int) -> complex:
        if not self.fusion[a, b, c]:
            return 0.0
        return self.r_symbols.get((a, b, c), 0.0)


def _alias(text: str, labels: tuple[str, ...]) -> int | None:
    """bar/conjugate spellings used for D(Z_n) anyons: ebar, mbar, e^-1."""
    t = text.replace("ē", "ebar").replace("m̄", "mbar").replace("ē", "ebar")
    n = round(math.sqrt(len(labels)))
    for base in ("e", "m"):
        if t in (base + "bar", base + "^-1"):
            cand = zn_label(n - 1, 0, n) if base == "e" else zn_label(0, n - 1, n)
            if cand in labels:
                return labels.index(cand)
    if t == "eps" and "em" in labels:
        return labels.index("em")
    return None


def _dense_r(mtc: MtcData) -> np.ndarray:
    k = mtc.rank
    out = np.zeros((k, k, k), dtype=complex)
    for key, v in mtc.r_symbols.items():
        out[key] = v
    return out


# -- generators

def abelian_double(n: int) -> MtcData:
    """D(Z_n): labels e^a1 m^a2 at position a1 + n a2, F = 1, R^{ab} = omega^{a2 b1}."""
    if n < 2:
        raise MtcError("abelian_double needs n >= 2")
    w = np.exp(2j * np.pi / n)
    pairs = [(a1, a2) for a2 in range(n) for a1 in range(n)]
    k = n * n
    S = np.array([[w ** (-(a2 * b1 + a1 * b2)) for (b1, b2) in pairs] for (a1, a2) in pairs]) / n
    T = np.array([w ** (a1 * a2) for (a1, a2) in pairs])
    N = np.zeros((k, k, k), dtype=int)
    R = {}
    for i, (a1, a2) in enumerate(pairs):
        for j, (b1, b2) in enumerate(pairs):
            c = (a1 + b1) % n + n * ((a2 + b2) % n)
            N[i, j, c] = 1
            R[i, j, c] = complex(w ** ((a2 * b1) % n))
    name = "toric code D(Z2)" if n == 2 else f"D(Z{n})"
    return MtcData(name, tuple(zn_label(a1, a2, n) for a1, a2 in pairs), S, T, N,
                   {}, R, trivial_f_default=True)


def double_of_group(group: str) -> MtcData:
    """S, T and N of D(G) computed from group data (no F/R)."""
    sys_ = anyon_system(parse_group(group))
    return MtcData(f"D({sys_.group.name})", sys_.labels, np.array(sys_.s), np.array(sys_.t),
                   np.array(sys_.fusion))


def bundled_data(name: str) -> Path:
    """Path of a data file shipped with the package (e.g. ``ds3_fr.json``)."""
    return Path(str(resources.files("qdlab") / "data" / name))


@lru_cache(maxsize=16)
def builtin_mtc(name: str, fr_data: str | Path | None = None) -> MtcData:
    """``tc``, ``dz3``, ``dzN`` or ``ds3``. D(S3) carries F/R only when fr_data is given;
    ``fr_data="bundled"`` uses the shipped file."""
    key = name.lower().removeprefix("builtin:")
    if key in ("tc", "toric"):
        return abelian_double(2)
    if key.startswith("dz") and key[2:].isdigit():
        return abelian_double(int(key[2:]))
    if key == "ds3":
        base = double_of_group("s3")
        if fr_data is None:
            return base
        path = bundled_data("ds3_fr.json") if str(fr_data) == "bundled" else Path(fr_data)
        loaded = load_mtc(path)
        if loaded.labels != base.labels or np.max(np.abs(loaded.s - base.s)) > 1e-9 \
                or np.max(np.abs(loaded.t - base.t)) > 1e-9:
            raise MtcError(f"{path}: S/T data does not describe D(S3)")
        return loaded
    raise MtcError(f"unknown builtin category {name!r} (tc, dz3, dzN, ds3)")


# -- JSON

def _c(z: complex) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def mtc_to_json(mtc: MtcData) -> dict:
    L = mtc.labels
    N = mtc.fusion
    return {
        "format": FORMAT,
        "name": mtc.name,
        "labels": list(L),
        "S": [[_c(x) for x in row] for row in mtc.s],
        "T": [_c(x) for x in mtc.t],
        "N": [{"idx": [L[a], L[b], L[c]], "val": int(N[a, b, c])}
              for a, b, c in zip(*np.nonzero(N))],
        "trivial_F_default": bool(mtc.trivial_f_default),
        "F": [{"idx": [L[i] for i in key], "val": _c(v)} for key, v in sorted(mtc.f_symbols.items())],
        "R": [{"idx": [L[i] for i in key], "val": _c(v)} for key, v in sorted(mtc.r_symbols.items())],
    }


def save_mtc(mtc: MtcData, path: str | Path) -> None:
    Path(path).write_text(json.dumps(mtc_to_json(mtc), indent=1, sort_keys=True) + "\n")


def _complex(v, where: str) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    if isinstance(v, (int, float)):
        return complex(v)
    raise MtcError(f"{where}: expected a complex number [re, im], got {v!r}")


def mtc_from_json(obj: dict, source: str = "<json>", check: bool = True,
                  sample: int | None = None) -> MtcData:
    """Build and validate MtcData from a parsed JSON object."""
    if not isinstance(obj, dict):
        raise MtcError(f"{source}: top level must be an object")
    for key in ("labels", "S", "T"):
        if key not in obj:
            raise MtcError(f"{source}: missing field {key!r}")
    labels = tuple(str(x) for x in obj["labels"])
    k = len(labels)
    if k == 0 or len(set(labels)) != k:
        raise MtcError(f"{source}: labels must be non-empty and distinct")
    pos = {x: i for i, x in enumerate(labels)}

    def lab(x, where):
        if isinstance(x, int) and 0 <= x < k:
            return x
        if str(x) in pos:
            return pos[str(x)]
        raise MtcError(f"{where}: unknown label {x!r}")

    S = np.array([[_complex(x, f"{source}: S") for x in row] for row in obj["S"]])
    T = np.array([_complex(x, f"{source}: T") for x in obj["T"]])
    if S.shape != (k, k) or T.shape != (k,):
        raise MtcError(f"{source}: S must be {k}x{k} and T must have {k} entries")
    if np.max(np.abs(S @ S.conj().T - np.eye(k))) > LOAD_TOL:
        raise MtcError(f"{source}: S not unitary")
    if np.max(np.abs(np.abs(T) - 1)) > LOAD_TOL:
        raise MtcError(f"{source}: T not unimodular")
    try:
        N = fusion_rules(S)
    except ValueError as exc:
        raise MtcError(f"{source}: {exc}") from None
    if "N" in obj:
        given = np.zeros((k, k, k), dtype=int)
        for ent in obj["N"]:
            a, b, c = (lab(x, f"{source}: N") for x in ent["idx"])
            given[a, b, c] = int(ent["val"])
        if not np.array_equal(given, N):
            bad = tuple(int(x) for x in np.argwhere(given != N)[0])
            raise MtcError(f"{source}: embedded N disagrees with Verlinde(S) at "
                           f"({', '.join(labels[i] for i in bad)})")
    F = {}
    for ent in obj.get("F", []):
        key = tuple(lab(x, f"{source}: F") for x in ent["idx"])
        if len(key) != 6:
            raise MtcError(f"{source}: F index must have 6 labels")
        a, b, c, d, e, f = key
        if not (N[a, b, e] and N[e, c, d] and N[b, c, f] and N[a, f, d]):
            raise MtcError(f"{source}: F entry {[labels[i] for i in key]} is not admissible")
        F[key] = _complex(ent["val"], f"{source}: F")
    R = {}
    for ent in obj.get("R", []):
        key = tuple(lab(x, f"{source}: R") for x in ent["idx"])
        if len(key) != 3 or not N[key]:
            raise MtcError(f"{source}: R entry {[labels[i] for i in key]} is not admissible")
        R[key] = _complex(ent["val"], f"{source}: R")
    mtc = MtcData(str(obj.get("name", source)), labels, S, T, N, F, R,
                  bool(obj.get("trivial_F_default", False)))
    if check and mtc.has_fr:
        if N.max() > 1:
            raise MtcError(f"{source}: F/R data with fusion multiplicities is not supported")
        for res in (check_pentagon(mtc, sample), check_hexagon(mtc, sample)):
            if res.value >= LOAD_TOL:
                idx = ", ".join(labels[i] for i in res.indices)
                raise MtcError(f"{source}: {res.identity} fails at ({idx}) with residual {res.value:.3e}")
    return mtc


def load_mtc(path: str | Path, check: bool = True, sample: int | None = None) -> MtcData:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except FileNotFoundError:
        raise MtcError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise MtcError(f"{path}: invalid JSON ({exc})") from None
    return mtc_from_json(obj, str(path), check, sample)


# -- pentagon / hexagon

def _outer_tuples(k: int, sample: int | None, seed: int):
    if sample is None and k <= EXHAUSTIVE_LIMIT:
        return itertools.product(range(k), repeat=4)
    rng = np.random.default_rng(seed)
    return (tuple(int(x) for x in rng.integers(0, k, 4)) for _ in range(sample or 4096))


def _inverse_r(R: np.ndarray) -> np.ndarray:
    """Rinv[a,b,c] = 1/R[b,a,c] on admissible entries (reverse braiding)."""
    Rt = R.transpose(1, 0, 2)
    nz = np.abs(Rt) > 0
    return np.where(nz, 1 / np.where(nz, Rt, 1), 0)


def check_pentagon(mtc: MtcData, sample: int | None = None) -> Residual:
    """max |F^{fcd}_{e;gl} F^{abl}_{e;fk} - sum_h F^{abc}_{g;fh} F^{ahd}_{e;gk} F^{bcd}_{k;hl}|."""
    k = mtc.rank
    worst = Residual(0.0, "pentagon")
    N = mtc.fusion
    prod = [[np.flatnonzero(N[x, y]) for y in range(k)] for x in range(k)]
    for a, b, c, d in _outer_tuples(k, sample, 0):
        for f in prod[a][b]:
            for g in prod[f][c]:
                for e in prod[g][d]:
                    for l in prod[c][d]:
                        for kk in prod[b][l]:
                            if not N[a, kk, e]:
                                continue
                            lhs = mtc.F(f, c, d, e, g, l) * mtc.F(a, b, l, e, f, kk)
                            rhs = sum(mtc.F(a, b, c, g, f, h) * mtc.F(a, h, d, e, g, kk)
                                      * mtc.F(b, c, d, kk, h, l) for h in prod[b][c])
                            if abs(lhs - rhs) > worst.value:
                                worst = Residual(abs(lhs - rhs), "pentagon",
                                                 (a, b, c, d, int(e), int(f), int(g), int(kk), int(l)))
    return worst


def check_hexagon(mtc: MtcData, sample: int | None = None) -> Residual:
    """sum_g F^{abc}_{d;eg} R^{ag}_d F^{bca}_{d;gf} = R^{ab}_e F^{bac}_{d;ef} R^{ac}_f,
    and the same identity for the reverse braiding R^{xy} -> 1/R^{yx}."""
    k = mtc.rank
    R = _dense_r(mtc)
    worst = Residual(0.0, "hexagon")
    variants = (("hexagon", R), ("inverse hexagon", _inverse_r(R)))
    N = mtc.fusion
    for a, b, c, d in _outer_tuples(k, sample, 1):
        for name, RR in variants:
            for e in np.flatnonzero(N[a, b]):
                for f in np.flatnonzero(N[a, c]):
                    lhs = sum(mtc.F(a, b, c, d, e, g) * RR[a, g, d] * mtc.F(b, c, a, d, g, f)
                              for g in np.flatnonzero(N[b, c]))
                    rhs = RR[a, b, e] * mtc.F(b, a, c, d, e, f) * RR[a, c, f]
                    if abs(lhs - rhs) > worst.value:
                        worst = Residual(abs(lhs - rhs), name, (a, b, c, d, int(e), int(f)))
    return worst


# -- Lagrangian algebras

def parse_lagrangian(mtc: MtcData, text: str | LagrangianVector) -> LagrangianVector:
    """Parse ``A+B+2C`` (or ``1+e+ebar``) into a multiplicity vector."""
    if isinstance(text, LagrangianVector):
        return text
    n = [0] * mtc.rank
    for part in str(text).replace(" ", "").split("+"):
        if not part:
            raise MtcError(f"malformed algebra {text!r}")
        digits = len(part) - len(part.lstrip("0123456789"))
        # a leading digit is a multiplicity unless the whole token is a label (e.g. "1")
        if digits and part not in mtc.labels and part[digits:]:
            mult, lab = int(part[:digits]), part[digits:]
        else:
            mult, lab = 1, part
        n[mtc.index(lab)] += mult
    return LagrangianVector(tuple(n), mtc.labels)


def find_lagrangian_algebras(mtc: MtcData, tol: float = 1e-9) -> list[LagrangianVector]:
    """All multiplicity vectors with n_0 = 1, bosonic support, sum n_a d_a = D and
    n_a n_b <= sum_c N_ab^c n_c, by depth-first search (largest vector first)."""
    dims = mtc.dims
    D = mtc.total_dim
    bosons = [a for a in range(1, mtc.rank) if abs(mtc.t[a] - 1) < tol]
    N = mtc.fusion
    found = []
    n = np.zeros(mtc.rank, dtype=int)
    n[0] = 1

    def dfs(pos: int, budget: float):
        if abs(budget) < tol:
            lhs = np.outer(n, n)
            rhs = np.tensordot(N, n, axes=([2], [0]))
            if not np.any(lhs > rhs):
                found.append(LagrangianVector(tuple(int(x) for x in n), mtc.labels))
            return
        if pos == len(bosons):
            return
        a = bosons[pos]
        for m in range(int((budget + tol) // dims[a]), -1, -1):
            n[a] = m
            if m <= 1 or m * m <= n @ N[a, a]:
                dfs(pos + 1, budget - m * dims[a])
        n[a] = 0

    dfs(0, D - 1.0)
    found.sort(key=lambda v: tuple(-x for x in v.multiplicities))
    return found


# -- M-3j symbols

@dataclass(frozen=True, eq=False)
class MSymbolSet:
    """M^{ab}_c blocks of shape (n_a, n_b, n_c) for a condensable algebra."""

    mtc: MtcData
    boundary: LagrangianVector
    values: dict            # (a, b, c) -> ndarray
    normalization: str = "quantum_dim"

    def block(self, a: int, b: int, c: int) -> np.ndarray:
        if (a, b, c) in self.values:
            return self.values[a, b, c]
        n = self.boundary.multiplicities
        return np.zeros((n[a], n[b], n[c]), dtype=complex)

    def __call__(self, a, b, c, mu: int = 0, nu: int = 0, lam: int = 0) -> complex:
        ia, ib, ic = (self.mtc.index(x) for x in (a, b, c))
        blk = self.block(ia, ib, ic)
        if blk.size == 0:
            return 0.0
        return complex(blk[mu, nu, lam])

    def items(self):
        for key in sorted(self.values):
            yield key, self.values[key]


def _norm_value(mtc: MtcData, boundary: LagrangianVector, a: int, normalization: str) -> float:
    if normalization == "quantum_dim":
        return 1.0 / math.sqrt(mtc.dims[a])
    if normalization == "algebra_dim":
        return 1.0 / math.sqrt(float(np.dot(boundary.multiplicities, mtc.dims)))
    raise MtcError(f"unknown normalization {normalization!r}")


@dataclass
class _System:
    """Pentagon and braid equations as sums of coef * m[i] * m[j] over scalar slots."""

    slots: dict          # (a, b, c, mu, nu, lam) -> slot
    fixed: dict          # slot -> value
    eq: np.ndarray
    i: np.ndarray
    j: np.ndarray
    coef: np.ndarray
    kind: np.ndarray     # per equation: 0 pentagon, 1 braid
    one: int

    @property
    def nslots(self) -> int:
        return self.one + 1

    @cached_property
    def variables(self) -> np.ndarray:
        return np.array([s for s in range(self.one) if s not in self.fixed], dtype=np.int64)

    def full(self, z: np.ndarray) -> np.ndarray:
        m = np.zeros(self.nslots, dtype=complex)
        m[self.one] = 1.0
        for s, v in self.fixed.items():
            m[s] = v
        m[self.variables] = z
        return m

    def residual(self, m: np.ndarray) -> np.ndarray:
        terms = self.coef * m[self.i] * m[self.j]
        neq = len(self.kind)
        return (np.bincount(self.eq, terms.real, neq) + 1j * np.bincount(self.eq, terms.imag, neq))

    def jacobian(self, m: np.ndarray) -> np.ndarray:
        J = np.zeros((len(self.kind), self.nslots), dtype=complex)
        np.add.at(J, (self.eq, self.i), self.coef * m[self.j])
        np.add.at(J, (self.eq, self.j), self.coef * m[self.i])
        return J[:, self.variables]


def _build_system(mtc: MtcData, boundary: LagrangianVector, normalization: str) -> _System:
    if not mtc.has_fr:
        raise MtcError(f"{mtc.name}: F and R symbols are required (supply F/R data)")
    problems = boundary.check(mtc.dims, mtc.t, mtc.fusion)
    if problems:
        raise MtcError(f"{boundary} is not Lagrangian: {'; '.join(problems)}")
    N, n = mtc.fusion, boundary.multiplicities
    sup = boundary.support
    dual = mtc.dual
    slots, fixed = {}, {}
    for a, b, c in itertools.product(sup, repeat=3):
        if not N[a, b, c]:
            continue
        for mu, nu, lam in itertools.product(range(n[a]), range(n[b]), range(n[c])):
            s = slots[a, b, c, mu, nu, lam] = len(slots)
            if a == 0:
                fixed[s] = float(nu == lam)
            elif b == 0:
                fixed[s] = float(mu == lam)
            elif c == 0 and b == dual[a]:
                fixed[s] = float(mu == nu) * _norm_value(mtc, boundary, a, normalization)
    one = len(slots)
    eq, ii, jj, coef, kind = [], [], [], [], []

    def add(e, i, j, c):
        eq.append(e), ii.append(i), jj.append(j), coef.append(c)

    for a, b, c, d in itertools.product(sup, repeat=4):
        es = [e for e in sup if N[a, b, e] and N[e, c, d]]
        fs = [f for f in range(mtc.rank) if N[b, c, f] and N[a, f, d]]
        for f in fs:
            conjF = {e: np.conj(mtc.F(a, b, c, d, e, f)) for e in es}
            for mu, nu, lam, phi in itertools.product(range(n[a]), range(n[b]), range(n[c]), range(n[d])):
                k = len(kind)
                touched = False
                for e in es:
                    if abs(conjF[e]) < 1e-14:
                        continue
                    for sg in range(n[e]):
                        add(k, slots[a, b, e, mu, nu, sg], slots[e, c, d, sg, lam, phi], conjF[e])
                        touched = True
                if n[f]:
                    for ps in range(n[f]):
                        add(k, slots[b, c, f, nu, lam, ps], slots[a, f, d, mu, ps, phi], -1.0)
                        touched = True
                if touched:
                    kind.append(0)
    for a, b, c in itertools.product(sup, repeat=3):
        if not N[a, b, c]:
            continue
        r = mtc.R(a, b, c)
        for mu, nu, lam in itertools.product(range(n[a]), range(n[b]), range(n[c])):
            k = len(kind)
            add(k, slots[b, a, c, nu, mu, lam], one, r)
            add(k, slots[a, b, c, mu, nu, lam], one, -1.0)
            kind.append(1)
    return _System(slots, fixed, np.array(eq, dtype=np.int64), np.array(ii, dtype=np.int64),
                   np.array(jj, dtype=np.int64), np.array(coef, dtype=complex),
                   np.array(kind, dtype=np.int64), one)


def _to_set(mtc, boundary, system: _System, m: np.ndarray, normalization: str) -> MSymbolSet:
    n = boundary.multiplicities
    values = {}
    for (a, b, c, mu, nu, lam), s in system.slots.items():
        blk = values.setdefault((a, b, c), np.zeros((n[a], n[b], n[c]), dtype=complex))
        blk[mu, nu, lam] = m[s]
    for blk in values.values():
        blk.real[np.abs(blk.real) < 1e-14] = 0.0
        blk.imag[np.abs(blk.imag) < 1e-14] = 0.0
    return MSymbolSet(mtc, boundary, values, normalization)


def _normalization_residual(msym: MSymbolSet) -> float:
    """Deviation from M^{1a}_a = M^{a1}_a = 1 and M^{a abar}_1 = norm_a (entrywise)."""
    n, dual = msym.boundary.multiplicities, msym.mtc.dual
    worst = 0.0
    for a in msym.boundary.support:
        eye = np.eye(n[a])
        pair = msym.block(a, dual[a], 0)[:, :, 0] if n[dual[a]] else np.zeros((n[a], 0))
        want = eye * _norm_value(msym.mtc, msym.boundary, a, msym.normalization)
        worst = max(worst,
                    float(np.abs(msym.block(0, a, a)[0] - eye).max(initial=0.0)),
                    float(np.abs(msym.block(a, 0, a)[:, 0, :] - eye).max(initial=0.0)),
                    float(np.abs(pair - want).max(initial=0.0)) if pair.shape == want.shape else 1.0)
    return worst


def m3j_residuals(msym: MSymbolSet) -> dict[str, float]:
    """Max residuals of the pentagon, braid and normalization conditions."""
    system = _build_system(msym.mtc, msym.boundary, msym.normalization)
    m = np.zeros(system.nslots, dtype=complex)
    m[system.one] = 1.0
    for (a, b, c, mu, nu, lam), s in system.slots.items():
        m[s] = msym.block(a, b, c)[mu, nu, lam]
    r = np.abs(system.residual(m))
    norm = max((abs(m[s] - v) for s, v in system.fixed.items()), default=0.0)
    return {
        "pentagon": float(r[system.kind == 0].max(initial=0.0)),
        "braid": float(r[system.kind == 1].max(initial=0.0)),
        "normalization": float(norm),
    }


def solve_m3j(mtc: MtcData, boundary: LagrangianVector | str, seed: int = 0,
              restarts: int = 64, normalization: str = "quantum_dim",
              tol: float = 1e-9) -> MSymbolSet:
    """Solve the pentagon and braid equations with the normalizations imposed exactly.

    ``normalization="quantum_dim"`` sets M^{a abar}_1 = 1/sqrt(d_a) (the value the
    tunneling matrices require); ``"algebra_dim"`` uses 1/sqrt(dim A).
    """
    boundary = parse_lagrangian(mtc, boundary)
    system = _build_system(mtc, boundary, normalization)
    nv = len(system.variables)
    best_res, best_m = np.inf, None

    def fun(x):
        r = system.residual(system.full(x[:nv] + 1j * x[nv:]))
        return np.concatenate([r.real, r.imag])

    def jac(x):
        J = system.jacobian(system.full(x[:nv] + 1j * x[nv:]))
        return np.block([[J.real, -J.imag], [J.imag, J.real]])

    rng = np.random.default_rng(seed)
    starts = [np.ones(nv, dtype=complex)]
    starts += [rng.normal(size=nv) + 1j * rng.normal(size=nv) for _ in range(restarts)]
    for z0 in starts:
        if nv == 0:
            m = system.full(np.zeros(0, dtype=complex))
        else:
            x0 = np.concatenate([z0.real, z0.imag])
            sol = least_squares(fun, x0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                max_nfev=2000)
            m = system.full(sol.x[:nv] + 1j * sol.x[nv:])
        res = float(np.abs(system.residual(m)).max(initial=0.0))
        if res < best_res:
            best_res, best_m = res, m
        if res < tol:
            return gauge_fix(_to_set(mtc, boundary, system, m, normalization))
    raise MtcError(f"M-3j solver did not converge for {boundary} (best residual {best_res:.3e})")


def gauge_transform(msym: MSymbolSet, gammas: dict) -> MSymbolSet:
    """M~^{ab}_c = Gamma^a Gamma^b M^{ab}_c (Gamma^c)^-1 with unitary Gamma per label."""
    n = msym.boundary.multiplicities
    G = {a: np.atleast_2d(np.asarray(gammas.get(a, np.eye(n[a])), dtype=complex)) for a in msym.boundary.support}
    G[0] = np.eye(1)
    values = {}
    for (a, b, c), blk in msym.values.items():
        values[a, b, c] = np.einsum("mi,nj,ijk,lk->mnl", G[a], G[b], blk, np.linalg.inv(G[c]))
    return MSymbolSet(msym.mtc, msym.boundary, values, msym.normalization)


def gauge_fix(msym: MSymbolSet) -> MSymbolSet:
    """Rotate the first nonzero M^{aa}_c (a, c nontrivial) to Im >= 0, then Re >= 0.

    The only freedom is a phase Gamma^c (with Gamma^cbar = conj Gamma^c so the
    normalizations survive); self-dual c only admits a sign.
    """
    dual = msym.mtc.dual
    for (a, b, c), blk in msym.items():
        if a != b or a == 0 or c == 0:
            continue
        flat = blk.ravel()
        nz = np.flatnonzero(np.abs(flat) > 1e-12)
        if not len(nz):
            continue
        v = flat[nz[0]]
        # exponent of e^{i phi} picked up by M^{aa}_c when Gamma^c = e^{i phi}
        def charge(x):
            return (x == c) - (x == dual[c]) if dual[c] != c else 0
        k = 2 * charge(a) - charge(c)
        if dual[c] == c:
            flip = v.imag < -1e-12 or (abs(v.imag) <= 1e-12 and v.real < 0)
            # a sign on Gamma^c multiplies M^{aa}_c by -1 (a == c gives the same)
            if flip:
                n = msym.boundary.multiplicities
                return gauge_transform(msym, {c: -np.eye(n[c])})
            return msym
        if k == 0:
            continue
        phi = -np.angle(v) / k
        n = msym.boundary.multiplicities
        gam = {c: np.exp(1j * phi) * np.eye(n[c]), dual[c]: np.exp(-1j * phi) * np.eye(n[dual[c]])}
        return gauge_transform(msym, gam)
    return msym


def gauge_equivalent(A: MSymbolSet, B: MSymbolSet, tol: float = 1e-8, seed: int = 0,
                     restarts: int = 32) -> bool:
    """True iff B = gauge_transform(A, Gamma) for some unitary Gamma^a."""
    if A.boundary != B.boundary:
        return False
    if _normalization_residual(A) > tol or _normalization_residual(B) > tol:
        return False
    keys = sorted(set(A.values) | set(B.values))
    for key in keys:
        if abs(np.linalg.norm(A.block(*key)) - np.linalg.norm(B.block(*key))) > tol:
            return False
    n = A.boundary.multiplicities
    labels = [a for a in A.boundary.support if a != 0]
    sizes = [n[a] ** 2 for a in labels]
    target = np.concatenate([B.block(*k).ravel() for k in keys])

    def unpack(x):
        out, pos = {}, 0
        for a, sz in zip(labels, sizes):
            h = x[pos:pos + sz].reshape(n[a], n[a])
            herm = np.triu(h) + np.triu(h, 1).T + 1j * (np.tril(h, -1) - np.tril(h, -1).T)
            out[a] = expm(1j * herm)
            pos += sz
        return out

    def fun(x):
        T = gauge_transform(A, unpack(x))
        d = np.concatenate([T.block(*k).ravel() for k in keys]) - target
        return np.concatenate([d.real, d.imag])

    total = sum(sizes)
    if total == 0:
        return float(np.abs(fun(np.zeros(0))).max(initial=0.0)) < tol
    rng = np.random.default_rng(seed)
    starts = [np.zeros(total)] + [rng.uniform(-np.pi, np.pi, total) for _ in range(restarts)]
    for x0 in starts:
        sol = least_squares(fun, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if np.abs(sol.fun).max(initial=0.0) < tol:
            return True
    return False
