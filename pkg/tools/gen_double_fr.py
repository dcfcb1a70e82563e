"""Generate F and R symbols of D(G) from explicit irreps and write an MTC JSON file.

Usage: python3 tools/gen_double_fr.py s3 src/qdlab/data/ds3_fr.json

Conventions (the ones mtc_data checks):
  splitting vertices psi^{ab}_c : V_c -> V_a (x) V_b are isometries,
  (psi^{ab}_e (x) 1) psi^{ec}_d = sum_f F^{abc}_{d;ef} (1 (x) psi^{bc}_f) psi^{af}_d,
  c_{a,b} psi^{ab}_c = R^{ab}_c psi^{ba}_c with c_{V,W}(v (x) w) = sum_g g.w (x) delta_g.v.
Only multiplicity-free doubles are supported.
"""

from __future__ import annotations

import argparse
import itertools
import sys

import numpy as np

from qdlab.group_core import matrix_irreps, parse_group
from qdlab.mtc_data import MtcData, check_hexagon, check_pentagon, save_mtc
from qdlab.qdouble import anyon_system


def _anyon_rep(G, anyon):
    """Matrices rho(g) and flux projectors rho(delta_h) on C[class] (x) V_pi."""
    cls = anyon.cls
    irr = matrix_irreps(cls.centralizer.group)[anyon.irrep]
    loc = cls.centralizer.local
    n, d = cls.size, irr.dim
    pos = cls.position
    trans = [cls.transversal_of(c) for c in cls.elements]
    rho_g = np.zeros((G.order, n * d, n * d), dtype=complex)
    for g in range(G.order):
        for i, p in enumerate(trans):
            gp = G.m(g, p)
            j = pos[G.conj(gp, cls.representative)]
            k = G.m(int(G.inv[trans[j]]), gp)
            rho_g[g, j * d:(j + 1) * d, i * d:(i + 1) * d] = irr(loc[k])
    flux = np.zeros(n * d, dtype=int)
    for i, c in enumerate(cls.elements):
        flux[i * d:(i + 1) * d] = c
    return rho_g, flux


class _Rep:
    def __init__(self, G, rho_g, flux):
        self.G, self.rho_g, self.flux = G, rho_g, flux

    @property
    def dim(self):
        return len(self.flux)

    def tensor(self, other):
        G = self.G
        rho = np.einsum("gij,gkl->gikjl", self.rho_g, other.rho_g).reshape(
            G.order, self.dim * other.dim, self.dim * other.dim)
        flux = G.mul[self.flux[:, None], other.flux[None, :]].ravel()
        return _Rep(G, rho, flux)


def _generators(G):
    gens, span = [], {0}
    for g in range(G.order):
        if g not in span:
            gens.append(g)
            frontier = set(span)
            while frontier:
                new = {G.m(x, y) for x in frontier for y in gens} - span
                span |= new
                frontier = new
    return gens


def _intertwiners(G, gens, target, source):
    """Orthonormal isometries iota : V_source -> V_target commuting with D(G)."""
    m, n = target.dim, source.dim
    allowed = (target.flux[:, None] == source.flux[None, :]).ravel()
    cols = np.flatnonzero(allowed)
    eqs = []
    for g in gens:
        big = np.kron(target.rho_g[g], np.eye(n)) - np.kron(np.eye(m), source.rho_g[g].T)
        eqs.append(big[:, cols])
    A = np.concatenate(eqs)
    _, s, vh = np.linalg.svd(A)
    null = vh[np.sum(s > 1e-9):].conj()
    out = []
    for v in null:
        full = np.zeros(m * n, dtype=complex)
        full[cols] = v
        iota = full.reshape(m, n)
        iota /= np.sqrt(np.real(np.trace(iota.conj().T @ iota)) / n)
        flat = iota.ravel()
        lead = flat[np.flatnonzero(np.abs(flat) > 1e-9)[0]]
        out.append(iota * (abs(lead) / lead))
    return out


def double_fr(group_text: str) -> MtcData:
    G = parse_group(group_text)
    sys_ = anyon_system(G)
    k = len(sys_.anyons)
    gens = _generators(G)
    reps = [_Rep(G, *_anyon_rep(G, a)) for a in sys_.anyons]
    N = sys_.fusion
    if N.max() > 1:
        raise SystemExit("fusion multiplicities are not supported")
    psi = {}
    for a, b in itertools.product(range(k), repeat=2):
        ab = reps[a].tensor(reps[b])
        for c in np.flatnonzero(N[a, b]):
            found = _intertwiners(G, gens, ab, reps[c])
            assert len(found) == 1
            psi[a, b, int(c)] = found[0]

    F = {}
    for a, b, c in itertools.product(range(k), repeat=3):
        da, db, dc = reps[a].dim, reps[b].dim, reps[c].dim
        for d in range(k):
            es = [e for e in range(k) if N[a, b, e] and N[e, c, d]]
            fs = [f for f in range(k) if N[b, c, f] and N[a, f, d]]
            for e in es:
                left = np.kron(psi[a, b, e], np.eye(dc)) @ psi[e, c, d]
                for f in fs:
                    right = np.kron(np.eye(da), psi[b, c, f]) @ psi[a, f, d]
                    val = np.trace(right.conj().T @ left) / reps[d].dim
                    if abs(val) > 1e-12:
                        F[a, b, c, d, e, f] = complex(val)
    R = {}
    for a, b in itertools.product(range(k), repeat=2):
        da, db = reps[a].dim, reps[b].dim
        swap = np.zeros((db * da, da * db), dtype=complex)
        for i, j in itertools.product(range(da), range(db)):
            fa = reps[a].flux[i]
            # c_{a,b}(v_i (x) w_j) = rho_b(flux of v_i) w_j (x) v_i
            swap[:, i * db + j] = np.kron(reps[b].rho_g[fa][:, j], np.eye(da)[:, i])
        for c in np.flatnonzero(N[a, b]):
            lhs = swap @ psi[a, b, int(c)]
            rhs = psi[b, a, int(c)]
            R[a, b, int(c)] = complex(np.trace(rhs.conj().T @ lhs) / reps[int(c)].dim)
    return MtcData(
        name=f"D({G.name})",
        labels=sys_.labels,
        s=np.array(sys_.s),
        t=np.array(sys_.t),
        fusion=np.array(N),
        f_symbols=F,
        r_symbols=R,
    )


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("group")
    ap.add_argument("out")
    args = ap.parse_args(argv)
    mtc = double_fr(args.group)
    pent, hexa = check_pentagon(mtc).value, check_hexagon(mtc).value
    ribbon = max(abs(mtc.r_symbols[a, b, c] * mtc.r_symbols[b, a, c] - mtc.t[c] / (mtc.t[a] * mtc.t[b]))
                 for (a, b, c) in mtc.r_symbols)
    print(f"pentagon {pent:.2e}  hexagon {hexa:.2e}  ribbon {ribbon:.2e}", file=sys.stderr)
    if max(pent, hexa, ribbon) > 1e-9:
        raise SystemExit("generated data failed its own consistency checks")
    save_mtc(mtc, args.out)


if __name__ == "__main__":
    main()
