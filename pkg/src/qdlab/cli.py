"""qdlab command line.

Every command prints a table by default or JSON with --json. JSON numbers
carry 12 significant digits and complex values are [re, im] pairs; tables use
6 significant digits. Usage errors exit 2, domain errors exit 1 with a
structured message on stderr, failed checks exit 1 after printing the report.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .boundary_defect import boundary_excitations, boundary_label, condensation_map, defect_types
from .group_core import GroupError, parse_group, parse_subgroup
from .hopf_algebra import verify_quasi_hopf
from .lattice_sim import (
    PRESETS,
    LatticeError,
    build_terms,
    column_ribbon,
    dump_state,
    gsd_formula,
    ground_space_dimension,
    ground_state,
    row_ribbon,
    spec_from_dict,
    spec_to_dict,
    verify_commuting,
)
from .mtc_data import (
    MtcData,
    MtcError,
    builtin_mtc,
    double_of_group,
    find_lagrangian_algebras,
    load_mtc,
    m3j_residuals,
    parse_lagrangian,
    solve_m3j,
)
from .qdouble import anyon_system

__all__ = ["main", "dispatch", "CommandResult"]


class CommandResult:
    def __init__(self, code: int, report: dict, table: str):
        self.code, self.report, self.table = code, report, table


class DomainError(Exception):
    pass


# ---------------------------------------------------------------- formatting

def _clean(x: float, digits: int) -> float:
    if not math.isfinite(x):
        raise DomainError(f"non-finite value {x}")
    if abs(x) < 10.0 ** -(digits + 1):
        return 0.0
    return float(f"{x:.{digits}g}") + 0.0


def jsonable(obj, digits: int = 12):
    """Recursively convert numpy/complex values; complex becomes [re, im]."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist(), digits)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(obj.real, digits), _clean(obj.imag, digits)]
    if isinstance(obj, (float, np.floating)):
        return _clean(float(obj), digits)
    return obj


def fmt(z, digits: int = 6) -> str:
    z = complex(z)
    re, im = _clean(z.real, digits), _clean(z.imag, digits)
    if im == 0:
        return f"{re:.{digits}g}"
    if re == 0:
        return f"{im:.{digits}g}i"
    return f"{re:.{digits}g}{'+' if im > 0 else '-'}{abs(im):.{digits}g}i"


def table(header: list[str], rows: list[list]) -> str:
    cells = [[str(c) for c in header]] + [[c if isinstance(c, str) else fmt(c) for c in r]
                                          for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def matrix_table(labels: list[str], m: np.ndarray) -> str:
    return table([""] + list(labels), [[labels[i]] + list(m[i]) for i in range(len(labels))])


# ---------------------------------------------------------------- loading

def load_target(text: str, fr_data: str | None) -> MtcData:
    """builtin:NAME, an MTC JSON file, or a group spec (F/R absent)."""
    if text.startswith("builtin:"):
        return builtin_mtc(text, fr_data)
    if text.endswith(".json") and Path(text).exists():
        data = json.loads(Path(text).read_text())
        if "labels" in data:
            return load_mtc(text)
    return double_of_group(text)


def _group(text: str):
    return parse_group(text)


def _anyon_index(mtc: MtcData, label: str) -> int:
    if label not in mtc.labels:
        raise DomainError(f"unknown anyon {label!r}; known: {', '.join(mtc.labels)}")
    return mtc.index(label)


# ---------------------------------------------------------------- commands

def cmd_anyons(a) -> CommandResult:
    G = _group(a.group)
    sys_ = anyon_system(G)
    rows = [[x.label, str(x.cls.size), str(x.irrep_dim), str(x.fpdim)] for x in sys_.anyons]
    report = {"group": G.name, "count": len(rows),
              "anyons": [{"label": x.label, "class_size": x.cls.size, "irrep_dim": x.irrep_dim,
                          "fpdim": x.fpdim, "class_representative": G.labels[x.cls.representative]}
                         for x in sys_.anyons]}
    return CommandResult(0, report, table(["label", "|C|", "dim pi", "FPdim"], rows))


def cmd_modular(a) -> CommandResult:
    mtc = load_target(a.target, a.fr_data)
    labels = list(mtc.labels)
    report = {"name": mtc.name, "labels": labels, "S": mtc.s, "T": mtc.t}
    text = "S\n" + matrix_table(labels, mtc.s) + "\n\nT\n" + table(labels, [list(mtc.t)])
    return CommandResult(0, report, text)


def cmd_fusion(a) -> CommandResult:
    mtc = load_target(a.target, a.fr_data)
    labels = list(mtc.labels)
    N = np.asarray(mtc.fusion)
    if a.pair:
        x, y = (_anyon_index(mtc, s) for s in a.pair)
        out = {labels[c]: int(N[x, y, c]) for c in range(len(labels)) if N[x, y, c]}
        text = f"{labels[x]} x {labels[y]} = " + " + ".join(
            (f"{n}" if n > 1 else "") + c for c, n in out.items())
        return CommandResult(0, {"a": labels[x], "b": labels[y], "product": out}, text)
    rows = []
    for x in range(len(labels)):
        row = [labels[x]]
        for y in range(len(labels)):
            row.append("+".join((f"{N[x, y, c]}" if N[x, y, c] > 1 else "") + labels[c]
                                for c in range(len(labels)) if N[x, y, c]))
        rows.append(row)
    return CommandResult(0, {"labels": labels, "N": N}, table([""] + labels, rows))


def cmd_boundary(a) -> CommandResult:
    G = _group(a.group)
    K = parse_subgroup(G, a.subgroup)
    cm = condensation_map(G, K)
    lag = boundary_label(G, K)
    exc = boundary_excitations(G, K)
    maps = {}
    for i, x in enumerate(cm.anyons):
        parts = [(f"{int(n)}" if n > 1 else "") + exc[j].label
                 for j, n in enumerate(cm.coefficients[i]) if n]
        maps[x.label] = " + ".join(parts) if parts else "0"
    report = {"group": G.name, "subgroup": K.describe(), "lagrangian": str(lag),
              "excitations": [{"label": e.label, "fpdim": e.fpdim} for e in exc],
              "condensation": maps}
    text = (f"boundary {K.describe()} of D({G.name}): {lag}\n\n"
            + table(["excitation", "FPdim"], [[e.label, e.fpdim] for e in exc]) + "\n\n"
            + table(["anyon", "condenses to"], [[k, v] for k, v in maps.items()]))
    return CommandResult(0, report, text)


def cmd_defects(a) -> CommandResult:
    G = _group(a.group)
    K1, K2 = parse_subgroup(G, a.k1), parse_subgroup(G, a.k2)
    ds = defect_types(G, K1, K2)
    report = {"group": G.name, "K1": K1.describe(), "K2": K2.describe(), "count": len(ds),
              "defects": [{"label": d.label, "fpdim": d.fpdim, "irrep_dim": d.irrep_dim,
                           "stabilizer_order": d.stabilizer.order} for d in ds]}
    rows = [[d.label, d.fpdim, str(d.stabilizer.order)] for d in ds]
    return CommandResult(0, report, table(["defect", "FPdim", "|stabilizer|"], rows))


def cmd_lagrangian(a) -> CommandResult:
    mtc = load_target(a.target, a.fr_data)
    algs = [str(x) for x in find_lagrangian_algebras(mtc, tol=a.tol)]
    return CommandResult(0, {"name": mtc.name, "count": len(algs), "algebras": algs},
                         "\n".join(algs))


def cmd_msolve(a) -> CommandResult:
    mtc = load_target(a.target, a.fr_data)
    msym = solve_m3j(mtc, a.boundary, seed=a.seed, tol=a.tol)
    res = m3j_residuals(msym)
    labels = mtc.labels
    entries, rows = [], []
    for (x, y, z), blk in msym.items():
        for idx in np.ndindex(blk.shape):
            key = f"{labels[x]},{labels[y]};{labels[z]}" + (str(list(idx)) if blk.size > 1 else "")
            entries.append({"a": labels[x], "b": labels[y], "c": labels[z],
                            "index": list(idx), "value": complex(blk[idx])})
            rows.append([key, complex(blk[idx])])
    ok = max(res.values(), default=0.0) < a.tol
    report = {"boundary": str(msym.boundary), "normalization": msym.normalization,
              "residuals": res, "passed": ok, "M": entries}
    text = table(["M^{ab}_c", "value"], rows) + "\n\n" + table(
        ["residual", "value"], [[k, v] for k, v in sorted(res.items())])
    return CommandResult(0 if ok else 1, report, text)


def _boundaries(a, holes: int) -> list[str]:
    if not a.boundary:
        raise DomainError("--boundary is required")
    parts = [p for b in a.boundary for p in b.split(",")]
    if len(parts) == 1:
        parts = parts * holes
    if len(parts) != holes:
        raise DomainError(f"expected {holes} boundaries, got {len(parts)}")
    return parts


def cmd_gate(a) -> CommandResult:
    from .wilson_ops import (
        OperatorMatrix,
        braid_sigma2_squared,
        charge_projection,
        ground_state_basis,
        logical_subspace,
        loop_matrix,
        tunnel_matrix,
    )

    mtc = load_target(a.mtc, a.fr_data)
    if a.kind == "braid":
        basis = ground_state_basis(mtc, _boundaries(a, 4))
        op = braid_sigma2_squared(mtc, basis)
        if not a.full:
            op = OperatorMatrix(None, op.restrict(logical_subspace(basis)), op.name + " (logical)")
    else:
        bds = _boundaries(a, 2)
        basis = ground_state_basis(mtc, bds)
        if a.anyon is None:
            raise DomainError("--anyon is required")
        msym = None
        if a.kind in ("tunnel", "project") and (a.kind == "tunnel" or a.target == "arc"):
            m1 = solve_m3j(mtc, bds[0], seed=a.seed, tol=a.tol)
            m2 = m1 if bds[1] == bds[0] else solve_m3j(mtc, bds[1], seed=a.seed, tol=a.tol)
            msym = (m1, m2)
        if a.kind == "tunnel":
            op = tunnel_matrix(mtc, msym, basis, _anyon_index(mtc, a.anyon), a.channel)
        elif a.kind == "loop":
            op = loop_matrix(mtc, basis, a.hole, _anyon_index(mtc, a.anyon))
        else:
            op = charge_projection(mtc, basis, a.target, a.anyon, msym, a.hole)
    labels = [op.basis.describe(i) for i in range(op.entries.shape[0])] if op.basis is not None \
        else [str(i) for i in range(op.entries.shape[0])]
    report = {"operator": op.name, "basis": labels, "matrix": op.entries,
              "unitary": op.is_unitary(), "hermitian": op.is_hermitian()}
    return CommandResult(0, report, f"{op.name}\n" + matrix_table(labels, op.entries))


def cmd_protocol(a) -> CommandResult:
    from . import protocols

    if a.name == "order6":
        rep = protocols.check_universality_order6()
        ok = bool(rep["passed"])
    elif a.name == "dz3":
        gs, rep = protocols.dz3_universal_set()
        rep = dict(rep)
        rep["gates"] = {k: gs.gates[k] for k in sorted(gs.gates)}
        errs = [v for k, v in rep.items() if k.endswith("_error")]
        ok = max(errs, default=0.0) < a.tol
        rep["passed"] = ok
    else:
        rep = protocols.phase_walk_statistics(trials=a.trials, seed=a.seed, max_rounds=a.horizon)
        ok = True
    rows = [[k, v if isinstance(v, (int, float, complex, np.number)) and not isinstance(v, bool)
             else json.dumps(jsonable(v, 6), sort_keys=True)]
            for k, v in sorted(rep.items()) if k != "gates"]
    return CommandResult(0 if ok else 1, rep, table(["quantity", "value"], rows))


def cmd_hopf(a) -> CommandResult:
    G = _group(a.group)
    K = parse_subgroup(G, a.subgroup)
    res = verify_quasi_hopf(G, K, alpha=a.alpha, coproduct=a.coproduct)
    ok = max(res.values(), default=0.0) < a.tol
    report = {"group": G.name, "subgroup": K.describe(), "residuals": res, "passed": ok}
    text = table(["axiom", "residual"], [[k, v] for k, v in sorted(res.items())])
    return CommandResult(0 if ok else 1, report, text + f"\n\npassed: {ok}")


def _lattice_spec(text: str):
    if text in PRESETS:
        return spec_from_dict(PRESETS[text])
    p = Path(text)
    if not p.exists():
        raise DomainError(f"no preset or file named {text!r}; presets: {', '.join(sorted(PRESETS))}")
    return spec_from_dict(json.loads(p.read_text()))


def cmd_lattice(a) -> CommandResult:
    spec = _lattice_spec(a.spec)
    terms = build_terms(spec)
    report = {"spec": spec_to_dict(spec), "edges": spec.n_edges, "terms": terms.counts()}
    if a.action == "check":
        res = verify_commuting(terms, trials=a.trials, seed=a.seed, threads=a.threads)
        ok = res < a.tol
        report.update(residual=res, passed=ok)
        rows = [["edges", str(spec.n_edges)], ["terms", str(len(terms))],
                ["max commutator/idempotence residual", res], ["passed", str(ok)]]
        return CommandResult(0 if ok else 1, report, table(["quantity", "value"], rows))
    if a.action == "gsd":
        gsd = ground_space_dimension(terms, seed=a.seed, threads=a.threads)
        report["gsd"] = gsd
        rows = [["edges", str(spec.n_edges)], ["ground-space dimension", str(gsd)]]
        try:
            report["formula"] = gsd_formula(spec)
            rows.append(["boundary formula", str(report["formula"])])
        except LatticeError:
            report["formula"] = None
        return CommandResult(0, report, table(["quantity", "value"], rows))
    return _lattice_ribbon(a, spec, terms, report)


def _lattice_ribbon(a, spec, terms, report) -> CommandResult:
    from .lattice_sim import apply_boundary_ribbon, apply_ribbon_fg, energy, violated_terms

    G = spec.group
    gs = ground_state(terms)
    if a.column is not None:
        rib = column_ribbon(spec, a.column, a.start, a.end, closing_dual=a.closing_dual)
    else:
        rib = row_ribbon(spec, a.row, a.start, a.end, closing_dual=a.closing_dual)
    h = G.index(a.h)
    if a.boundary_k is not None:
        K = parse_subgroup(G, a.boundary_k)
        st = apply_boundary_ribbon(gs, rib, h, G.index(a.g), K)
    else:
        st = apply_ribbon_fg(gs, rib, h, G.index(a.g))
    if st.norm < 1e-12:
        raise DomainError("the ribbon operator annihilates the ground state")
    st = st.normalized()
    bad = violated_terms(terms, st)
    e = energy(terms, st)
    report.update(triangles=len(rib), dual_length=rib.dual_length, violated=bad, energy=e,
                  violated_edge_terms=sum(n[0] in "LT" for n in bad))
    if a.dump:
        dump_state(st, a.dump)
        report["dump"] = a.dump
    rows = [["triangles", str(len(rib))], ["dual triangles", str(rib.dual_length)],
            ["energy", e], ["violated", " ".join(bad) or "-"],
            ["violated edge terms", str(report["violated_edge_terms"])]]
    return CommandResult(0, report, table(["quantity", "value"], rows))


# ---------------------------------------------------------------- parser

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--json", action="store_true", help="emit JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--fr-data", default=None,
                   help="F/R data file for builtin:ds3, or 'bundled'")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="qdlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("anyons", parents=[common], help="anyon types of D(G)")
    p.add_argument("group")
    p.set_defaults(func=cmd_anyons)

    p = sub.add_parser("modular", parents=[common], help="S and T matrices")
    p.add_argument("target", help="group spec, builtin:NAME or MTC JSON file")
    p.set_defaults(func=cmd_modular)

    p = sub.add_parser("fusion", parents=[common], help="fusion rules")
    p.add_argument("target")
    p.add_argument("pair", nargs="*", metavar="ANYON")
    p.set_defaults(func=cmd_fusion)

    p = sub.add_parser("boundary", parents=[common], help="boundary of subgroup K")
    p.add_argument("group")
    p.add_argument("subgroup")
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("defects", parents=[common], help="defects between K1 and K2")
    p.add_argument("group")
    p.add_argument("k1")
    p.add_argument("k2")
    p.set_defaults(func=cmd_defects)

    p = sub.add_parser("lagrangian", parents=[common], help="Lagrangian algebras")
    p.add_argument("target")
    p.set_defaults(func=cmd_lagrangian)

    p = sub.add_parser("msolve", parents=[common], help="solve for M-3j symbols")
    p.add_argument("target")
    p.add_argument("boundary")
    p.set_defaults(func=cmd_msolve)

    p = sub.add_parser("gate", parents=[common], help="Wilson operator matrices")
    p.add_argument("kind", choices=["tunnel", "loop", "braid", "project"])
    p.add_argument("--mtc", required=True)
    p.add_argument("--boundary", action="append",
                   help="Lagrangian algebra per hole (comma list or repeated)")
    p.add_argument("--anyon")
    p.add_argument("--hole", type=int, default=2)
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--target", choices=["arc", "loop"], default="arc")
    p.add_argument("--full", action="store_true", help="braid on the whole ground space")
    p.set_defaults(func=cmd_gate)

    p = sub.add_parser("protocol", parents=[common], help="gate-set protocols")
    p.add_argument("name", choices=["order6", "dz3", "tc-phase-walk"])
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--horizon", type=int, default=64)
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("hopf-check", parents=[common], help="quasi-Hopf axiom residuals")
    p.add_argument("group")
    p.add_argument("subgroup")
    p.add_argument("--alpha", choices=["unit", "projector"], default="unit")
    p.add_argument("--coproduct", choices=["standard", "flipped"], default="standard")
    p.set_defaults(func=cmd_hopf)

    p = sub.add_parser("lattice", parents=[common], help="lattice simulator")
    p.add_argument("action", choices=["check", "gsd", "ribbon"])
    p.add_argument("spec", help=f"JSON file or preset ({', '.join(sorted(PRESETS))})")
    p.add_argument("--trials", type=int, default=32)
    p.add_argument("--row", type=int, default=0)
    p.add_argument("--column", type=int)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--end", type=int, default=1)
    p.add_argument("--closing-dual", action="store_true")
    p.add_argument("--h", default="1", help="group element label, e.g. g for Z2")
    p.add_argument("--g", default="1", help="group element label (k for boundary ribbons)")
    p.add_argument("--boundary-k", help="subgroup K: apply Y^{(hK,k)} instead of F^{(h,g)}")
    p.add_argument("--dump", help="write the resulting state snapshot here")
    p.set_defaults(func=cmd_lattice)
    return ap


def dispatch(argv: list[str]) -> CommandResult:
    args = build_parser().parse_args(argv)
    return args.func(args)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(argv)
    try:
        res = args.func(args)
    except (DomainError, GroupError, MtcError, LatticeError, ValueError, KeyError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        err = {"error": type(exc).__name__, "message": str(msg), "command": args.command}
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return 1
    if args.json:
        print(json.dumps(jsonable(res.report), sort_keys=True, indent=2))
    else:
        print(res.table)
    return res.code


if __name__ == "__main__":
    sys.exit(main())
