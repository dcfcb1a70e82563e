"""Gate pipelines built from Wilson operators, and universality checks.

Hand-entered matrices appear only in ``standard_gates`` (textbook qudit gates)
and as the assumed Hadamard; every gate of a topological set is assembled from
wilson_ops output and compared against the textbook form.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .mtc_data import builtin_mtc, solve_m3j
from .wilson_ops import (
    OperatorMatrix,
    braid_sigma2_squared,
    charge_projection,
    factor_double,
    ground_state_basis,
    logical_subspace,
    loop_matrix,
    measurement_operator,
    tunnel_matrix,
)

__all__ = [
    "GateSet",
    "standard_gates",
    "check_universality_order6",
    "WalkRound",
    "WalkResult",
    "toric_phase_round",
    "toric_phase_gate_walk",
    "phase_walk_statistics",
    "dz3_universal_set",
    "toric_cnot_circuit",
]

DERIVED = "derived"
ASSUMED = "assumed-external"
TEXTBOOK = "textbook"


@dataclass
class GateSet:
    d: int
    gates: dict = field(default_factory=dict)        # name -> ndarray
    provenance: dict = field(default_factory=dict)   # name -> DERIVED | ASSUMED | TEXTBOOK
    clifford: set = field(default_factory=set)
    measurement: set = field(default_factory=set)

    def add(self, name: str, m: np.ndarray, provenance: str, clifford: bool = False,
            measurement: bool = False) -> None:
        m = np.asarray(m, dtype=complex)
        if not measurement and np.abs(m.conj().T @ m - np.eye(len(m))).max() > 1e-9:
            raise ValueError(f"gate {name} is not unitary")
        self.gates[name] = m
        self.provenance[name] = provenance
        if clifford:
            self.clifford.add(name)
        if measurement:
            self.measurement.add(name)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.gates[name]


def _omega(d: int) -> complex:
    return cmath.exp(2j * math.pi / d)


def standard_gates(d: int) -> GateSet:
    """H_d, SUM_d, sigma^x_d, sigma^z_d, wedge sigma^z_d; P, T (d=2); Q_3, Flip_3 (d=3)."""
    if d < 2:
        raise ValueError("qudit dimension must be at least 2")
    w = _omega(d)
    idx = np.arange(d)
    H = w ** np.outer(idx, idx) / math.sqrt(d)
    X = np.roll(np.eye(d), 1, axis=0)
    Z = np.diag(w ** idx)
    SUM = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            SUM[i * d + (i + j) % d, i * d + j] = 1
    CZ = np.diag([w ** (i * j) for i in range(d) for j in range(d)])
    gs = GateSet(d)
    for name, m in (("H", H), ("SUM", SUM), ("X", X), ("Z", Z), ("CZ", CZ)):
        gs.add(name, m, TEXTBOOK, clifford=True)
    if d == 2:
        gs.add("P", np.diag([1, 1j]), TEXTBOOK, clifford=True)
        gs.add("T", np.diag([1, cmath.exp(1j * math.pi / 4)]), TEXTBOOK)
    if d == 3:
        gs.add("Q3", np.diag([1, 1, w]), TEXTBOOK)
        gs.add("Flip3", np.diag([1, 1, -1]), TEXTBOOK)
    return gs


def _by_imag(z: np.ndarray) -> np.ndarray:
    return z[np.argsort(z.imag)]


def check_universality_order6() -> dict:
    """M = H P H P^dag and N = H P^dag H P with P = diag(1, e^{i pi/3})."""
    H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    P = np.diag([1, cmath.exp(1j * math.pi / 3)])
    M = H @ P @ H @ P.conj().T
    N = H @ P.conj().T @ H @ P
    expected = np.array([(3 - 1j * math.sqrt(7)) / 4, (3 + 1j * math.sqrt(7)) / 4])
    ev_m = _by_imag(np.linalg.eigvals(M))
    ev_n = _by_imag(np.linalg.eigvals(N))
    comm = float(np.linalg.norm(M @ N - N @ M, 2))
    return {
        "eigenvalues_M": ev_m.tolist(),
        "eigenvalues_N": ev_n.tolist(),
        "eigenvalue_error": float(max(np.abs(ev_m - expected).max(), np.abs(ev_n - expected).max())),
        "unit_modulus_error": float(np.abs(np.abs(np.concatenate([ev_m, ev_n])) - 1).max()),
        "cos_arg": float(np.cos(np.angle(ev_m[0]))),
        "commutator_norm": comm,
        "M_unitary_error": float(np.abs(M.conj().T @ M - np.eye(2)).max()),
        "passed": bool(comm > 0.1 and max(np.abs(ev_m - expected).max(), np.abs(ev_n - expected).max()) < 1e-12),
    }


# -- toric phase-gate walk

class _ToricPhaseModel:
    """Ancilla qubit (first factor) and data qubit on the two leftmost holes (second).

    W_e(beta_2) and W_e(gamma) both join the data holes; on the ground space they
    coincide, since they differ by an e-loop around a 1+e hole. W_m(alpha_2)
    loops the hole shared with the ancilla and sees both tunneling channels.
    """

    def __init__(self):
        tc = builtin_mtc("tc")
        basis = ground_state_basis(tc, ["1+e", "1+e"])
        msym = solve_m3j(tc, "1+e")
        x = tunnel_matrix(tc, msym, basis, "e").entries
        z = loop_matrix(tc, basis, 2, "m").entries
        one = np.eye(2)
        self.we_gamma = OperatorMatrix(None, np.kron(one, x), "W_e(gamma)")
        self.we_beta = OperatorMatrix(None, np.kron(one, x), "W_e(beta_2)")
        self.wm_alpha = OperatorMatrix(None, np.kron(z, z), "W_m(alpha_2)")
        # i W_e(gamma) W_m(alpha_2); the operator order fixes which outcome is called s3 = +1
        self.joint = measurement_operator([self.we_gamma, self.wm_alpha])
        eye = np.eye(4)
        self.proj = {
            "beta": {s: (eye + s * self.we_beta.entries) / 2 for s in (1, -1)},
            "alpha": {s: (eye + s * self.wm_alpha.entries) / 2 for s in (1, -1)},
            "joint": {s: (eye + s * self.joint.entries) / 2 for s in (1, -1)},
        }
        self.psi = {s: np.kron([1, 1], [1, s]) / 2 for s in (1, -1)}


_MODEL: _ToricPhaseModel | None = None


def _model() -> _ToricPhaseModel:
    global _MODEL
    if _MODEL is None:
        _MODEL = _ToricPhaseModel()
    return _MODEL


@dataclass(frozen=True)
class WalkRound:
    s2: int
    s3: int
    factors: tuple[complex, complex]     # amplitude factors on psi(+1), psi(-1)
    step: float                          # relative phase added this round
    net: float                           # accumulated relative phase, in (-pi, pi]


@dataclass(frozen=True)
class WalkResult:
    rounds: tuple[WalkRound, ...]
    complete: bool
    state: tuple[complex, complex]

    @property
    def count(self) -> int:
        return len(self.rounds)


def _wrap(phase: float) -> float:
    return math.remainder(phase, 2 * math.pi)


def toric_phase_round(state: np.ndarray, s2: int, s3: int, tol: float = 1e-12) -> tuple[np.ndarray, tuple[complex, complex]]:
    """One round on the logical pair (psi(+), psi(-)); returns the new coefficients and factors.

    Each factor is checked against (1 + i s1 s2 s3) / 4.
    """
    m = _model()
    factors = []
    for s1 in (1, -1):
        v = m.proj["beta"][s1] @ m.proj["joint"][s3] @ m.proj["alpha"][s2] @ m.psi[s1]
        f = complex(np.vdot(m.psi[s1], v))
        if np.abs(v - f * m.psi[s1]).max() > tol or abs(f - (1 + 1j * s1 * s2 * s3) / 4) > tol:
            raise AssertionError(f"round factor mismatch at s1={s1}, s2={s2}, s3={s3}: {f}")
        factors.append(f)
    new = np.asarray(state, dtype=complex) * np.array(factors)
    return new / np.linalg.norm(new), (factors[0], factors[1])


def toric_phase_gate_walk(seed: int = 0, max_rounds: int = 64, rng=None) -> WalkResult:
    """Repeat the three-measurement round until the net relative phase is +pi/2 (mod 2 pi).

    Outcomes s2, s3 are drawn with their Born probabilities on the logical
    state (1, 1)/sqrt(2).
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    m = _model()
    state = np.array([1, 1], dtype=complex) / math.sqrt(2)
    net = 0.0
    rounds = []
    for _ in range(max_rounds):
        full = state[0] * m.psi[1] + state[1] * m.psi[-1]
        after2 = {s2: m.proj["alpha"][s2] @ full for s2 in (1, -1)}
        p2 = np.array([np.vdot(after2[1], after2[1]).real, np.vdot(after2[-1], after2[-1]).real])
        s2 = 1 if rng.random() < p2[0] / p2.sum() else -1
        after3 = {s3: m.proj["joint"][s3] @ after2[s2] for s3 in (1, -1)}
        p3 = np.array([np.vdot(after3[1], after3[1]).real, np.vdot(after3[-1], after3[-1]).real])
        s3 = 1 if rng.random() < p3[0] / p3.sum() else -1
        state, factors = toric_phase_round(state, s2, s3)
        step = cmath.phase(factors[0] / factors[1])
        if abs(abs(step) - math.pi / 2) > 1e-12 or abs(step - s2 * s3 * math.pi / 2) > 1e-12:
            raise AssertionError(f"phase step {step} is not s2 s3 pi/2")
        net = _wrap(net + step)
        rounds.append(WalkRound(s2, s3, factors, step, net))
        if abs(net - math.pi / 2) < 1e-9:
            return WalkResult(tuple(rounds), True, (complex(state[0]), complex(state[1])))
    return WalkResult(tuple(rounds), False, (complex(state[0]), complex(state[1])))


def phase_walk_statistics(trials: int = 10_000, seed: int = 0, max_rounds: int = 64) -> dict:
    """Success fraction and mean round count over independent seeded trials."""
    seeds = np.random.SeedSequence(seed).spawn(trials)
    counts, successes = [], 0
    for ss in seeds:
        res = toric_phase_gate_walk(max_rounds=max_rounds, rng=np.random.default_rng(ss))
        successes += res.complete
        counts.append(res.count)
    return {
        "trials": trials,
        "max_rounds": max_rounds,
        "success_fraction": successes / trials,
        "mean_rounds": float(np.mean(counts)),
        "max_observed_rounds": int(max(counts)),
    }


# -- D(Z3) universal set

def dz3_universal_set() -> tuple[GateSet, dict]:
    """Gates of the D(Z_3) qutrit model from Wilson operators, with a verification report."""
    mtc = builtin_mtc("dz3")
    w = _omega(3)
    std = standard_gates(3)
    qutrit = ground_state_basis(mtc, ["1+e+e2", "1+e+e2"])
    msym = solve_m3j(mtc, "1+e+e2")
    gs = GateSet(3)
    report = {}

    X = tunnel_matrix(mtc, msym, qutrit, "e").entries
    gs.add("X", X, DERIVED, clifford=True)
    Z = loop_matrix(mtc, qutrit, 2, "m2").entries
    gs.add("Z", Z, DERIVED, clifford=True)

    four = ground_state_basis(mtc, ["1+m+m2", "1+m+m2", "1+e+e2", "1+e+e2"])
    CZ = braid_sigma2_squared(mtc, four).restrict(logical_subspace(four))
    gs.add("CZ", CZ, DERIVED, clifford=True)

    H = std["H"]
    gs.add("H", H, ASSUMED, clifford=True)
    SUM = np.kron(np.eye(3), H.conj().T) @ CZ @ np.kron(np.eye(3), H)
    gs.add("SUM", SUM, DERIVED, clifford=True)

    fac = factor_double(mtc)
    # Dehn twist of the C layer: channel e^j carries the C charge x with x (x) x -> e^j
    diag_x = [int(np.flatnonzero(np.diag(fac.embed) == qutrit.labels[i][0])[0]) for i in range(3)]
    Q3 = np.diag(fac.theta[diag_x]) @ Z
    gs.add("Q3", Q3, DERIVED)

    P_e = charge_projection(mtc, qutrit, "arc", "e", msym).entries
    P_1 = charge_projection(mtc, qutrit, "arc", "1", msym).entries
    M = X @ H.conj().T @ (np.eye(3) - P_e) @ H @ X.conj().T
    gs.add("M", M, DERIVED, measurement=True)
    M1 = H.conj().T @ (np.eye(3) - P_1) @ H

    ds3 = builtin_mtc("ds3")
    ds3_basis = ground_state_basis(ds3, ["A+C+D", "A+C+D"])
    gs.add("Flip3", loop_matrix(ds3, ds3_basis, 2, "B").entries, DERIVED)

    for name in ("X", "Z", "CZ", "SUM", "Q3", "Flip3"):
        report[f"{name}_error"] = float(np.abs(gs[name] - std[name]).max())
    evals, evecs = np.linalg.eigh(P_e)
    top = evecs[:, np.argmax(evals)]
    want = np.array([1, np.conj(w), w]) / math.sqrt(3)
    report["P_e_idempotent_error"] = float(np.abs(P_e @ P_e - P_e).max())
    report["P_e_eigenvector_error"] = float(1 - abs(np.vdot(want, top)))
    kernel = np.array([[1, 1, 1], [1, w, np.conj(w)]]).T / math.sqrt(3)
    report["P_e_kernel_error"] = float(np.abs(P_e @ kernel).max())
    report["P_sum_error"] = float(np.abs(P_e + P_1 + charge_projection(mtc, qutrit, "arc", "e2", msym).entries
                                         - np.eye(3)).max())
    target = np.diag([0, 1, 1])
    report["coherent_projection_error"] = float(np.abs(M - target).max())
    report["coherent_projection_via_P1_error"] = float(np.abs(M1 - target).max())
    report["provenance"] = dict(gs.provenance)
    return gs, report


# -- CNOT from three m-e gates

def toric_cnot_circuit(measurement_outcome: int, p: int = 2, control_outcome: int | None = None) -> OperatorMatrix:
    """Net action on (control, target) of the ancilla circuit after corrections.

    Qudits: control-in c, target t, 1+e ancilla a in |+> (control-out), 1+m
    ancilla m in |0>. Gates SUM(c->m), SUM(m->t), SUM^-1(a->m); m is measured in
    the Z basis (outcome j, correction X^j on control-out) and c in the Fourier
    basis (outcome k, correction Z^k on control-out). Without ``control_outcome``
    every k is checked and k = 0 is returned.
    """
    if p < 2:
        raise ValueError("p must be at least 2")
    j = int(measurement_outcome)
    if not 0 <= j < p:
        raise ValueError(f"measurement outcome must lie in 0..{p - 1}")
    gs = standard_gates(p)
    X, Z, SUM = gs["X"], gs["Z"], gs["SUM"]
    w = _omega(p)
    dims = (p, p, p, p)

    def two(gate, c, t):
        """Embed a two-qudit gate acting on qudits (c, t) of four."""
        g = gate.reshape(p, p, p, p)
        out = np.zeros((p ** 4, p ** 4), dtype=complex)
        for idx in np.ndindex(*dims):
            for a, b in np.ndindex(p, p):
                amp = g[a, b, idx[c], idx[t]]
                if amp:
                    dst = list(idx)
                    dst[c], dst[t] = a, b
                    out[np.ravel_multi_index(dst, dims), np.ravel_multi_index(idx, dims)] += amp
        return out

    C, T, A, M = 0, 1, 2, 3
    inv_sum = np.linalg.matrix_power(SUM, p - 1)
    U = two(inv_sum, A, M) @ two(SUM, M, T) @ two(SUM, C, M)
    plus = np.ones(p) / math.sqrt(p)
    zero = np.eye(p)[0]
    outcomes = range(p) if control_outcome is None else [int(control_outcome)]
    result = None
    for k in outcomes:
        fourier = w ** (k * np.arange(p)) / math.sqrt(p)
        net = np.zeros((p * p, p * p), dtype=complex)
        for col in range(p * p):
            v = np.kron(np.kron(np.eye(p * p)[col], plus), zero)
            out = (U @ v).reshape(dims)[:, :, :, j]
            out = np.tensordot(fourier.conj(), out, axes=([0], [0]))     # (t, a)
            net[:, col] = out.T.reshape(p * p)                            # (a, t)
        corr = np.kron(np.linalg.matrix_power(X, j) @ np.linalg.matrix_power(Z, k), np.eye(p))
        net = corr @ net
        net = net / (np.linalg.norm(net[:, 0]) or 1.0)
        lead = net[np.unravel_index(np.argmax(np.abs(net)), net.shape)]
        net = net * (abs(lead) / lead)
        if np.abs(net - SUM).max() > 1e-9:
            raise AssertionError(f"circuit does not implement SUM_{p} for outcomes j={j}, k={k}")
        if result is None:
            result = net
    name = "CNOT" if p == 2 else f"SUM_{p}"
    return OperatorMatrix(None, result, name)
