import json

import numpy as np
import pytest

from qdlab.cli import dispatch, jsonable, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--json")
    assert code == 0
    return json.loads(out)


def test_anyons_s3_table(capsys):
    code, out, _ = run(capsys, "anyons", "s3")
    assert code == 0
    rows = [r for r in out.strip().splitlines()[2:] if r.strip()]
    assert len(rows) == 8


def test_lagrangian_dz3(capsys):
    rep = run_json(capsys, "lagrangian", "builtin:dz3")
    assert len(rep["algebras"]) == 2


def test_loop_b_on_acd(capsys):
    rep = run_json(capsys, "gate", "loop", "--mtc", "builtin:ds3", "--boundary", "A+C+D", "--anyon", "B")
    m = np.array(rep["matrix"], dtype=float)
    m = m[..., 0] + 1j * m[..., 1] if m.ndim == 3 else m
    assert np.allclose(m, np.diag([1, 1, -1]), atol=1e-12)


@pytest.mark.parametrize("argv", [
    ["anyons", "z3"],
    ["modular", "builtin:tc"],
    ["fusion", "s3", "C", "D"],
    ["boundary", "s3", "z2"],
    ["defects", "z2", "trivial", "full"],
    ["lagrangian", "builtin:ds3"],
    ["msolve", "builtin:dz3", "1+e+e2"],
    ["gate", "braid", "--mtc", "builtin:tc", "--boundary", "1+e"],
    ["gate", "project", "--mtc", "builtin:dz3", "--boundary", "1+e+e2", "--anyon", "e"],
    ["protocol", "tc-phase-walk", "--trials", "200"],
    ["hopf-check", "s3", "z2"],
    ["lattice", "gsd", "tc-planar"],
])
def test_json_round_trips_and_is_stable(capsys, argv):
    first = run(capsys, *argv, "--json")
    second = run(capsys, *argv, "--json")
    assert first == second and first[0] == 0
    rep = json.loads(first[1])
    assert json.dumps(rep, sort_keys=True, indent=2) == first[1].rstrip("\n")


def test_threads_do_not_change_output(capsys):
    a = run(capsys, "lattice", "check", "dz3-annulus", "--trials", "4", "--threads", "1")
    b = run(capsys, "lattice", "check", "dz3-annulus", "--trials", "4", "--threads", "4")
    assert a == b


def test_usage_errors_exit_2(capsys):
    for argv in (["nonsense"], ["anyons"], ["anyons", "z2", "--bogus"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2
    capsys.readouterr()


@pytest.mark.parametrize("argv", [
    ["anyons", "nonsense"],
    ["lattice", "gsd", "nope"],
    ["msolve", "builtin:ds3", "A+C+D"],
    ["boundary", "s3", "{1,q}"],
])
def test_domain_errors_exit_1(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1 and out == ""
    msg = json.loads(err)
    assert set(msg) == {"command", "error", "message"} and msg["command"] == argv[0]


def test_dispatch_returns_report():
    res = dispatch(["anyons", "z2"])
    assert res.code == 0 and res.report["count"] == 4
    assert len(res.report["anyons"]) == 4


def test_jsonable_formatting():
    assert jsonable(1 / 3) == 0.333333333333
    assert jsonable(1e-17) == 0
    assert jsonable(np.array([1 + 2j])) == [[1.0, 2.0]]
