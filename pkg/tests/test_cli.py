import subprocess
import sys
from fractions import Fraction as F
from pathlib import Path

import pytest

from psinflation import lp as lpmod
from psinflation.cli import main

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_orbits_prints_317(capsys):
    assert run(capsys, "orbits", "--rows", 4, "--cols", 4, "--outcomes", 2) == (0, "317\n", "")
    assert run(capsys, "orbits", "--rows", 2, "--cols", 2)[1] == "7\n"


def test_orbits_dump(capsys, tmp_path):
    dump = tmp_path / "reps.txt"
    run(capsys, "orbits", "--rows", 2, "--cols", 2, "--dump", dump)
    lines = dump.read_text().splitlines()
    assert len(lines) == 7 and lines[0] == "1 1 1 1"


def test_optimize_line(capsys):
    code, out, _ = run(capsys, "sleeper", "optimize")
    assert code == 0
    assert out == "primal=3/4 dual=3/4 z=1,1/2,1/2,1 verified=true\n"


def test_boundary_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "sleeper", "boundary", "--lambda1", "1/2", "--tol", "1/1024")
    assert code == 0
    head, row = out.splitlines()
    assert head == "lambda1,lambda2_star"
    l1, l2 = row.split(",")
    assert l1 == "0.500000000000" and abs(F(l2) - F(1, 4)) <= F(1, 1024)
    path = tmp_path / "b.csv"
    run(capsys, "sleeper", "boundary", "--lambda1", "1/2", "--lambda1", "3/8", "--tol", "1/64",
        "--exact", "-o", path)
    lines = path.read_text().splitlines()
    assert lines[0] == "lambda1,lambda2_star,lambda1_exact,lambda2_star_exact" and len(lines) == 3


def test_scan_workers_identical(capsys):
    args = ["sleeper", "scan", "--lo", "3/8,1/4", "--hi", "1/2", "--step", "1/16", "--exact"]
    a = run(capsys, *args, "--workers", 1)
    b = run(capsys, *args, "--workers", 2)
    assert a == b and a[0] == 0
    assert a[1].splitlines()[0] == "lambda1,lambda2,verdict,lambda1_exact,lambda2_exact"
    assert len(a[1].splitlines()) == 1 + 3 * 5


def test_solve_exit_codes(capsys, tmp_path):
    base = ["solve", "-s", DATA / "sleeper.yaml", "-i", DATA / "sleeper_inflation.yaml"]
    code, out, _ = run(capsys, *base, "-t", DATA / "targets_feasible.yaml")
    assert code == 0
    assert out == "verdict=feasible vars=317 rows=32 certificate=feasible-witness verified=true\n"
    lp_path, cert = tmp_path / "x.lp", tmp_path / "cert.txt"
    code, out, _ = run(capsys, *base, "-t", DATA / "targets_infeasible.yaml",
                       "--export-lp", lp_path, "--certificate", cert)
    assert code == 1 and out.startswith("verdict=infeasible") and "verified=true" in out
    lp = lpmod.parse_lp(lp_path.read_text(), str(lp_path))
    kind, vec = cert.read_text().splitlines()
    assert kind == "farkas"
    assert lpmod.verify_farkas(lp, [F(v) for v in vec.split()])


def test_validation_errors_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text((DATA / "sleeper.yaml").read_text().replace("arity: 2", "arity: 0", 1))
    code, _, err = run(capsys, "validate", "-s", bad)
    assert code == 2 and "arity must be >= 1" in err
    code, _, err = run(capsys, "validate", "-s", tmp_path / "missing.yaml")
    assert code == 2 and err.startswith("error:")
    broken = tmp_path / "broken.yaml"
    broken.write_text("strategies: [\n")
    code, _, err = run(capsys, "validate", "-s", broken)
    assert code == 2 and f"{broken}:2:" in err
    assert run(capsys, "validate", "-s", DATA / "sleeper.yaml")[:2] == (0, "ok: 1 strategies, 4 networks\n")


def test_usage_errors_exit_2(capsys):
    assert run(capsys, "sleeper", "scan", "--step", "0")[0] == 2
    assert run(capsys, "sleeper", "boundary", "--tol", "abc")[0] == 2
    assert run(capsys, "orbits", "--rows", 4)[0] == 2
    assert run(capsys, "fanout", "compare", "--example", "bilocal", "--point", "1/2,1/4")[0] == 2
    assert run(capsys, "nosuch")[0] == 2


def test_fanout_compare(capsys):
    code, out, _ = run(capsys, "fanout", "compare", "--example", "sleeper", "--point", "1/2,1/4")
    assert code == 0
    assert out == "sleeper lambda=1/2,1/4 postselected=F fanout=F equal=true\n"
    code, out, _ = run(capsys, "fanout", "compare", "--example", "bilocal", "--count", 4)
    assert code == 0 and len(out.splitlines()) == 4
    assert all(line.endswith("equal=true") for line in out.splitlines())


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "psinflation", "orbits", "--rows", "3", "--cols", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "36\n"
