import itertools
from fractions import Fraction as F

import pytest

from psinflation import lp as lpmod
from psinflation.lp import RationalLP

from oracles import brute_feasible, brute_max


def random_lp(rnd, m, n, feasible_bias=True):
    rows = [[F(rnd.randint(-3, 3)) for _ in range(n)] for _ in range(m)]
    if feasible_bias and rnd.random() < 0.5:
        x0 = [F(rnd.randint(0, 3), rnd.randint(1, 3)) for _ in range(n)]
        rhs = [sum(a * v for a, v in zip(r, x0)) for r in rows]
    else:
        rhs = [F(rnd.randint(-4, 4)) for _ in range(m)]
    return RationalLP(n, rows, rhs)


def test_two_variable_infeasible_farkas_is_exact():
    lp = RationalLP(2, [[1, 1]], [-1])
    res = lpmod.solve_feasibility(lp)
    assert not res.feasible
    assert res.farkas == (F(-1),)
    assert lpmod.verify_farkas(lp, res.farkas)


def test_trivial_feasible_and_empty_rows():
    lp = RationalLP(3, [[1, 1, 1]], [1])
    res = lpmod.solve_feasibility(lp)
    assert res.feasible and lpmod.verify_witness(lp, res.witness)
    empty = lpmod.solve_feasibility(RationalLP(2, [], []))
    assert empty.feasible and empty.witness == (0, 0)


def test_zero_rhs_and_zero_row():
    lp = RationalLP(2, [[0, 0], [1, -1]], [0, 0])
    assert lpmod.solve_feasibility(lp).feasible
    bad = RationalLP(2, [[0, 0]], [F(1, 3)])
    res = lpmod.solve_feasibility(bad)
    assert not res.feasible and lpmod.verify_farkas(bad, res.farkas)


def test_rows_validated():
    with pytest.raises(ValueError, match="row 0 has length 1"):
        RationalLP(2, [[1]], [0])
    with pytest.raises(ValueError, match="right-hand sides"):
        RationalLP(1, [[1]], [])


def test_verifiers_reject_wrong_certificates():
    lp = RationalLP(2, [[1, 1]], [1])
    assert not lpmod.verify_witness(lp, (F(1, 2), F(1, 3)))
    assert not lpmod.verify_witness(lp, (F(2), F(-1)))
    assert not lpmod.verify_farkas(lp, (F(1),))
    assert not lpmod.verify_farkas(lp, (F(-1),))


@pytest.mark.parametrize("m,n", [(1, 2), (2, 3), (2, 4), (3, 4), (3, 5)])
def test_feasibility_matches_basis_enumeration(rnd, m, n):
    for _ in range(25):
        lp = random_lp(rnd, m, n)
        res = lpmod.solve_feasibility(lp)
        assert res.feasible == brute_feasible(lp.rows, lp.rhs)
        assert lpmod.verify_certificate(lp, res.certificate)


def test_degenerate_duplicated_rows_terminate(rnd):
    # every row repeated, plus scaled copies: many ties in the ratio test
    for _ in range(30):
        base = random_lp(rnd, 2, 4)
        rows = list(base.rows) * 3 + [tuple(2 * v for v in base.rows[0])]
        rhs = list(base.rhs) * 3 + [2 * base.rhs[0]]
        lp = RationalLP(4, rows, rhs)
        res = lpmod.solve_feasibility(lp)
        assert res.feasible == brute_feasible(base.rows, base.rhs)
        assert lpmod.verify_certificate(lp, res.certificate)


def test_classic_cycling_example_terminates():
    # Beale's cycling instance in equality form (slacks added)
    c = [F(3, 4), F(-150), F(1, 50), F(-6), 0, 0, 0]
    rows = [
        [F(1, 4), F(-60), F(-1, 25), F(9), 1, 0, 0],
        [F(1, 2), F(-90), F(-1, 50), F(3), 0, 1, 0],
        [0, 0, 1, 0, 0, 0, 1],
    ]
    lp = RationalLP(7, rows, [0, 0, 1], c)
    res = lpmod.solve_max(lp)
    assert res.value == F(1, 20)
    assert lpmod.verify_dual(lp, res.dual.vector, res.value)


@pytest.mark.parametrize("m,n", [(2, 3), (2, 4), (3, 5)])
def test_max_matches_basis_enumeration(rnd, m, n):
    done = 0
    while done < 20:
        # bounded: a normalization row keeps the feasible set a polytope
        rows = [[F(1)] * n] + [[F(rnd.randint(-2, 2)) for _ in range(n)] for _ in range(m - 1)]
        x0 = [F(rnd.randint(0, 3)) for _ in range(n)]
        s = sum(x0) or F(1)
        x0 = [v / s for v in x0] if sum(x0) else [F(1, n)] * n
        rhs = [sum(a * v for a, v in zip(r, x0)) for r in rows]
        c = [F(rnd.randint(-5, 5), rnd.randint(1, 4)) for _ in range(n)]
        lp = RationalLP(n, rows, rhs, c)
        res = lpmod.solve_max(lp)
        assert res.value == brute_max(lp.rows, lp.rhs, c)
        assert lpmod.verify_witness(lp, res.witness.vector)
        assert lpmod.verify_dual(lp, res.dual.vector, res.value)
        done += 1


def test_max_infeasible_and_unbounded():
    with pytest.raises(lpmod.InfeasibleLP) as exc:
        lpmod.solve_max(RationalLP(2, [[1, 1]], [-1], [1, 0]))
    assert lpmod.verify_farkas(RationalLP(2, [[1, 1]], [-1]), exc.value.certificate.vector)
    with pytest.raises(lpmod.UnboundedLP) as exc:
        lpmod.solve_max(RationalLP(2, [[1, -1]], [0], [1, 0]))
    ray = exc.value.ray
    assert ray[0] > 0 and ray[0] - ray[1] == 0
    with pytest.raises(ValueError, match="no objective"):
        lpmod.solve_max(RationalLP(1, [[1]], [1]))


def test_weak_duality_random_pairs(rnd):
    # y feasible for the dual means y^T A >= c; any primal x then has c.x <= y.b
    checked = 0
    while checked < 100:
        m, n = rnd.randint(1, 3), rnd.randint(2, 5)
        A = [[F(rnd.randint(-3, 3)) for _ in range(n)] for _ in range(m)]
        x = [F(rnd.randint(0, 4), rnd.randint(1, 3)) for _ in range(n)]
        y = [F(rnd.randint(-3, 3), rnd.randint(1, 3)) for _ in range(m)]
        yA = [sum(y[i] * A[i][j] for i in range(m)) for j in range(n)]
        c = [v - F(rnd.randint(0, 3)) for v in yA]
        b = [sum(a * v for a, v in zip(r, x)) for r in A]
        lp = RationalLP(n, A, b, c)
        assert lpmod.verify_witness(lp, x) and lpmod.verify_dual(lp, y)
        assert sum(ci * xi for ci, xi in zip(c, x)) <= sum(yi * bi for yi, bi in zip(y, b))
        res = lpmod.solve_max(lp)
        assert sum(ci * xi for ci, xi in zip(c, x)) <= res.value <= sum(yi * bi for yi, bi in zip(y, b))
        assert res.value == res.dual.value
        checked += 1


def test_basis_hint_is_used_when_valid():
    lp = RationalLP(3, [[1, 1, 0], [0, 1, 1]], [1, 1])
    res = lpmod.solve_feasibility(lp, basis_hint=[0, 2])
    assert res.basis == (0, 2) and res.witness == (1, 0, 1)
    # an infeasible hint falls back to the simplex
    res = lpmod.solve_feasibility(lp, basis_hint=[0, 1])
    assert res.feasible and lpmod.verify_witness(lp, res.witness)


def test_rhs_family_solver_matches_fresh_solves(rnd):
    rows = [[1, 1, 1, 1], [1, -1, 0, 2], [0, 1, -1, 1]]
    fam = lpmod.RhsFamilySolver(rows)
    for _ in range(60):
        rhs = [F(rnd.randint(-2, 4), 2) for _ in range(3)]
        got = fam.solve(rhs)
        lp = fam.lp(rhs)
        assert got.feasible == lpmod.solve_feasibility(lp).feasible
        assert lpmod.verify_certificate(lp, got.certificate)
    assert fam.stats["basis_hits"] + fam.stats["farkas_hits"] > 0


def test_exchange_format_roundtrip(rnd):
    for _ in range(10):
        n = rnd.randint(1, 4)
        rows = [[F(rnd.randint(-9, 9), rnd.randint(1, 7)) for _ in range(n)] for _ in range(rnd.randint(0, 3))]
        rhs = [F(rnd.randint(-9, 9), rnd.randint(1, 7)) for _ in rows]
        obj = [F(rnd.randint(-9, 9), rnd.randint(1, 7)) for _ in range(n)] if rnd.random() < 0.5 else None
        lp = RationalLP(n, rows, rhs, obj)
        text = lpmod.format_lp(lp)
        assert lpmod.parse_lp(text) == lp
        assert lpmod.format_lp(lpmod.parse_lp(text)) == text


def test_exchange_format_errors_name_the_line():
    with pytest.raises(ValueError, match=r"x.lp:1: expected header"):
        lpmod.parse_lp("var 2 rows 1\n", "x.lp")
    with pytest.raises(ValueError, match=r"x.lp:3: row needs 3 entries"):
        lpmod.parse_lp("vars 2 rows 2\n1 1 1\n1 1\n", "x.lp")
    with pytest.raises(ValueError, match=r"x.lp:2: malformed rational"):
        lpmod.parse_lp("vars 1 rows 1\n1/0 1\n", "x.lp")
    with pytest.raises(ValueError, match="declares 2 rows, found 1"):
        lpmod.parse_lp("vars 1 rows 2\n1 1\n", "x.lp")


def test_format_is_exact():
    lp = RationalLP(2, [[F(1, 3), 0]], [F(-5, 7)], [1, F(2, 9)])
    assert lpmod.format_lp(lp) == "vars 2 rows 1\n1/3 0/1 -5/7\nobjective 1/1 2/9\n"


def test_sleeper_dual_certificate_checks():
    good = lpmod.verify_dual_sleeper((1, F(1, 2), F(1, 2), 1))
    assert good == {"valid": True, "value": F(3, 4)}
    assert not lpmod.verify_dual_sleeper((0, 0, 0, 0))["valid"]
    # any z dominating a valid one stays valid with a larger value
    assert lpmod.verify_dual_sleeper((2, 2, 2, 2)) == {"valid": True, "value": F(2)}
    # lowering a diagonal entry below 1 breaks the constant-strategy row
    assert not lpmod.verify_dual_sleeper((F(99, 100), F(1, 2), F(1, 2), 1))["valid"]


def test_sleeper_dual_terms_by_hand():
    # constant strategy: every pair sees (1, 1); every test succeeds
    import numpy as np
    const = np.ones((1, 16), dtype=np.uint8)
    g3, obj = lpmod._sleeper_dual_terms(const)
    assert g3[0, 0, 0] == 144 and g3[0].sum() == 144
    assert obj[0] == 96
    # output equals the left input's parity: left-input test always succeeds,
    # right-input test succeeds iff the two left inputs share parity
    t = np.array([[1 + (a % 2) for a in range(4) for _ in range(4)]], dtype=np.uint8)
    _, obj = lpmod._sleeper_dual_terms(t)
    same = sum(1 for a1, a2 in itertools.permutations(range(4), 2) if a1 % 2 == a2 % 2)
    assert obj[0] == 48 + 4 * same
