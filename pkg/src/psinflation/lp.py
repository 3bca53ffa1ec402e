"""Exact rational linear programming.

Problems have the form ``A x = b, x >= 0`` with an optional objective to maximize.
The solver is a fraction-free (integer-preserving) tableau simplex: every row is
scaled to integers once, and each pivot applies the Bareiss update, which keeps
all tableau entries integral and exact.  No floating point is involved anywhere.

Every answer carries a certificate (primal witness, Farkas vector, or dual
vector) that the ``verify_*`` helpers re-check by plain rational substitution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

# consecutive non-improving pivots tolerated before switching to Bland's rule
DEGENERATE_STREAK = 30


@dataclass(frozen=True)
class RationalLP:
    """``rows @ x == rhs``, ``x >= 0``, optionally maximizing ``objective @ x``."""

    num_vars: int
    rows: tuple
    rhs: tuple
    objective: Optional[tuple] = None
    row_labels: Optional[tuple] = field(default=None, compare=False)
    var_labels: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(Fraction(v) for v in r) for r in self.rows))
        object.__setattr__(self, "rhs", tuple(Fraction(v) for v in self.rhs))
        if self.objective is not None:
            object.__setattr__(self, "objective", tuple(Fraction(v) for v in self.objective))
        if len(self.rows) != len(self.rhs):
            raise ValueError(f"{len(self.rows)} rows but {len(self.rhs)} right-hand sides")
        for i, r in enumerate(self.rows):
            if len(r) != self.num_vars:
                raise ValueError(f"row {i} has length {len(r)}, expected {self.num_vars}")
        if self.objective is not None and len(self.objective) != self.num_vars:
            raise ValueError(f"objective has length {len(self.objective)}, expected {self.num_vars}")

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def with_objective(self, objective) -> "RationalLP":
        return RationalLP(self.num_vars, self.rows, self.rhs, tuple(objective),
                          self.row_labels, self.var_labels)


@dataclass(frozen=True)
class Certificate:
    """A checkable proof object.

    ``kind`` is ``"feasible-witness"`` (vector = x), ``"farkas"`` (vector = y with
    ``y^T A <= 0`` and ``y^T b > 0``) or ``"dual"`` (vector = y with ``y^T A >= c``,
    value = ``y^T b``).
    """

    kind: str
    vector: tuple
    value: Optional[Fraction] = None


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    certificate: Certificate
    basis: Optional[tuple] = None
    basis_rows: Optional[tuple] = None

    @property
    def witness(self):
        return self.certificate.vector if self.feasible else None

    @property
    def farkas(self):
        return None if self.feasible else self.certificate.vector


@dataclass(frozen=True)
class MaxResult:
    value: Fraction
    witness: Certificate
    dual: Certificate
    basis: Optional[tuple] = None


class InfeasibleLP(Exception):
    def __init__(self, certificate: Certificate):
        super().__init__("linear program is infeasible")
        self.certificate = certificate


class UnboundedLP(Exception):
    def __init__(self, ray):
        super().__init__("objective is unbounded above")
        self.ray = ray


# ---------------------------------------------------------------------------
# integer scaling


def _lcm_denominators(values: Iterable[Fraction]) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, v.denominator)
    return out


def _scale_rows(lp: RationalLP):
    """Integer rows ``s_i * A_i`` with ``s_i > 0`` and integer rhs ``D * s * b``."""
    scales, rows = [], []
    for r in lp.rows:
        s = _lcm_denominators(r)
        scales.append(s)
        rows.append([int(v * s) for v in r])
    sb = [b * s for b, s in zip(lp.rhs, scales)]
    D = _lcm_denominators(sb)
    return rows, scales, [int(v * D) for v in sb], D


class _Tableau:
    """Fraction-free simplex tableau over ``A x = b`` with one artificial per row.

    ``M[:m]`` holds ``d * B^{-1} [A | I | b]`` and ``M[m]`` the objective row
    (reduced costs times ``d``) for a minimization.
    """

    def __init__(self, A, b):
        m = len(A)
        n = len(A[0]) if m else 0
        self.m, self.n = m, n
        M = np.zeros((m + 1, n + m + 1), dtype=object)
        self.flip = [1] * m
        for i in range(m):
            sign = -1 if b[i] < 0 else 1
            self.flip[i] = sign
            M[i, :n] = [sign * v for v in A[i]]
            M[i, n + i] = 1
            M[i, -1] = sign * b[i]
        M[m, :] = 0
        self.M = M
        self.d = 1
        self.basis = [n + i for i in range(m)]
        self.rows = list(range(m))  # original row index of each tableau row

    # -- primitives ---------------------------------------------------------
    def pivot(self, r: int, s: int):
        M, d = self.M, self.d
        p = M[r, s]
        prow = M[r].copy()
        col = M[:, s].copy()
        M = (p * M - np.outer(col, prow)) // d
        M[r] = prow
        if p < 0:
            M = -M
            p = -p
        self.M, self.d = M, p
        self.basis[r] = s

    def drop_row(self, r: int):
        self.M = np.delete(self.M, r, axis=0)
        del self.basis[r]
        del self.rows[r]

    def _ratio_row(self, s: int, structural_only_ties=False) -> Optional[int]:
        M = self.M
        best = None
        for i in range(len(self.basis)):
            a = M[i, s]
            if a > 0:
                if best is None:
                    best = i
                    continue
                lhs = M[i, -1] * M[best, s]
                rhs = M[best, -1] * a
                if lhs < rhs or (lhs == rhs and self.basis[i] < self.basis[best]):
                    best = i
        return best

    def run(self, allowed: int) -> Optional[int]:
        """Minimize the objective row; columns ``>= allowed`` never enter.

        Returns ``None`` at optimality, or the entering column of an unbounded ray.
        """
        streak = 0
        bland = False
        last = None
        obj = len(self.basis)
        while True:
            costs = self.M[obj, :allowed]
            if bland:
                neg = [j for j in range(allowed) if costs[j] < 0]
                if not neg:
                    return None
                s = neg[0]
            else:
                s = int(np.argmin(costs))
                if costs[s] >= 0:
                    return None
            r = self._ratio_row(s)
            if r is None:
                return s
            self.pivot(r, s)
            value = Fraction(self.M[obj, -1], self.d)
            if last is not None and value == last:
                streak += 1
                if streak >= DEGENERATE_STREAK:
                    bland = True
            else:
                streak = 0
                bland = False
            last = value

    def values(self):
        x = [Fraction(0)] * self.n
        for i, j in enumerate(self.basis):
            if j < self.n:
                x[j] = Fraction(self.M[i, -1], self.d)
        return x


def _phase_one(A, b):
    """Returns the tableau after phase I plus the phase-I optimum (times d)."""
    T = _Tableau(A, b)
    m, n = T.m, T.n
    M = T.M
    # phase-I reduced costs: structural -sum of rows, artificials 0
    M[m, :n] = -M[:m, :n].sum(axis=0) if m else 0
    M[m, -1] = -M[:m, -1].sum() if m else 0
    T.M = M
    T.run(n)
    return T


def _drive_out_artificials(T: _Tableau):
    n = T.n
    i = 0
    while i < len(T.basis):
        if T.basis[i] >= n:
            row = T.M[i, :n]
            nz = np.flatnonzero(row != 0)
            if len(nz):
                T.pivot(i, int(nz[0]))
                i += 1
            else:
                T.drop_row(i)
        else:
            i += 1


def _farkas_from_phase_one(T: _Tableau, scales, m) -> tuple:
    # phase-I dual: y_i = 1 - reduced cost of artificial i
    n, d = T.n, T.d
    obj = T.M[len(T.basis)]
    y = []
    for i in range(m):
        yi = Fraction(d - obj[n + i], d) * T.flip[i] * scales[i]
        y.append(yi)
    return tuple(y)


def _normalize_farkas(y, lp: RationalLP):
    yb = sum(a * b for a, b in zip(y, lp.rhs))
    return tuple(v / yb for v in y)


def _solve_square(B, b):
    """Exact solution of the square integer system ``B x = b`` or None if singular."""
    m = len(B)
    M = [list(B[i]) + [b[i]] for i in range(m)]
    prev = 1
    for k in range(m):
        piv = next((i for i in range(k, m) if M[i][k] != 0), None)
        if piv is None:
            return None
        if piv != k:
            M[k], M[piv] = M[piv], M[k]
        pk = M[k][k]
        rowk = M[k]
        for i in range(k + 1, m):
            rowi = M[i]
            f = rowi[k]
            M[i] = [(pk * rowi[j] - f * rowk[j]) // prev if j > k else 0 for j in range(m + 1)]
        prev = pk
    x = [Fraction(0)] * m
    for i in range(m - 1, -1, -1):
        acc = Fraction(M[i][m])
        for j in range(i + 1, m):
            acc -= M[i][j] * x[j]
        x[i] = acc / M[i][i]
    return x


def solve_feasibility(lp: RationalLP, basis_hint: Optional[Sequence[int]] = None) -> FeasibilityResult:
    """Decide ``A x = b, x >= 0`` exactly.

    ``basis_hint`` is a list of column indices; when those columns form a
    nonsingular square system of the (nonredundant) rows with a nonnegative
    solution, it is returned directly.
    """
    A, scales, b, D = _scale_rows(lp)
    m, n = len(A), lp.num_vars
    if basis_hint is not None and len(basis_hint) == m and m:
        B = [[A[i][j] for j in basis_hint] for i in range(m)]
        xb = _solve_square(B, b)
        if xb is not None and all(v >= 0 for v in xb):
            x = [Fraction(0)] * n
            for j, v in zip(basis_hint, xb):
                x[j] = v / D
            return FeasibilityResult(True, Certificate("feasible-witness", tuple(x)),
                                     tuple(basis_hint), tuple(range(m)))
    if m == 0:
        return FeasibilityResult(True, Certificate("feasible-witness", (Fraction(0),) * n), (), ())
    T = _phase_one(A, b)
    if T.M[m, -1] != 0:
        y = _normalize_farkas(_farkas_from_phase_one(T, scales, m), lp)
        return FeasibilityResult(False, Certificate("farkas", y))
    _drive_out_artificials(T)
    x = tuple(v / D for v in T.values())
    return FeasibilityResult(True, Certificate("feasible-witness", x), tuple(T.basis), tuple(T.rows))


def solve_max(lp: RationalLP) -> MaxResult:
    """Maximize ``objective @ x`` exactly; raises InfeasibleLP or UnboundedLP."""
    if lp.objective is None:
        raise ValueError("linear program has no objective")
    A, scales, b, D = _scale_rows(lp)
    m, n = len(A), lp.num_vars
    C = _lcm_denominators(lp.objective)
    c = [int(v * C) for v in lp.objective]
    if m == 0:
        if any(v > 0 for v in c):
            ray = tuple(Fraction(1 if j == c.index(max(c)) else 0) for j in range(n))
            raise UnboundedLP(ray)
        zero = (Fraction(0),) * n
        return MaxResult(Fraction(0), Certificate("feasible-witness", zero),
                         Certificate("dual", (), Fraction(0)), ())
    T = _phase_one(A, b)
    if T.M[m, -1] != 0:
        y = _normalize_farkas(_farkas_from_phase_one(T, scales, m), lp)
        raise InfeasibleLP(Certificate("farkas", y))
    _drive_out_artificials(T)
    # phase II objective row for min -c: d*(-c) + sum_i c_B(i) * M[i]
    k = len(T.basis)
    M = T.M
    obj = np.zeros(M.shape[1], dtype=object)
    obj[:n] = [-T.d * v for v in c]
    for i, j in enumerate(T.basis):
        if j < n and c[j]:
            obj = obj + c[j] * M[i]
    M[k] = obj
    s = T.run(n)
    if s is not None:
        ray = [Fraction(0)] * n
        ray[s] = Fraction(1)
        for i, j in enumerate(T.basis):
            if j < n:
                ray[j] = Fraction(-T.M[i, s], T.d)
        raise UnboundedLP(tuple(ray))
    x = tuple(v / D for v in T.values())
    value = sum((cv * xv for cv, xv in zip(lp.objective, x)), Fraction(0))
    # dual on kept rows from the artificial columns; dropped rows get 0
    y = [Fraction(0)] * m
    objrow = T.M[len(T.basis)]
    for i in T.rows:
        y[i] = Fraction(objrow[n + i], T.d) * T.flip[i] * scales[i] / C
    dual_value = sum((yi * bi for yi, bi in zip(y, lp.rhs)), Fraction(0))
    if dual_value != value:
        raise ArithmeticError("primal and dual values disagree")  # never expected
    return MaxResult(value, Certificate("feasible-witness", x),
                     Certificate("dual", tuple(y), dual_value), tuple(T.basis))


# ---------------------------------------------------------------------------
# independent verification


def verify_witness(lp: RationalLP, x) -> bool:
    if len(x) != lp.num_vars or any(v < 0 for v in x):
        return False
    for r, b in zip(lp.rows, lp.rhs):
        if sum((a * v for a, v in zip(r, x) if a and v), Fraction(0)) != b:
            return False
    return True


def verify_farkas(lp: RationalLP, y) -> bool:
    if len(y) != lp.num_rows:
        return False
    for j in range(lp.num_vars):
        if sum((yi * r[j] for yi, r in zip(y, lp.rows) if yi), Fraction(0)) > 0:
            return False
    return sum((yi * b for yi, b in zip(y, lp.rhs)), Fraction(0)) > 0


def verify_dual(lp: RationalLP, y, value=None) -> bool:
    """``y^T A >= c`` componentwise (and ``y^T b == value`` when given)."""
    if lp.objective is None or len(y) != lp.num_rows:
        return False
    for j in range(lp.num_vars):
        if sum((yi * r[j] for yi, r in zip(y, lp.rows) if yi), Fraction(0)) < lp.objective[j]:
            return False
    if value is not None:
        return sum((yi * b for yi, b in zip(y, lp.rhs)), Fraction(0)) == value
    return True


def verify_certificate(lp: RationalLP, cert: Certificate) -> bool:
    if cert.kind == "feasible-witness":
        return verify_witness(lp, cert.vector)
    if cert.kind == "farkas":
        return verify_farkas(lp, cert.vector)
    if cert.kind == "dual":
        return verify_dual(lp, cert.vector, cert.value)
    raise ValueError(f"unknown certificate kind {cert.kind!r}")


# ---------------------------------------------------------------------------
# warm starts for families sharing one coefficient matrix


class RhsFamilySolver:
    """Feasibility for many right-hand sides over one fixed coefficient matrix.

    Previously found feasible bases and Farkas vectors are retried before a
    fresh simplex run.  A stored Farkas vector already satisfies ``y^T A <= 0``,
    so reusing it only needs ``y^T b > 0``.  A stored basis is reused when its
    exact inverse maps ``b`` to a nonnegative point that satisfies every row.
    Verdicts stay exact; only the work changes.
    """

    def __init__(self, rows, max_cached: int = 32):
        self.rows = tuple(tuple(Fraction(v) for v in r) for r in rows)
        self.num_vars = len(self.rows[0]) if self.rows else 0
        self.bases: list = []   # (kept rows, basis columns, inverse)
        self.farkas: list = []
        self.max_cached = max_cached
        self.stats = {"simplex": 0, "basis_hits": 0, "farkas_hits": 0}

    def lp(self, rhs) -> RationalLP:
        return RationalLP(self.num_vars, self.rows, tuple(rhs))

    def _from_basis(self, entry, rhs):
        kept, cols, inv = entry
        bk = [rhs[i] for i in kept]
        xb = [sum((a * b for a, b in zip(row, bk) if a), Fraction(0)) for row in inv]
        if any(v < 0 for v in xb):
            return None
        for i, r in enumerate(self.rows):
            if sum((r[j] * v for j, v in zip(cols, xb) if v), Fraction(0)) != rhs[i]:
                return None
        x = [Fraction(0)] * self.num_vars
        for j, v in zip(cols, xb):
            x[j] = v
        return x

    def solve(self, rhs) -> FeasibilityResult:
        rhs = tuple(Fraction(v) for v in rhs)
        for k, y in enumerate(self.farkas):
            yb = sum((a * b for a, b in zip(y, rhs) if a), Fraction(0))
            if yb > 0:
                self.farkas.insert(0, self.farkas.pop(k))
                self.stats["farkas_hits"] += 1
                return FeasibilityResult(False, Certificate("farkas", tuple(v / yb for v in y)))
        for k, entry in enumerate(self.bases):
            x = self._from_basis(entry, rhs)
            if x is not None:
                self.bases.insert(0, self.bases.pop(k))
                self.stats["basis_hits"] += 1
                return FeasibilityResult(True, Certificate("feasible-witness", tuple(x)), entry[1])
        self.stats["simplex"] += 1
        res = solve_feasibility(self.lp(rhs))
        if res.feasible:
            if res.basis is not None:
                kept = res.basis_rows
                B = [[self.rows[i][j] for j in res.basis] for i in kept]
                inv = _fraction_inverse(B)
                if inv is not None:
                    self._remember(self.bases, (kept, res.basis, inv))
        else:
            self._remember(self.farkas, res.farkas)
        return res

    def _remember(self, pool, item):
        pool.insert(0, item)
        del pool[self.max_cached:]


def _fraction_inverse(B):
    m = len(B)
    M = [list(B[i]) + [Fraction(int(i == j)) for j in range(m)] for i in range(m)]
    for k in range(m):
        piv = next((i for i in range(k, m) if M[i][k] != 0), None)
        if piv is None:
            return None
        M[k], M[piv] = M[piv], M[k]
        pk = M[k][k]
        M[k] = [v / pk for v in M[k]]
        for i in range(m):
            if i != k and M[i][k] != 0:
                f = M[i][k]
                M[i] = [a - f * b for a, b in zip(M[i], M[k])]
    return [row[m:] for row in M]


# ---------------------------------------------------------------------------
# exchange format


def _fmt(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def format_lp(lp: RationalLP) -> str:
    """Text form: ``vars N rows M``, one ``a_1 .. a_N b`` line per row, then an
    optional ``objective c_1 .. c_N`` line.  Every number is written ``num/den``."""
    out = [f"vars {lp.num_vars} rows {lp.num_rows}"]
    for r, b in zip(lp.rows, lp.rhs):
        out.append(" ".join(_fmt(v) for v in (*r, b)))
    if lp.objective is not None:
        out.append("objective " + " ".join(_fmt(v) for v in lp.objective))
    return "\n".join(out) + "\n"


def parse_lp(text: str, source: str = "<lp>") -> RationalLP:
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{source}: empty LP file")
    lineno, head = lines[0]
    parts = head.split()
    if len(parts) != 4 or parts[0] != "vars" or parts[2] != "rows":
        raise ValueError(f"{source}:{lineno}: expected header 'vars N rows M'")
    try:
        n, m = int(parts[1]), int(parts[3])
    except ValueError:
        raise ValueError(f"{source}:{lineno}: header counts must be integers") from None

    def numbers(lineno, toks):
        try:
            return [Fraction(t) for t in toks]
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"{source}:{lineno}: malformed rational in {' '.join(toks)!r}") from None

    rows, rhs, objective = [], [], None
    for lineno, ln in lines[1:]:
        toks = ln.split()
        if toks[0] == "objective":
            vals = numbers(lineno, toks[1:])
            if len(vals) != n:
                raise ValueError(f"{source}:{lineno}: objective needs {n} entries, got {len(vals)}")
            objective = tuple(vals)
            continue
        vals = numbers(lineno, toks)
        if len(vals) != n + 1:
            raise ValueError(f"{source}:{lineno}: row needs {n + 1} entries, got {len(vals)}")
        rows.append(tuple(vals[:-1]))
        rhs.append(vals[-1])
    if len(rows) != m:
        raise ValueError(f"{source}: header declares {m} rows, found {len(rows)}")
    return RationalLP(n, tuple(rows), tuple(rhs), objective)


# ---------------------------------------------------------------------------
# the Sleeper dual check


def _all_binary_matrices(rows: int, cols: int) -> np.ndarray:
    """Every ``rows x cols`` matrix over {1, 2}, flattened row-major, in lex order."""
    T = rows * cols
    codes = np.arange(2 ** T, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(T - 1, -1, -1)) & 1
    return (bits + 1).astype(np.uint8)


def _sleeper_dual_terms(mats: np.ndarray):
    """Per matrix: counts for the game-3 and objective sums of the dual rows.

    ``g3[v, a, b]`` counts (a1 != a2, b1 != b2) with ``M[a1,b1] = a`` and
    ``M[a2,b2] = b`` out of 144; ``obj[v]`` is the number of successes of the
    left-input and right-input tests out of 48 each.
    """
    V = mats.shape[0]
    M = mats.reshape(V, 4, 4).astype(np.int64)
    pairs = [(i, j) for i in range(4) for j in range(4) if i != j]
    g3 = np.zeros((V, 2, 2), dtype=np.int64)
    for a1, a2 in pairs:
        for b1, b2 in pairs:
            g3[np.arange(V), M[:, a1, b1] - 1, M[:, a2, b2] - 1] += 1
    obj = np.zeros(V, dtype=np.int64)
    for a in range(4):
        for b1, b2 in pairs:
            obj += M[:, a, b1] == M[:, a, b2]  # shared left input, distinct right inputs
            obj += M[:, b1, a] == M[:, b2, a]  # shared right input, distinct left inputs
    return g3, obj


def verify_dual_sleeper(z) -> dict:
    """Check ``sum_ab z_ab coef3(M; a, b) >= obj(M)`` for every 4x4 binary matrix.

    ``z`` is ``(z11, z12, z21, z22)``.  ``coef3`` is the postselected two-copy
    marginal of the single-input game (weight 1/144 per ordered distinct pair of
    pairs); ``obj`` averages the two correlation tests (weight 1/96 overall).
    The check is run on all 65,536 matrices and, separately, on the 317 orbit
    representatives under row and column permutations; both must agree.
    """
    from . import strategy as _strategy

    zf = [Fraction(v) for v in z]
    if len(zf) != 4:
        raise ValueError("z needs four entries (z11, z12, z21, z22)")
    L = math.lcm(*(v.denominator for v in zf))
    zi = np.array([int(v * L) for v in zf], dtype=object).reshape(2, 2)

    def check(mats):
        g3, obj = _sleeper_dual_terms(mats)
        # sum z_ab g3/144 >= obj/96  <=>  2 * sum (L z_ab) g3 >= 3 L obj
        lhs = 2 * (g3.astype(object) * zi).reshape(len(mats), 4).sum(axis=1)
        rhs = 3 * L * obj.astype(object)
        return bool(np.all(lhs >= rhs))

    full = check(_all_binary_matrices(4, 4))
    group = _strategy.RelabelGroup.independent(2)
    reps = _strategy.orbit_representatives((4, 4), 2, group)
    reduced = check(np.array([r.table for r in reps], dtype=np.uint8))
    if full != reduced:
        raise AssertionError("full and orbit-reduced dual checks disagree")
    value = sum(zf, Fraction(0)) / 4
    return {"valid": full, "value": value}
