"""The correlated-sleeper scenario: feasibility over (lambda1, lambda2), scans,
boundary tracing and the optimal-score primal/dual pair.

Both target distributions are symmetric 2x2 tables with ``p(1,1) = p(2,2) =
lambda`` and ``p(1,2) = p(2,1) = 1/2 - lambda``.  The one-input network has a
uniform output and the last network's target is ``p1 (x) p2 (x) u2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

from . import lp as lpmod
from .inflation import InflationModel, InflationSpec, NetworkInflation
from .scenario import OutcomeDistribution, builtin, parse_rational

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)
DEFAULT_TOL = Fraction(1, 1024)
DEFAULT_STEP = Fraction(1, 200)


@dataclass(frozen=True)
class SleeperPoint:
    lambda1: Fraction
    lambda2: Fraction

    def __post_init__(self):
        l1, l2 = parse_rational(self.lambda1), parse_rational(self.lambda2)
        for name, v in (("lambda1", l1), ("lambda2", l2)):
            if not 0 <= v <= HALF:
                raise ValueError(f"{name}={v} outside [0, 1/2]")
        object.__setattr__(self, "lambda1", l1)
        object.__setattr__(self, "lambda2", l2)

    def swapped(self) -> "SleeperPoint":
        return SleeperPoint(self.lambda2, self.lambda1)


def correlation_table(lam) -> OutcomeDistribution:
    lam = Fraction(lam)
    return OutcomeDistribution((2, 2), (lam, HALF - lam, HALF - lam, lam))


def lambdas_to_targets(pt: SleeperPoint) -> tuple:
    """``(p1, p2, u2, p1 (x) p2 (x) u2)``, one target per network."""
    if not isinstance(pt, SleeperPoint):
        pt = SleeperPoint(*pt)
    p1, p2 = correlation_table(pt.lambda1), correlation_table(pt.lambda2)
    u2 = OutcomeDistribution.uniform((2,))
    return p1, p2, u2, p1.tensor(p2).tensor(u2)


def sleeper_spec(n: int = 4) -> InflationSpec:
    """Default inflation: two copies of each two-agent network, four of the
    single-agent one and one of the five-agent one.  Sources reaching the same
    input slot are postselected distinct; the grouping follows slot classes."""
    return InflationSpec(n, (
        # sources: 0 shared left input, 1 and 2 right inputs (per copy)
        NetworkInflation(2, ((0, 3), (1, 2, 4, 5))),
        # sources: 0 and 1 left inputs, 2 shared right input
        NetworkInflation(2, ((0, 1, 3, 4), (2, 5))),
        NetworkInflation(4, ((0, 2, 4, 6), (1, 3, 5, 7))),
        # left inputs 1, 4, 5, 7 and right inputs 2, 3, 6, 8 (0-based below)
        NetworkInflation(1, ((0, 3, 4, 6), (1, 2, 5, 7))),
    ))


def sleeper_model(spec: Optional[InflationSpec] = None) -> InflationModel:
    """Cached coefficient model; ``None`` means the default spec at n=4."""
    return _cached_model(spec or sleeper_spec())


@lru_cache(maxsize=16)
def _cached_model(spec: InflationSpec) -> InflationModel:
    return InflationModel(builtin("sleeper"), spec)


@dataclass(frozen=True)
class PointVerdict:
    point: SleeperPoint
    feasible: bool
    certificate: lpmod.Certificate

    def lp(self, spec: Optional[InflationSpec] = None) -> lpmod.RationalLP:
        return sleeper_model(spec).lp(lambdas_to_targets(self.point))


def check_point(pt, spec: Optional[InflationSpec] = None) -> PointVerdict:
    if not isinstance(pt, SleeperPoint):
        pt = SleeperPoint(*pt)
    res = sleeper_model(spec).solve_targets(lambdas_to_targets(pt))
    return PointVerdict(pt, res.feasible, res.certificate)


# ---------------------------------------------------------------------------
# scans


@dataclass(frozen=True)
class ScanResult:
    points: tuple  # (lambda1, lambda2, feasible), row-major in lambda1 then lambda2

    def feasible_points(self):
        return [(a, b) for a, b, f in self.points if f]

    def to_csv(self, exact: bool = False) -> str:
        head = "lambda1,lambda2,verdict" + (",lambda1_exact,lambda2_exact" if exact else "")
        lines = [head]
        for a, b, f in self.points:
            row = f"{decimal(a)},{decimal(b)},{'F' if f else 'I'}"
            if exact:
                row += f",{a.numerator}/{a.denominator},{b.numerator}/{b.denominator}"
            lines.append(row)
        return "\n".join(lines) + "\n"


def decimal(q: Fraction, digits: int = 12) -> str:
    """Round-half-even decimal rendering with a fixed number of digits."""
    scaled = q * 10 ** digits
    r = round(scaled)
    sign = "-" if r < 0 else ""
    r = abs(r)
    return f"{sign}{r // 10 ** digits}.{r % 10 ** digits:0{digits}d}"


def _axis(lo, hi, step) -> list:
    out = []
    v = lo
    while v <= hi:
        out.append(v)
        v += step
    return out


def _pair(v):
    if isinstance(v, (tuple, list)):
        return parse_rational(v[0]), parse_rational(v[1])
    q = parse_rational(v)
    return q, q


def _solve_chunk(args):
    pts, spec = args
    return [check_point(p, spec).feasible for p in pts]


def scan_grid(lo, hi, step=DEFAULT_STEP, spec: Optional[InflationSpec] = None, workers: int = 1) -> ScanResult:
    """Verdicts on the mesh ``lo + k * step`` up to ``hi`` in each coordinate.

    ``lo``/``hi`` are scalars or ``(lambda1, lambda2)`` pairs.  With ``workers >
    1`` the mesh rows are solved in separate processes; output order is fixed.
    """
    step = parse_rational(step)
    if step <= 0:
        raise ValueError("step must be positive")
    (lo1, lo2), (hi1, hi2) = _pair(lo), _pair(hi)
    pts = [SleeperPoint(a, b) for a in _axis(lo1, hi1, step) for b in _axis(lo2, hi2, step)]
    if workers > 1 and len(pts) > 1:
        import multiprocessing as mp
        size = max(1, math.ceil(len(pts) / (4 * workers)))
        chunks = [(pts[i:i + size], spec) for i in range(0, len(pts), size)]
        with mp.get_context("spawn").Pool(workers) as pool:
            flags = [f for part in pool.map(_solve_chunk, chunks) for f in part]
    else:
        flags = _solve_chunk((pts, spec))
    return ScanResult(tuple((p.lambda1, p.lambda2, f) for p, f in zip(pts, flags)))


# ---------------------------------------------------------------------------
# boundary search


@dataclass(frozen=True)
class BoundaryResult:
    lambda1: Fraction
    lambda2_star: Fraction  # largest certified feasible value found
    upper: Fraction         # smallest certified infeasible value (== lambda2_star at the domain edge)


def trace_boundary(lambda1, tol=DEFAULT_TOL, lo=QUARTER, hi=HALF, spec: Optional[InflationSpec] = None) -> BoundaryResult:
    """Bisection on lambda2 with dyadic midpoints.

    The lower probe must be feasible.  When the upper probe is infeasible the
    flip is bracketed within ``tol``.  When the upper probe is feasible and
    sits on the edge of the parameter range (1/2), the feasible set reaches the
    edge and ``hi`` is returned.  Otherwise there is no crossing to find.
    """
    lambda1, tol = parse_rational(lambda1), parse_rational(tol)
    lo, hi = parse_rational(lo), parse_rational(hi)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if not lo < hi:
        raise ValueError("search interval is empty")
    f_lo = check_point((lambda1, lo), spec).feasible
    f_hi = check_point((lambda1, hi), spec).feasible
    if f_lo and f_hi and hi == HALF:
        return BoundaryResult(lambda1, hi, hi)
    if f_lo == f_hi or not f_lo:
        raise ValueError(f"no feasible-to-infeasible crossing on [{lo}, {hi}] at lambda1={lambda1}")
    a, b = lo, hi
    while b - a > tol:
        mid = (a + b) / 2
        if check_point((lambda1, mid), spec).feasible:
            a = mid
        else:
            b = mid
    return BoundaryResult(lambda1, a, b)


@dataclass(frozen=True)
class PolarTrace:
    center: tuple
    rays: tuple      # (direction, feasible point, infeasible point or None)
    min_lambda: Fraction
    bracket: Fraction


def _ray_limit(center, d) -> Fraction:
    """Largest r with ``center + r d`` inside [0, 1/2]^2."""
    lims = []
    for c, v in zip(center, d):
        if v > 0:
            lims.append((HALF - c) / v)
        elif v < 0:
            lims.append(-c / v)
    return min(lims)


def polar_directions(num: int) -> list:
    """``num`` rational directions sweeping the half-plane lambda1 <= center.

    Rays point to angles from 90 to 270 degrees; coordinates are rational
    approximations of the unit vectors (any rational vector is a valid ray).
    """
    out = []
    for k in range(num):
        theta = math.pi / 2 + math.pi * k / (num - 1) if num > 1 else math.pi
        out.append((Fraction(math.cos(theta)).limit_denominator(10_000),
                    Fraction(math.sin(theta)).limit_denominator(10_000)))
    return out


def polar_trace(tol=Fraction(1, 256), num_rays: int = 25, center=(QUARTER, QUARTER),
                spec: Optional[InflationSpec] = None) -> PolarTrace:
    """Bisection of the threshold radius along rays from ``center``."""
    tol = parse_rational(tol)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    center = tuple(parse_rational(c) for c in center)
    if not check_point(center, spec).feasible:
        raise ValueError("polar search center must be feasible")
    rays = []
    for d in polar_directions(num_rays):
        if d == (0, 0):
            continue
        rmax = _ray_limit(center, d)
        norm = max(abs(d[0]), abs(d[1]))

        def at(r):
            return (center[0] + r * d[0], center[1] + r * d[1])

        if check_point(at(rmax), spec).feasible:
            rays.append((d, at(rmax), None))
            continue
        a, b = Fraction(0), rmax
        while (b - a) * norm > tol:
            mid = (a + b) / 2
            if check_point(at(mid), spec).feasible:
                a = mid
            else:
                b = mid
        rays.append((d, at(a), at(b)))
    feas = [p for _, p, _ in rays]
    min_l = min(min(p) for p in feas)
    return PolarTrace(center, tuple(rays), min_l, tol)


def min_feasible_lambda(tol=Fraction(1, 256), num_rays: int = 25, spec: Optional[InflationSpec] = None) -> Fraction:
    """Smallest coordinate of a certified feasible point on the polar boundary trace.

    Each ray's feasible end is within ``tol`` of its infeasible end; the
    angular spacing is set by ``num_rays``.
    """
    return polar_trace(tol, num_rays, spec=spec).min_lambda


# ---------------------------------------------------------------------------
# optimal score


def primal_spec() -> InflationSpec:
    """One copy of each two-agent network (right inputs resp. left inputs
    distinct) and two copies of the single-agent network with both inputs
    distinct across copies.  The last network is unused."""
    return InflationSpec(4, (
        NetworkInflation(1, ((1, 2),)),
        NetworkInflation(1, ((0, 1),)),
        NetworkInflation(2, ((0, 2), (1, 3))),
        NetworkInflation(0, ()),
    ))


@lru_cache(maxsize=1)
def primal_model() -> InflationModel:
    return InflationModel(builtin("sleeper"), primal_spec())


def primal_lp() -> lpmod.RationalLP:
    """Maximize the averaged success of the two correlation tests subject to the
    two-copy marginal of the single-input game being uniform (1/4 per entry)."""
    model = primal_model()
    b1, b2, b3 = model.blocks
    c1, c2, c3 = model.counts
    V = model.num_vars
    diag = [r for r, row in enumerate(b1.outcome_rows) if row[0] == row[1]]
    objective = tuple(Fraction(int(sum(c1[v, r] for r in diag)), 2 * b1.total)
                      + Fraction(int(sum(c2[v, r] for r in diag)), 2 * b2.total) for v in range(V))
    rows = tuple(tuple(Fraction(int(c3[v, r]), b3.total) for v in range(V)) for r in range(b3.nrows))
    rhs = (QUARTER,) * b3.nrows
    labels = tuple((3, row) for row in b3.outcome_rows)
    return lpmod.RationalLP(V, rows, rhs, objective, labels)


@dataclass(frozen=True)
class OptimizeResult:
    primal: Fraction
    dual: Fraction
    dual_z: tuple
    witness: tuple
    verified: bool


def optimize() -> OptimizeResult:
    """Exact primal optimum, symmetrized dual certificate and its full check."""
    lp = primal_lp()
    res = lpmod.solve_max(lp)
    y = res.dual.vector  # rows are (1,1), (1,2), (2,1), (2,2)
    off = (y[1] + y[2]) / 2
    z = (y[0], off, off, y[3])
    # symmetrizing keeps dual feasibility: the rows (1,2) and (2,1) are swapped
    # by exchanging the copies, which maps the column set onto itself
    if not lpmod.verify_dual(lp, z):
        raise ArithmeticError("symmetrized dual is not dual feasible")
    check = lpmod.verify_dual_sleeper(z)
    dual_value = sum(zi * b for zi, b in zip(z, lp.rhs))
    verified = (check["valid"] and check["value"] == dual_value == res.value
                and lpmod.verify_witness(lp, res.witness.vector))
    return OptimizeResult(res.value, dual_value, z, res.witness.vector, verified)
