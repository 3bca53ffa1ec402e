"""Fanout inflations: a symmetric joint distribution over copied agents whose
marginals on selected agent subsets are fixed products of target entries.

Agents are labeled ``(name, indices)``.  Each index position carries a role;
the symmetry group is one permutation of ``range(n)`` per role, acting on the
indices of every agent.  The LP is written over orbit weights: ``q`` is uniform
inside each orbit of atomic events, so symmetry holds by construction and a
marginal coefficient is the fraction of an orbit consistent with the event.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import kernels, lp as lpmod
from .inflation import InflationModel, InflationSpec, NetworkInflation, _dedup_indices
from .scenario import NetworkScenario, OutcomeDistribution, builtin, oracle_compatible

DEFAULT_CAP = 2 ** 16


@dataclass(frozen=True)
class Marginal:
    agents: tuple          # agent labels, in the order of the target's legs
    target: OutcomeDistribution


@dataclass(frozen=True)
class FanoutProblem:
    n: int
    agents: tuple          # ((name, indices), ...)
    outcomes: tuple        # outcome count per agent
    roles: dict            # name -> role of each index position
    marginals: tuple
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if len(self.agents) != len(self.outcomes):
            raise ValueError("one outcome count per agent is required")
        index = {a: k for k, a in enumerate(self.agents)}
        if len(index) != len(self.agents):
            raise ValueError("agent labels must be distinct")
        for name, idx in self.agents:
            if name not in self.roles or len(self.roles[name]) != len(idx):
                raise ValueError(f"agent {name}{idx} has no matching role list")
            if any(not 0 <= i < self.n for i in idx):
                raise ValueError(f"agent {name}{idx} has an index outside range({self.n})")
        for m in self.marginals:
            for a in m.agents:
                if a not in index:
                    raise ValueError(f"marginal refers to unknown agent {a}")
            shape = tuple(self.outcomes[index[a]] for a in m.agents)
            if tuple(m.target.shape) != shape:
                raise ValueError(f"marginal target shape {m.target.shape} does not match agents' outcomes {shape}")
        # the agent set must be closed under the group
        for perms in self._generators():
            for name, idx in self.agents:
                img = (name, tuple(perms[r][i] for r, i in zip(self.roles[name], idx)))
                if img not in index:
                    raise ValueError(f"symmetry maps {name}{idx} outside the agent set")

    @property
    def num_events(self) -> int:
        return math.prod(self.outcomes)

    @property
    def num_roles(self) -> int:
        return 1 + max((r for rs in self.roles.values() for r in rs), default=-1)

    def _generators(self):
        k = self.num_roles
        ident = tuple(range(self.n))
        if self.n < 2:
            return [tuple([ident] * k)]
        swap = (1, 0) + tuple(range(2, self.n))
        cycle = tuple((i + 1) % self.n for i in range(self.n))
        out = []
        for r in range(k):
            for g in (swap, cycle):
                perms = [ident] * k
                perms[r] = g
                out.append(tuple(perms))
        return out

    def group_order(self) -> int:
        return math.factorial(self.n) ** self.num_roles

    def agent_maps(self) -> np.ndarray:
        """``maps[g, t]``: the agent whose outcome lands on agent ``t`` under element ``g``."""
        index = {a: k for k, a in enumerate(self.agents)}
        maps = []
        for choice in itertools.product(itertools.permutations(range(self.n)), repeat=self.num_roles):
            row = [index[(name, tuple(choice[r][i] for r, i in zip(self.roles[name], idx)))]
                   for name, idx in self.agents]
            maps.append(row)
        return np.array(maps, dtype=np.intp)


def _structure_key(problem: FanoutProblem) -> tuple:
    return (problem.n, problem.agents, problem.outcomes, tuple(sorted(problem.roles.items())),
            tuple(m.agents for m in problem.marginals))


_STRUCTURES: dict = {}


def _fold(problem: FanoutProblem):
    """Events, orbit ids and sizes, and per-marginal orbit counts (target independent)."""
    key = _structure_key(problem)
    if key in _STRUCTURES:
        return _STRUCTURES[key]
    ks = np.array(problem.outcomes, dtype=np.int64)
    radix = np.ones(len(ks), dtype=np.int64)
    for i in range(len(ks) - 2, -1, -1):
        radix[i] = radix[i + 1] * ks[i + 1]
    codes = np.arange(problem.num_events, dtype=np.int64)
    events = ((codes[:, None] // radix) % ks).astype(np.uint8)
    canon = kernels.canonicalize_tables(events, problem.agent_maps())
    reps, orbit_id, sizes = np.unique(canon, axis=0, return_inverse=True, return_counts=True)
    orbit_id = orbit_id.ravel()
    index = {a: k for k, a in enumerate(problem.agents)}
    blocks = []
    for m in problem.marginals:
        cols = [index[a] for a in m.agents]
        mk = np.array([problem.outcomes[c] for c in cols], dtype=np.int64)
        mr = np.ones(len(mk), dtype=np.int64)
        for i in range(len(mk) - 2, -1, -1):
            mr[i] = mr[i + 1] * mk[i + 1]
        nrows = int(np.prod(mk))
        r = (events[:, cols].astype(np.int64) * mr).sum(axis=1)
        counts = np.bincount(orbit_id * nrows + r, minlength=len(reps) * nrows).reshape(len(reps), nrows)
        classes = {}
        for row in range(nrows):
            classes.setdefault(counts[:, row].tobytes(), []).append(row)
        blocks.append((counts, sorted(classes.values(), key=lambda c: c[0])))
    out = (events, reps, orbit_id, sizes, blocks)
    if len(_STRUCTURES) > 8:
        _STRUCTURES.clear()
    _STRUCTURES[key] = out
    return out


class FanoutModel:
    """Orbit folding of the atomic events of a fanout problem."""

    def __init__(self, problem: FanoutProblem):
        total = problem.num_events
        if total > problem.cap:
            raise ValueError(f"{total} atomic events exceed the cap {problem.cap}")
        self.problem = problem
        events, reps, orbit_id, sizes, blocks = _fold(problem)
        self.events = events
        self.representatives = reps
        self.orbit_id = orbit_id
        self.orbit_size = sizes
        self.blocks = [(m, counts, classes) for m, (counts, classes) in zip(problem.marginals, blocks)]

    @property
    def num_vars(self) -> int:
        return len(self.representatives)

    def lp(self, dedup: bool = True) -> lpmod.RationalLP:
        V = self.num_vars
        rows = [tuple([Fraction(1)] * V)]
        rhs = [Fraction(1)]
        labels = [("normalization",)]
        for bi, (m, counts, classes) in enumerate(self.blocks):
            probs = m.target.probabilities
            picks = _dedup_indices(classes, probs) if dedup else list(range(len(probs)))
            for r in picks:
                rows.append(tuple(Fraction(int(counts[v, r]), int(self.orbit_size[v])) for v in range(V)))
                rhs.append(probs[r])
                labels.append((bi, r))
        return lpmod.RationalLP(V, tuple(rows), tuple(rhs), None, tuple(labels))

    def expand(self, weights) -> list:
        """Event distribution with each orbit weight spread uniformly over its orbit."""
        return [Fraction(weights[o]) / int(self.orbit_size[o]) for o in self.orbit_id]

    def event_marginal(self, q, marginal: Marginal) -> list:
        """Marginal of an explicit event distribution on a constraint's agents."""
        index = {a: k for k, a in enumerate(self.problem.agents)}
        cols = [index[a] for a in marginal.agents]
        out = {}
        for e, p in zip(self.events, q):
            if p:
                key = tuple(int(e[c]) + 1 for c in cols)
                out[key] = out.get(key, Fraction(0)) + p
        return [out.get(key, Fraction(0)) for key, _ in marginal.target.items()]


def build_fanout_lp(problem: FanoutProblem) -> lpmod.RationalLP:
    return FanoutModel(problem).lp()


def build_unfolded_lp(problem: FanoutProblem) -> lpmod.RationalLP:
    """One variable per atomic event, explicit symmetry rows for group generators."""
    total = problem.num_events
    if total > problem.cap:
        raise ValueError(f"{total} atomic events exceed the cap {problem.cap}")
    ks = np.array(problem.outcomes, dtype=np.int64)
    radix = np.ones(len(ks), dtype=np.int64)
    for i in range(len(ks) - 2, -1, -1):
        radix[i] = radix[i + 1] * ks[i + 1]
    codes = np.arange(total, dtype=np.int64)
    events = (codes[:, None] // radix) % ks
    index = {a: k for k, a in enumerate(problem.agents)}
    rows, rhs = [], []
    zero = [Fraction(0)] * total
    rows.append(tuple([Fraction(1)] * total))
    rhs.append(Fraction(1))
    seen = set()
    for perms in problem._generators():
        amap = [index[(name, tuple(perms[r][i] for r, i in zip(problem.roles[name], idx)))]
                for name, idx in problem.agents]
        images = events[:, amap] @ radix
        for e in range(total):
            f = int(images[e])
            key = (min(e, f), max(e, f))
            if e == f or key in seen:
                continue
            seen.add(key)
            row = list(zero)
            row[e], row[f] = Fraction(1), Fraction(-1)
            rows.append(tuple(row))
            rhs.append(Fraction(0))
    for m in problem.marginals:
        cols = [index[a] for a in m.agents]
        mk = [problem.outcomes[c] for c in cols]
        mr = [math.prod(mk[i + 1:]) for i in range(len(mk))]
        r = events[:, cols] @ np.array(mr, dtype=np.int64)
        for key, p in enumerate(m.target.probabilities):
            rows.append(tuple(Fraction(int(v == key)) for v in r))
            rhs.append(p)
    return lpmod.RationalLP(total, tuple(rows), tuple(rhs))


# ---------------------------------------------------------------------------
# builders for the worked correspondences


def sleeper_fanout(p1: OutcomeDistribution, p2: OutcomeDistribution, cap: int = DEFAULT_CAP) -> FanoutProblem:
    """Sixteen copies ``A_ij`` of the agent, row and column indices permuted independently."""
    n = 4
    agents = tuple(("A", (i, j)) for i in range(n) for j in range(n))
    u = OutcomeDistribution.uniform((2,))

    def A(i, j):
        return ("A", (i - 1, j - 1))

    marginals = (
        Marginal((A(1, 1), A(1, 2), A(2, 3), A(2, 4)), p1.tensor(p1)),
        Marginal((A(1, 1), A(2, 1), A(3, 2), A(4, 2)), p2.tensor(p2)),
        Marginal((A(1, 1), A(2, 2), A(3, 3), A(4, 4)), u.power(4)),
        Marginal((A(1, 1), A(1, 2), A(2, 3), A(3, 3), A(4, 4)), p1.tensor(p2).tensor(u)),
    )
    return FanoutProblem(n, agents, (2,) * len(agents), {"A": (0, 1)}, marginals, cap)


def bilocal_fanout(p: OutcomeDistribution, n: int = 2, cap: int = DEFAULT_CAP) -> FanoutProblem:
    """Copies ``A_i``, ``B_ij``, ``C_j``; the two copies' diagonal agents carry ``p (x) p``."""
    ka, kb, kc = p.shape
    agents = tuple([("A", (i,)) for i in range(n)] + [("B", (i, j)) for i in range(n) for j in range(n)]
                   + [("C", (j,)) for j in range(n)])
    outcomes = tuple([ka] * n + [kb] * n * n + [kc] * n)
    marg = Marginal((("A", (0,)), ("B", (0, 0)), ("C", (0,)), ("A", (1,)), ("B", (1, 1)), ("C", (1,))),
                    p.tensor(p))
    return FanoutProblem(n, agents, outcomes, {"A": (0,), "B": (0, 1), "C": (1,)}, (marg,), cap)


def triangle3_fanout(p: OutcomeDistribution, n: int = 2, cap: int = DEFAULT_CAP) -> FanoutProblem:
    """Copies ``A_ij``, ``B_kl``, ``C_pq``; roles (tau, sigma), (sigma, pi), (pi, tau)."""
    ka, kb, kc = p.shape
    agents = tuple((name, (i, j)) for name in "ABC" for i in range(n) for j in range(n))
    outcomes = tuple(k for k in (ka, kb, kc) for _ in range(n * n))
    marg = Marginal(tuple((name, (i, i)) for i in (0, 1) for name in "ABC"), p.tensor(p))
    return FanoutProblem(n, agents, outcomes, {"A": (0, 1), "B": (1, 2), "C": (2, 0)}, (marg,), cap)


def triangle1_fanout(p: OutcomeDistribution, n: int = 6, cap: int = DEFAULT_CAP) -> FanoutProblem:
    """Copies ``A_ij`` (i != j) of the single strategy under one common permutation.

    Carries the two-copy triangle marginal and the extra three-agent marginal
    on ``A_12, A_34, A_56`` (pairwise disjoint sources), equal to the product of
    the one-party marginals.  At n=6 this has 2^30 events and is rejected by
    the default cap; construction validates shapes before the cap check.
    """
    if n < 6:
        raise ValueError("the two-copy marginal needs six distinct source values (n >= 6)")
    k = p.shape[0]
    if p.shape != (k, k, k):
        raise ValueError("one-strategy triangle needs equal outcome counts")
    agents = tuple(("A", (i, j)) for i in range(n) for j in range(n) if i != j)
    one = OutcomeDistribution.from_function((k,), lambda a: sum(
        v for out, v in p.items() if out[0] == a))

    def A(i, j):
        return ("A", (i - 1, j - 1))

    marginals = (
        Marginal((A(1, 2), A(2, 3), A(3, 1), A(4, 5), A(5, 6), A(6, 4)), p.tensor(p)),
        Marginal((A(1, 2), A(3, 4), A(5, 6)), one.power(3)),
    )
    return FanoutProblem(n, agents, (k,) * len(agents), {"A": (0, 0)}, marginals, cap)


# ---------------------------------------------------------------------------
# equivalence with the postselected formulation


def pair_groups_spec(scenario: NetworkScenario, n: int) -> InflationSpec:
    """Two copies of the single network; each source's two copies are distinct."""
    S = scenario.networks[0].num_sources
    return InflationSpec(n, (NetworkInflation(2, tuple((s, S + s) for s in range(S))),))


def fanout_for(scenario: NetworkScenario, spec: InflationSpec, targets) -> FanoutProblem:
    """The fanout counterpart of a supported postselected inflation."""
    from .sleeper import sleeper_spec

    if scenario == builtin("sleeper") and spec == sleeper_spec():
        return sleeper_fanout(targets[0], targets[1])
    for name, builder in (("bilocal", bilocal_fanout), ("triangle3", triangle3_fanout)):
        if len(scenario.networks) == 1 and scenario == builtin(name, scenario.strategies[0].outcomes):
            if spec == pair_groups_spec(scenario, spec.n):
                return builder(targets[0], spec.n)
    raise ValueError("no fanout correspondence is implemented for this scenario and inflation")


@dataclass(frozen=True)
class Equivalence:
    post_verdict: bool
    fanout_verdict: bool
    post_certificate: lpmod.Certificate
    fanout_certificate: lpmod.Certificate

    @property
    def equal(self) -> bool:
        return self.post_verdict == self.fanout_verdict


def check_equivalence(scenario: NetworkScenario, spec: InflationSpec, targets,
                      post_model: Optional[InflationModel] = None,
                      fanout_model: Optional[FanoutModel] = None) -> Equivalence:
    """Solve the postselected and fanout LPs exactly and compare verdicts.

    Both certificates are re-verified against their own LPs.
    """
    problem = fanout_for(scenario, spec, targets)
    post_model = post_model or InflationModel(scenario, spec)
    post_lp = post_model.lp(targets)
    post = lpmod.solve_feasibility(post_lp)
    fan_lp = (fanout_model.lp() if fanout_model is not None and fanout_model.problem == problem
              else FanoutModel(problem).lp())
    fan = lpmod.solve_feasibility(fan_lp)
    if not (lpmod.verify_certificate(post_lp, post.certificate) and lpmod.verify_certificate(fan_lp, fan.certificate)):
        raise ArithmeticError("certificate failed re-verification")
    return Equivalence(post.feasible, fan.feasible, post.certificate, fan.certificate)


# ---------------------------------------------------------------------------
# sample instances

# points on both sides of the Sleeper boundary, including the dual-bound edge
SLEEPER_SAMPLE = tuple((Fraction(a), Fraction(b)) for a, b in (
    ("1/2", "1/4"), ("1/4", "1/2"), ("1/4", "1/4"), ("3/8", "3/8"), ("1/2", "3/16"),
    ("1/2", "5/16"), ("2/5", "2/5"), ("9/20", "9/20"), ("1/2", "1/2"),
))


def random_binned_strategies(scenario: NetworkScenario, rng, max_bins: int = 3) -> list:
    """Random deterministic strategies with a random bin count per source.

    Bin counts are drawn per source of the first network in which it appears
    and shared by every slot reading it, so the tuple is a valid oracle input.
    """
    from .strategy import DeterministicStrategy

    slot_bins = {}
    for net in scenario.networks:
        bins = {}
        for agent in net.agents:
            for slot, src in enumerate(agent.sources):
                key = (agent.strategy, slot)
                if key in slot_bins:
                    bins.setdefault(src, slot_bins[key])
        for agent in net.agents:
            for slot, src in enumerate(agent.sources):
                b = bins.setdefault(src, int(rng.integers(1, max_bins + 1)))
                slot_bins.setdefault((agent.strategy, slot), b)
    out = []
    for p, sig in enumerate(scenario.strategies, start=1):
        dom = tuple(slot_bins.get((p, s), 1) for s in range(sig.arity))
        size = math.prod(dom)
        table = tuple(int(v) + 1 for v in rng.integers(0, sig.outcomes, size=size))
        out.append(DeterministicStrategy(dom, sig.outcomes, table))
    return out


def bilocal_sample_targets(count: int = 20, seed: int = 0) -> list:
    """Bilocal targets: oracle-compatible points and random perturbations of them.

    Even entries are oracle outputs of random binned strategies; odd entries
    mix the previous oracle point with a random point mass, weight 1/k for a
    random k in 2..5.  All arithmetic is exact.
    """
    scen = builtin("bilocal")
    rng = np.random.default_rng(seed)
    out = []
    base = None
    for i in range(count):
        if i % 2 == 0:
            base = oracle_compatible(scen, random_binned_strategies(scen, rng))[0]
            out.append(base)
        else:
            cell = tuple(int(v) + 1 for v in rng.integers(0, 2, size=3))
            t = Fraction(1, int(rng.integers(2, 6)))
            mass = OutcomeDistribution.point_mass(base.shape, cell)
            out.append(OutcomeDistribution(base.shape, tuple(
                (1 - t) * a + t * b for (_, a), (_, b) in zip(base.items(), mass.items()))))
    return out
