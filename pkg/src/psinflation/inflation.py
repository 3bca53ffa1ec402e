"""Postselected inflation linear programs.

An inflation of network ``c`` takes ``m_c`` copies of the network.  Copy ``j``
(0-based) of source ``s`` (1-based) is the inflated source ``j * S_c + s - 1``.
Every source takes values in ``range(n)``.  Inflated sources are partitioned
into postselection groups whose members must take pairwise distinct values;
sources not listed in any group form singleton groups.

Inflated agents are ordered copy-major: ``(copy 0, agent 1), (copy 0, agent 2),
..., (copy 1, agent 1), ...``.  An outcome assignment gives one outcome per
inflated agent in that order.

LP variables are tuples of deterministic strategies, one table per scenario
strategy over ``range(n)`` inputs.  All tables of a tuple are concatenated into
one flat array (strategy 1 first), which is what the kernels operate on.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from . import kernels, lp as lpmod
from .scenario import NetworkScenario, OutcomeDistribution, FileFormatError, _load_nodes, _line, _child, _items
from .strategy import DeterministicStrategy, strides

DEFAULT_CAP = 2 ** 22
WITNESS_CAP = 50_000


@dataclass(frozen=True)
class NetworkInflation:
    m: int
    groups: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(tuple(int(s) for s in g) for g in self.groups))


@dataclass(frozen=True)
class InflationSpec:
    n: int
    networks: tuple

    def __post_init__(self):
        object.__setattr__(self, "networks", tuple(self.networks))

    def validate(self, scenario: NetworkScenario) -> list:
        """List of problems (strings); empty when the spec fits the scenario."""
        out = []
        if self.n < 1:
            out.append(f"n must be >= 1, got {self.n}")
        if len(self.networks) != len(scenario.networks):
            out.append(f"{len(self.networks)} network entries for {len(scenario.networks)} networks")
            return out
        for c, (ni, net) in enumerate(zip(self.networks, scenario.networks)):
            if ni.m < 0:
                out.append(f"network {c + 1}: m must be >= 0, got {ni.m}")
                continue
            size = ni.m * net.num_sources
            seen = set()
            for g in ni.groups:
                for s in g:
                    if not 0 <= s < size:
                        out.append(f"network {c + 1}: source slot {s} outside 0..{size - 1}")
                    if s in seen:
                        out.append(f"network {c + 1}: source slot {s} appears in two groups")
                    seen.add(s)
                if len(g) > self.n:
                    out.append(f"network {c + 1}: group {list(g)} of size {len(g)} cannot be all "
                               f"distinct with n={self.n}")
        return out

    def check(self, scenario: NetworkScenario) -> "InflationSpec":
        problems = self.validate(scenario)
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def groups(self, scenario: NetworkScenario, c: int) -> tuple:
        """Groups of network ``c`` including the implicit singletons."""
        ni = self.networks[c]
        size = ni.m * scenario.networks[c].num_sources
        listed = {s for g in ni.groups for s in g}
        return tuple(ni.groups) + tuple((s,) for s in range(size) if s not in listed)

    @classmethod
    def all_distinct(cls, scenario: NetworkScenario, n: int, m) -> "InflationSpec":
        """One group holding every inflated source of each network.

        ``m`` is an int (same power everywhere) or a per-network sequence.
        Requires ``n >= m_c * S_c`` for every network.
        """
        ms = [m] * len(scenario.networks) if isinstance(m, int) else list(m)
        nets = []
        for mc, net in zip(ms, scenario.networks):
            size = mc * net.num_sources
            if size > n:
                raise ValueError(f"all-distinct postselection of {size} sources needs n >= {size}, got n={n}")
            nets.append(NetworkInflation(mc, (tuple(range(size)),) if size else ()))
        return cls(n, tuple(nets))

    def restrict(self, scenario: NetworkScenario, ms) -> "InflationSpec":
        """Keep only the first ``ms[c]`` copies of each network (groups cut accordingly)."""
        nets = []
        for c, (ni, mc) in enumerate(zip(self.networks, ms)):
            if not 0 <= mc <= ni.m:
                raise ValueError(f"network {c + 1}: cannot restrict m={ni.m} to {mc}")
            limit = mc * scenario.networks[c].num_sources
            groups = tuple(tuple(s for s in g if s < limit) for g in ni.groups)
            nets.append(NetworkInflation(mc, tuple(g for g in groups if g)))
        return InflationSpec(self.n, tuple(nets))

    def with_n(self, n: int) -> "InflationSpec":
        return InflationSpec(n, self.networks)


def spec_from_text(text: str, scenario: NetworkScenario, path: str = "<inflation>") -> InflationSpec:
    """Inflation spec document: ``{n: int, networks: [{m: int, groups: [[slot, ...], ...]}, ...]}``."""
    root, data = _load_nodes(text, path)
    if not isinstance(data, dict) or "n" not in data or "networks" not in data:
        raise FileFormatError(f"{path}:{_line(root)}: expected a mapping with 'n' and 'networks'")
    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise FileFormatError(f"{path}:{_line(_child(root, 'n'))}: n must be an integer")
    if not isinstance(data["networks"], list):
        raise FileFormatError(f"{path}:{_line(_child(root, 'networks'))}: 'networks' must be a list")
    nets = []
    for entry, node in zip(data["networks"], _items(_child(root, "networks"))):
        if not isinstance(entry, dict) or not isinstance(entry.get("m"), int):
            raise FileFormatError(f"{path}:{_line(node)}: network entry needs an integer 'm'")
        groups = entry.get("groups", [])
        ok = isinstance(groups, list) and all(
            isinstance(g, list) and all(isinstance(s, int) and not isinstance(s, bool) for s in g) for g in groups)
        if not ok:
            raise FileFormatError(f"{path}:{_line(node)}: 'groups' must be a list of integer lists")
        nets.append(NetworkInflation(entry["m"], tuple(tuple(g) for g in groups)))
    spec = InflationSpec(n, tuple(nets))
    problems = spec.validate(scenario)
    if problems:
        raise FileFormatError("\n".join(f"{path}:{_line(root)}: {p}" for p in problems))
    return spec


def load_spec(path: str, scenario: NetworkScenario) -> InflationSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_text(fh.read(), scenario, path)


def spec_to_dict(spec: InflationSpec) -> dict:
    return {"n": spec.n, "networks": [{"m": ni.m, "groups": [list(g) for g in ni.groups]} for ni in spec.networks]}


# ---------------------------------------------------------------------------
# admissible assignments


def _assignment_array(spec: InflationSpec, scenario: NetworkScenario, c: int) -> np.ndarray:
    groups = spec.groups(scenario, c)
    size = spec.networks[c].m * scenario.networks[c].num_sources
    for g in groups:
        if len(g) > spec.n:
            raise ValueError(f"group {list(g)} of size {len(g)} is unsatisfiable with n={spec.n}")
    per_group = [np.array(list(itertools.permutations(range(spec.n), len(g))), dtype=np.intp).reshape(-1, len(g))
                 for g in groups]
    total = math.prod(len(a) for a in per_group)
    out = np.zeros((total, size), dtype=np.intp)
    # row-major product over groups
    rep = total
    tile = 1
    for g, vals in zip(groups, per_group):
        rep //= len(vals)
        block = np.repeat(vals, rep, axis=0)
        block = np.tile(block, (tile, 1))
        out[:, list(g)] = block
        tile *= len(vals)
    return out


def admissible_assignments(spec: InflationSpec, scenario: NetworkScenario, c: int) -> Iterator:
    """Yield ``(values, weight)`` for every source assignment of network ``c`` that
    respects the postselection.  Weights are ``prod_g (n - k_g)! / n!``."""
    arr = _assignment_array(spec, scenario, c)
    w = Fraction(1, len(arr)) if len(arr) else Fraction(0)
    for row in arr:
        yield tuple(int(v) for v in row), w


def inflated_agents(spec: InflationSpec, scenario: NetworkScenario, c: int) -> list:
    """``(copy, agent index, strategy, inflated source slots)`` in copy-major order."""
    net = scenario.networks[c]
    out = []
    for j in range(spec.networks[c].m):
        for k, agent in enumerate(net.agents):
            out.append((j, k, agent.strategy, tuple(j * net.num_sources + s - 1 for s in agent.sources)))
    return out


def coefficient(strategies: Sequence[DeterministicStrategy], scenario: NetworkScenario,
                spec: InflationSpec, c: int, outcomes: Sequence[int]) -> Fraction:
    """Weighted fraction of admissible assignments on which every inflated agent of
    network ``c`` produces its entry of ``outcomes``.  Direct evaluation."""
    agents = inflated_agents(spec, scenario, c)
    if len(outcomes) != len(agents):
        raise ValueError(f"outcome assignment has {len(outcomes)} entries, inflation has {len(agents)} agents")
    if len(strategies) != len(scenario.strategies):
        raise ValueError(f"{len(strategies)} strategies for {len(scenario.strategies)} scenario strategies")
    for p, (s, sig) in enumerate(zip(strategies, scenario.strategies), start=1):
        if s.domain_sizes != (spec.n,) * sig.arity:
            raise ValueError(f"strategy {p} has domain {s.domain_sizes}, expected {(spec.n,) * sig.arity}")
    total = Fraction(0)
    for values, w in admissible_assignments(spec, scenario, c):
        if all(strategies[p - 1](*(values[s] for s in srcs)) == a
               for (_, _, p, srcs), a in zip(agents, outcomes)):
            total += w
    return total


# ---------------------------------------------------------------------------
# symmetry


def slot_classes(scenario: NetworkScenario) -> list:
    """Partition of strategy slots ``(p, i)`` (1-based p, 0-based i) joined whenever
    two slots read the same source in some network."""
    slots = [(p, i) for p, sig in enumerate(scenario.strategies, start=1) for i in range(sig.arity)]
    parent = {s: s for s in slots}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for net in scenario.networks:
        readers = {}
        for agent in net.agents:
            for i, s in enumerate(agent.sources):
                readers.setdefault(s, []).append((agent.strategy, i))
        for group in readers.values():
            for other in group[1:]:
                parent[find(other)] = find(group[0])
    classes = {}
    for s in slots:
        classes.setdefault(find(s), []).append(s)
    return sorted(classes.values())


def _source_class(scenario: NetworkScenario, classes) -> list:
    """Per network, the class index of each source (None when no agent reads it)."""
    index = {s: k for k, cl in enumerate(classes) for s in cl}
    out = []
    for net in scenario.networks:
        cls = [None] * net.num_sources
        for agent in net.agents:
            for i, s in enumerate(agent.sources):
                cls[s - 1] = index[(agent.strategy, i)]
        out.append(cls)
    return out


def independent_reduction_valid(scenario: NetworkScenario, spec: InflationSpec) -> bool:
    """True when every postselection group stays inside one slot class."""
    classes = slot_classes(scenario)
    src_cls = _source_class(scenario, classes)
    for c, ni in enumerate(spec.networks):
        S = scenario.networks[c].num_sources
        for g in ni.groups:
            seen = {src_cls[c][s % S] for s in g} - {None}
            if len(seen) > 1:
                return False
    return True


@dataclass(frozen=True)
class TupleGroup:
    """Relabeling group on strategy tuples: one permutation of ``range(n)`` per
    class, applied to every slot of the class.  ``classes`` partitions the slots
    ``(p, i)``."""

    classes: tuple

    @classmethod
    def for_spec(cls, scenario: NetworkScenario, spec: InflationSpec, mode: str = "auto") -> Optional["TupleGroup"]:
        """``mode``: ``auto`` (independent when valid, else diagonal), ``independent``,
        ``diagonal`` or ``none``."""
        if mode == "none":
            return None
        slots = [(p, i) for p, sig in enumerate(scenario.strategies, start=1) for i in range(sig.arity)]
        if mode == "diagonal":
            return cls((tuple(slots),))
        valid = independent_reduction_valid(scenario, spec)
        if mode == "independent" and not valid:
            raise ValueError("independent relabeling is invalid here: a postselection group spans several "
                             "slot classes; use the diagonal group")
        if mode not in ("auto", "independent"):
            raise ValueError(f"unknown reduction mode {mode!r}")
        if valid:
            return cls(tuple(tuple(c) for c in slot_classes(scenario)))
        return cls((tuple(slots),))

    def order(self, n: int) -> int:
        return math.factorial(n) ** len(self.classes)


# ---------------------------------------------------------------------------
# variable space


class VariableSpace:
    """Concatenated strategy tables over ``range(n)`` inputs.

    Positions never read by an admissible assignment of any network are fixed
    to outcome 1 when ``prune`` is set; they cannot affect any coefficient.
    """

    def __init__(self, scenario: NetworkScenario, spec: InflationSpec, group: Optional[TupleGroup],
                 prune: bool = True):
        self.scenario, self.spec, self.group, self.n = scenario, spec, group, spec.n
        n = spec.n
        self.domains = [(n,) * sig.arity for sig in scenario.strategies]
        self.sizes = [math.prod(d) for d in self.domains]
        self.offsets = list(itertools.accumulate([0] + self.sizes[:-1]))
        self.width = sum(self.sizes)
        self.outcomes = [sig.outcomes for sig in scenario.strategies]
        self.position_outcomes = np.concatenate(
            [np.full(sz, k, dtype=np.int64) for sz, k in zip(self.sizes, self.outcomes)])
        self.read = np.zeros(self.width, dtype=bool)
        self._positions = []
        for c in range(len(scenario.networks)):
            pos = self.positions(c)
            self._positions.append(pos)
            self.read[pos.ravel()] = True
        if not prune:
            self.read[:] = True
        self.free = np.flatnonzero(self.read)
        self._maps = None

    def positions(self, c: int) -> np.ndarray:
        """``pos[k, a]``: flat table position read by inflated agent ``a`` under assignment ``k``."""
        if c < len(getattr(self, "_positions", [])):
            return self._positions[c]
        assign = _assignment_array(self.spec, self.scenario, c)
        agents = inflated_agents(self.spec, self.scenario, c)
        pos = np.zeros((len(assign), len(agents)), dtype=np.intp)
        for a, (_, _, p, srcs) in enumerate(agents):
            st = np.array(strides(self.domains[p - 1]), dtype=np.intp)
            pos[:, a] = self.offsets[p - 1] + assign[:, list(srcs)] @ st if srcs else self.offsets[p - 1]
        return pos

    def count(self) -> int:
        return int(np.prod([int(self.position_outcomes[i]) for i in self.free], dtype=object))

    def maps(self) -> np.ndarray:
        """Position maps of the relabeling group on concatenated tables."""
        if self._maps is not None:
            return self._maps
        if self.group is None:
            self._maps = np.arange(self.width, dtype=np.intp)[None, :]
            return self._maps
        n = self.n
        slot_class = {s: k for k, cl in enumerate(self.group.classes) for s in cl}
        perms_all = list(itertools.product(itertools.permutations(range(n)), repeat=len(self.group.classes)))
        if len(perms_all) > 50_000:
            raise ValueError(f"relabeling group of order {len(perms_all)} is too large to traverse")
        cells = [np.array(list(itertools.product(range(n), repeat=len(d))), dtype=np.intp).reshape(-1, len(d))
                 for d in self.domains]
        maps = np.zeros((len(perms_all), self.width), dtype=np.intp)
        for g, choice in enumerate(perms_all):
            for p, d in enumerate(self.domains, start=1):
                st = np.array(strides(d), dtype=np.intp)
                moved = np.stack([np.asarray(choice[slot_class[(p, i)]], dtype=np.intp)[cells[p - 1][:, i]]
                                  for i in range(len(d))], axis=1)
                maps[g, self.offsets[p - 1]:self.offsets[p - 1] + self.sizes[p - 1]] = \
                    self.offsets[p - 1] + moved @ st
        self._maps = maps
        return maps

    def all_tables(self, cap: int = DEFAULT_CAP) -> np.ndarray:
        """Every table (0-based outcomes, pruned entries 0), lexicographic over free positions."""
        total = self.count()
        if total > cap:
            raise ValueError(f"{total} strategy tuples exceed the enumeration cap {cap}")
        return self.tables_from_codes(np.arange(total, dtype=np.int64))

    def tables_from_codes(self, codes: np.ndarray) -> np.ndarray:
        ks = self.position_outcomes[self.free]
        radix = np.ones(len(ks), dtype=np.int64)
        for i in range(len(ks) - 2, -1, -1):
            radix[i] = radix[i + 1] * ks[i + 1]
        out = np.zeros((len(codes), self.width), dtype=np.uint8)
        out[:, self.free] = ((codes[:, None] // radix) % ks).astype(np.uint8)
        return out

    def canonicalize(self, tables: np.ndarray) -> np.ndarray:
        return kernels.canonicalize_tables(np.ascontiguousarray(tables, dtype=np.uint8), self.maps())

    def representatives(self, cap: int = DEFAULT_CAP, chunk: int = 1 << 15) -> np.ndarray:
        total = self.count()
        if total > cap:
            raise ValueError(f"{total} strategy tuples exceed the enumeration cap {cap}")
        out = []
        for start in range(0, total, chunk):
            block = self.tables_from_codes(np.arange(start, min(total, start + chunk), dtype=np.int64))
            canon = self.canonicalize(block)
            out.append(block[(canon == block).all(axis=1)])
        return np.concatenate(out, axis=0)

    def prune(self, tables: np.ndarray) -> np.ndarray:
        t = np.array(tables, dtype=np.uint8, copy=True)
        t[:, ~self.read] = 0
        return t

    def to_strategies(self, table) -> tuple:
        out = []
        for p, d in enumerate(self.domains):
            seg = table[self.offsets[p]:self.offsets[p] + self.sizes[p]]
            out.append(DeterministicStrategy(d, self.outcomes[p], tuple(int(v) + 1 for v in seg)))
        return tuple(out)

    def from_strategies(self, strategies) -> np.ndarray:
        return np.concatenate([np.array(s.table, dtype=np.uint8) - 1 for s in strategies])


# ---------------------------------------------------------------------------
# the LP


@dataclass
class _Block:
    c: int
    positions: np.ndarray
    radix: np.ndarray
    nrows: int
    outcome_rows: list
    total: int


class InflationModel:
    """Coefficient data of a postselected-inflation LP, independent of the targets.

    ``reduce`` is ``auto``, ``independent``, ``diagonal`` or ``none``.  When the
    strategy-tuple space is small enough (``cap``) the coefficient matrix over
    all orbit representatives is precomputed; ``lp(targets)`` then only fills in
    right-hand sides.
    """

    def __init__(self, scenario: NetworkScenario, spec: InflationSpec, reduce="auto",
                 prune: bool = True, cap: int = 1 << 17):
        spec.check(scenario)
        self.scenario, self.spec = scenario, spec
        self.group = reduce if isinstance(reduce, TupleGroup) or reduce is None \
            else TupleGroup.for_spec(scenario, spec, reduce)
        if isinstance(reduce, TupleGroup) and not _group_valid(scenario, spec, reduce):
            raise ValueError("invalid reduction: a class splits readers of one source or a postselection "
                             "group spans classes; use the diagonal group")
        self.space = VariableSpace(scenario, spec, self.group, prune)
        self.blocks = []
        for c, ni in enumerate(spec.networks):
            if ni.m == 0:
                continue
            pos = self.space.positions(c)
            ks = [self.space.outcomes[p - 1] for (_, _, p, _) in inflated_agents(spec, scenario, c)]
            radix = np.ones(len(ks), dtype=np.int64)
            for i in range(len(ks) - 2, -1, -1):
                radix[i] = radix[i + 1] * ks[i + 1]
            rows = list(itertools.product(*(range(1, k + 1) for k in ks)))
            self.blocks.append(_Block(c, pos, radix, len(rows), rows, len(pos)))
        self.columns = None
        self.counts = None
        self._row_classes = None
        self._families = {}
        if self.space.count() <= cap:
            self.set_columns(self.space.representatives(cap))

    # -- columns --------------------------------------------------------------
    def column_counts(self, tables: np.ndarray) -> list:
        """Per block, ``counts[v, r]`` of admissible assignments giving outcome row ``r``."""
        t = np.ascontiguousarray(tables, dtype=np.uint8)
        return [kernels.outcome_histogram(t, b.positions, b.radix, b.nrows) for b in self.blocks]

    def set_columns(self, tables: np.ndarray):
        self.columns = np.ascontiguousarray(tables, dtype=np.uint8)
        self.counts = self.column_counts(self.columns)
        self._row_classes = None
        self._families = {}

    @property
    def num_vars(self) -> int:
        return 0 if self.columns is None else len(self.columns)

    def row_classes(self) -> list:
        """Per block, lists of outcome-row indices with identical coefficient vectors,
        in order of first occurrence."""
        if self._row_classes is None:
            out = []
            for cnt in self.counts:
                keyed = {}
                for r in range(cnt.shape[1]):
                    keyed.setdefault(cnt[:, r].tobytes(), []).append(r)
                out.append(sorted(keyed.values(), key=lambda cl: cl[0]))
            self._row_classes = out
        return self._row_classes

    # -- targets --------------------------------------------------------------
    def block_rhs(self, targets: Sequence[OutcomeDistribution], b: _Block) -> list:
        c = b.c
        target = targets[c]
        shape = self.scenario.outcome_shape(c)
        if tuple(target.shape) != tuple(shape):
            raise ValueError(f"target for network {c + 1} has shape {target.shape}, expected {shape}")
        N = len(shape)
        out = []
        for row in b.outcome_rows:
            v = Fraction(1)
            for j in range(len(row) // N):
                v *= target[row[j * N:(j + 1) * N]]
                if not v:
                    break
            out.append(v)
        return out

    def _check_targets(self, targets):
        if len(targets) != len(self.scenario.networks):
            raise ValueError(f"{len(targets)} targets for {len(self.scenario.networks)} networks")

    def lp(self, targets: Sequence[OutcomeDistribution], dedup: bool = True) -> lpmod.RationalLP:
        """LP over the current columns: normalization row, then per block its rows."""
        if self.columns is None:
            raise ValueError("no columns: the tuple space exceeded the cap; use solve() for column generation")
        self._check_targets(targets)
        V = self.num_vars
        rows = [tuple([Fraction(1)] * V)]
        rhs = [Fraction(1)]
        labels = [("normalization",)]
        classes = self.row_classes() if dedup else None
        for bi, b in enumerate(self.blocks):
            cnt = self.counts[bi]
            brhs = self.block_rhs(targets, b)
            picks = _dedup_indices(classes[bi], brhs) if dedup else list(range(b.nrows))[:-1]
            for r in picks:
                rows.append(tuple(Fraction(int(v), b.total) for v in cnt[:, r]))
                rhs.append(brhs[r])
                labels.append((b.c + 1, b.outcome_rows[r]))
        return lpmod.RationalLP(V, tuple(rows), tuple(rhs), None, tuple(labels), None)

    def rhs_family(self, targets) -> tuple:
        """Return ``(key, rhs)``: targets whose rows dedup identically share ``key``."""
        self._check_targets(targets)
        classes = self.row_classes()
        picks_all, rhs = [], [Fraction(1)]
        for bi, b in enumerate(self.blocks):
            brhs = self.block_rhs(targets, b)
            picks = _dedup_indices(classes[bi], brhs)
            picks_all.append(tuple(picks))
            rhs.extend(brhs[r] for r in picks)
        return tuple(picks_all), rhs

    def solve_targets(self, targets) -> lpmod.FeasibilityResult:
        """Feasibility with warm starts shared across calls with the same row pattern."""
        key, rhs = self.rhs_family(targets)
        fam = self._families.get(key)
        if fam is None:
            lp = self.lp(targets)
            fam = lpmod.RhsFamilySolver(lp.rows)
            self._families[key] = fam
        return fam.solve(rhs)

    def strategies_of(self, v: int) -> tuple:
        return self.space.to_strategies(self.columns[v])


def _dedup_indices(classes, rhs) -> list:
    """First occurrence of every distinct (coefficients, rhs) pair, minus the last kept row."""
    kept = []
    for cl in classes:
        seen = set()
        for r in cl:
            if rhs[r] not in seen:
                seen.add(rhs[r])
                kept.append(r)
    kept.sort()
    return kept[:-1]


def _group_valid(scenario, spec, group: TupleGroup) -> bool:
    classes = slot_classes(scenario)
    where = {s: k for k, cl in enumerate(group.classes) for s in cl}
    for cl in classes:
        if len({where[s] for s in cl}) != 1:
            return False
    src_cls = _source_class(scenario, classes)
    for c, ni in enumerate(spec.networks):
        S = scenario.networks[c].num_sources
        for g in ni.groups:
            ks = {where[classes[src_cls[c][s % S]][0]] for s in g if src_cls[c][s % S] is not None}
            if len(ks) > 1:
                return False
    return True


def build_lp(scenario: NetworkScenario, spec: InflationSpec, targets, reduce="auto",
             prune: bool = True, cap: int = 1 << 17) -> lpmod.RationalLP:
    """The deduplicated LP over orbit representatives of the strategy-tuple space."""
    model = InflationModel(scenario, spec, reduce=reduce, prune=prune, cap=cap)
    return model.lp(targets)


@dataclass(frozen=True)
class ConstraintRow:
    network: int
    outcomes: tuple
    coefficients: tuple
    rhs: Fraction


def dedup_rows(rows: Sequence[ConstraintRow], drop_redundant: bool = True) -> list:
    """Remove repeated (coefficients, rhs) pairs, keeping first occurrences, then drop
    the last kept row of every network block (implied by normalization)."""
    out, seen = [], set()
    for r in rows:
        key = (r.network, r.coefficients, r.rhs)
        if key not in seen:
            seen.add(key)
            out.append(r)
    if drop_redundant:
        last = {}
        for i, r in enumerate(out):
            last[r.network] = i
        out = [r for i, r in enumerate(out) if i not in set(last.values())]
    return out


def block_rows(model: InflationModel, targets, c: int) -> list:
    """All (undeduplicated) constraint rows of network ``c`` as ConstraintRow objects."""
    for bi, b in enumerate(model.blocks):
        if b.c == c:
            brhs = model.block_rhs(targets, b)
            cnt = model.counts[bi]
            return [ConstraintRow(c + 1, b.outcome_rows[r],
                                  tuple(Fraction(int(v), b.total) for v in cnt[:, r]), brhs[r])
                    for r in range(b.nrows)]
    return []


# ---------------------------------------------------------------------------
# certification witnesses


def witness_pools(scenario: NetworkScenario, spec: InflationSpec) -> list:
    """Components of slot classes that can share one random relabeling.

    Two classes are merged when some postselection group holds sources of both.
    Raises ValueError unless, in every network, the sources of each component
    form a single postselection group (needed for the constructive witness).
    """
    classes = slot_classes(scenario)
    src_cls = _source_class(scenario, classes)
    parent = list(range(len(classes)))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for c, ni in enumerate(spec.networks):
        S = scenario.networks[c].num_sources
        for g in ni.groups:
            ks = [src_cls[c][s % S] for s in g if src_cls[c][s % S] is not None]
            for k in ks[1:]:
                parent[find(k)] = find(ks[0])
    comp = [find(k) for k in range(len(classes))]
    for c, ni in enumerate(spec.networks):
        S = scenario.networks[c].num_sources
        groups = spec.groups(scenario, c)
        for root in set(comp):
            members = [s for s in range(ni.m * S) if src_cls[c][s % S] is not None and comp[src_cls[c][s % S]] == root]
            if not members:
                continue
            holding = {gi for gi, g in enumerate(groups) for s in g if s in members}
            if len(holding) != 1 or set(members) != set(groups[holding.pop()]):
                raise ValueError(f"network {c + 1}: sources sharing a relabeling pool are not one "
                                 f"postselection group; no constructive witness")
    pools = {}
    for k, cl in enumerate(classes):
        pools.setdefault(comp[k], []).extend(cl)
    return [sorted(v) for _, v in sorted(pools.items())]


def certification_witness(scenario: NetworkScenario, spec: InflationSpec, strategies,
                          cap: int = WITNESS_CAP) -> list:
    """Mixture of inflated strategy tuples reproducing the oracle targets of ``strategies``.

    Each pool draws a uniformly random map ``f: range(n) -> range(L)`` with ``L``
    the lcm of its bin counts; slot ``(p, i)`` feeds bin ``f(v) mod bins`` to
    strategy ``p``.  Values that must be distinct give independent bins, so every
    admissible assignment sees i.i.d. uniform bins.  Returns ``[(tables, weight)]``
    with the inflated strategies as lists of DeterministicStrategy.
    """
    n = spec.n
    pools = witness_pools(scenario, spec)
    bins = {}
    for p, s in enumerate(strategies, start=1):
        for i, d in enumerate(s.domain_sizes):
            bins[(p, i)] = d
    Ls = [math.lcm(*(bins[s] for s in pool)) for pool in pools]
    total = math.prod(L ** n for L in Ls)
    if total > cap:
        raise ValueError(f"{total} witness maps exceed the cap {cap}")
    pool_of = {s: k for k, pool in enumerate(pools) for s in pool}
    maps_per_pool = [list(itertools.product(range(L), repeat=n)) for L in Ls]
    out = {}
    w = Fraction(1, total)
    for choice in itertools.product(*maps_per_pool):
        tables = []
        for p, (s, sig) in enumerate(zip(strategies, scenario.strategies), start=1):
            def fn(*vals, p=p, s=s):
                return s(*(choice[pool_of[(p, i)]][v] % bins[(p, i)] for i, v in enumerate(vals)))
            tables.append(DeterministicStrategy.from_function((n,) * sig.arity, sig.outcomes, fn))
        key = tuple(t.table for t in tables)
        if key in out:
            out[key] = (out[key][0], out[key][1] + w)
        else:
            out[key] = (tables, w)
    return list(out.values())


def witness_vector(model: InflationModel, mixture) -> tuple:
    """Map a mixture of strategy tuples onto the model's column weights."""
    space = model.space
    tabs = np.array([space.from_strategies(t) for t, _ in mixture], dtype=np.uint8)
    canon = space.canonicalize(space.prune(tabs))
    index = {model.columns[v].tobytes(): v for v in range(model.num_vars)}
    x = [Fraction(0)] * model.num_vars
    for row, (_, w) in zip(canon, mixture):
        x[index[row.tobytes()]] += w
    return tuple(x)


# ---------------------------------------------------------------------------
# column generation for tuple spaces too large to enumerate as one LP


@dataclass(frozen=True)
class ColumnGenerationResult:
    feasible: bool
    certificate: lpmod.Certificate
    columns: np.ndarray
    lp: lpmod.RationalLP
    rounds: int


def _pricing_table(model: InflationModel):
    """Orbit representatives of the whole space with their scaled outcome counts.

    Counts are invariant under the tuple group, so pricing representatives is
    exact.  Cached on the model.
    """
    cached = getattr(model, "_pricing", None)
    if cached is not None:
        return cached
    space = model.space
    D = math.lcm(*(b.total for b in model.blocks))
    reps = []
    for start in range(0, space.count(), 1 << 18):
        block = space.tables_from_codes(np.arange(start, min(space.count(), start + (1 << 18)), dtype=np.int64))
        reps.append(np.unique(space.canonicalize(block), axis=0))
    reps = np.unique(np.concatenate(reps, axis=0), axis=0)
    parts = [cnt.astype(np.int64) * (D // b.total)
             for b, cnt in zip(model.blocks, model.column_counts(reps))]
    model._pricing = (reps, np.concatenate(parts, axis=1), D)
    return model._pricing


def solve_column_generation(model: InflationModel, targets, seed_tables: np.ndarray,
                            max_rounds: int = 200, batch: int = 40,
                            enum_cap: int = 1 << 26) -> ColumnGenerationResult:
    """Restricted-master feasibility with exact Farkas pricing over the whole space.

    Rows are the undeduplicated ones (all outcome rows of every block except
    the last, plus normalization), so a Farkas vector of the restricted master
    that prices nonpositive on every tuple proves the full LP infeasible.
    """
    space = model.space
    cols = np.unique(space.canonicalize(space.prune(seed_tables)), axis=0)
    total = space.count()
    for rounds in range(1, max_rounds + 1):
        model.set_columns(cols)
        lp = model.lp(targets, dedup=False)
        res = lpmod.solve_feasibility(lp)
        if res.feasible:
            return ColumnGenerationResult(True, res.certificate, cols, lp, rounds)
        y = res.farkas
        # Farkas pricing: a column a with y.a > 0 breaks the certificate
        row_y = []
        L = math.lcm(*(v.denominator for v in y))
        yi = [int(v * L) for v in y]
        norm_y = yi[0]
        offset = 1
        for b in model.blocks:
            k = b.nrows - 1
            weights = np.zeros(b.nrows, dtype=object)
            weights[:k] = [v for v in yi[offset:offset + k]]
            offset += k
            row_y.append(weights)
        if total > enum_cap:
            raise ValueError(f"{total} tuples exceed the pricing cap {enum_cap}")
        reps, counts, D = _pricing_table(model)
        wy = np.concatenate(row_y)
        big = max(abs(v) for v in yi) * D
        if big < (1 << 62):
            score = counts @ wy.astype(np.int64) + norm_y * D
        else:
            score = counts.astype(object) @ wy + norm_y * D
        hits = np.flatnonzero(score > 0)
        found = []
        if len(hits):
            order = hits[np.argsort(-score[hits].astype(float))][:batch]
            found.append(reps[order])
        if not found:
            return ColumnGenerationResult(False, res.certificate, cols, lp, rounds)
        new = space.canonicalize(np.concatenate(found, axis=0))
        cols = np.unique(np.concatenate([cols, new], axis=0), axis=0)
    raise RuntimeError("column generation did not converge")


def full_lp_rows(model: InflationModel, targets, tables: np.ndarray) -> lpmod.RationalLP:
    """The undeduplicated LP over explicit tables (used to re-verify certificates)."""
    saved = (model.columns, model.counts, model._row_classes, model._families)
    try:
        model.set_columns(tables)
        return model.lp(targets, dedup=False)
    finally:
        model.columns, model.counts, model._row_classes, model._families = saved


# ---------------------------------------------------------------------------
# inequalities behind the convergence argument


def postselection_gap(M, n: int, S: int):
    """One-norm distance between the postselected and plain marginals of a channel.

    ``M`` maps each input tuple in ``range(n)^S`` to a distribution over outcomes
    (a dict from tuple to sequence of Fractions).  The postselected marginal
    averages only over pairwise distinct inputs.  Returns ``(gap, bound)`` with
    ``bound = 2 (1 - n! / (n^S (n - S)!))``.
    """
    if S > n:
        raise ValueError("postselection needs n >= S")
    inputs = list(itertools.product(range(n), repeat=S))
    k = len(next(iter(M.values())))
    plain = [Fraction(0)] * k
    post = [Fraction(0)] * k
    ndist = 0
    for x in inputs:
        dist = M[x]
        for a in range(k):
            plain[a] += dist[a]
        if len(set(x)) == S:
            ndist += 1
            for a in range(k):
                post[a] += dist[a]
    plain = [v / len(inputs) for v in plain]
    post = [v / ndist for v in post]
    gap = sum(abs(a - b) for a, b in zip(plain, post))
    bound = 2 * (1 - Fraction(math.factorial(n), n ** S * math.factorial(n - S)))
    return gap, bound


def mixture_distance_sides(p, weights, qs):
    """Left and right sides of ``sum_l w_l |p - q_l|_2^2 <= 3 |p (x) p - sum_l w_l q_l (x) q_l|_1``."""
    k = len(p)
    lhs = sum((w * sum((p[i] - q[i]) ** 2 for i in range(k)) for w, q in zip(weights, qs)), Fraction(0))
    rhs = Fraction(0)
    for i in range(k):
        for j in range(k):
            mix = sum((w * q[i] * q[j] for w, q in zip(weights, qs)), Fraction(0))
            rhs += abs(p[i] * p[j] - mix)
    return lhs, 3 * rhs
