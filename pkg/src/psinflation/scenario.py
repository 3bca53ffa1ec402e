"""Multi-network scenarios, target distributions and the brute-force oracle.

Strategies and sources are numbered from 1, as in scenario files.  Agents in a
network are listed in order; agent ``k`` runs strategy ``strategy`` and reads
the sources ``sources`` (in slot order).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import yaml


@dataclass(frozen=True)
class StrategySignature:
    id: int
    arity: int
    outcomes: int


@dataclass(frozen=True)
class Agent:
    strategy: int
    sources: tuple

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))


@dataclass(frozen=True)
class Network:
    num_sources: int
    agents: tuple

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))

    @property
    def num_agents(self) -> int:
        return len(self.agents)

    def strategy_of(self, k: int) -> int:
        return self.agents[k - 1].strategy

    def sources_of(self, k: int) -> tuple:
        return self.agents[k - 1].sources


@dataclass(frozen=True)
class Violation:
    location: str
    message: str

    def __str__(self):
        return f"{self.location}: {self.message}"


class ScenarioError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class NetworkScenario:
    strategies: tuple
    networks: tuple

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "networks", tuple(self.networks))

    def signature(self, p: int) -> StrategySignature:
        return self.strategies[p - 1]

    def outcome_shape(self, c: int) -> tuple:
        """Outcome counts of the agents of network ``c`` (0-based network index)."""
        return tuple(self.signature(a.strategy).outcomes for a in self.networks[c].agents)

    def validate(self) -> list:
        return validate(self)

    def checked(self) -> "NetworkScenario":
        problems = validate(self)
        if problems:
            raise ScenarioError(problems)
        return self


def validate(scenario: NetworkScenario) -> list:
    """All invariant violations, each with a location; empty means valid."""
    out = []
    P = len(scenario.strategies)
    if P == 0:
        out.append(Violation("strategies", "at least one strategy is required"))
    for i, s in enumerate(scenario.strategies):
        loc = f"strategies[{i}]"
        if s.id != i + 1:
            out.append(Violation(loc, f"strategy ids must be contiguous from 1, found {s.id}"))
        if s.arity < 1:
            out.append(Violation(loc, f"arity must be >= 1, got {s.arity}"))
        if s.outcomes < 1:
            out.append(Violation(loc, f"outcomes must be >= 1, got {s.outcomes}"))
    if not scenario.networks:
        out.append(Violation("networks", "at least one network is required"))
    for c, net in enumerate(scenario.networks):
        nloc = f"networks[{c}]"
        if net.num_sources < 1:
            out.append(Violation(nloc, f"num_sources must be >= 1, got {net.num_sources}"))
        if not net.agents:
            out.append(Violation(nloc, "network has no agents"))
        for k, agent in enumerate(net.agents):
            aloc = f"{nloc}.agents[{k}]"
            if not 1 <= agent.strategy <= P:
                out.append(Violation(aloc, f"strategy {agent.strategy} not in 1..{P}"))
                continue
            for s in agent.sources:
                if not 1 <= s <= net.num_sources:
                    out.append(Violation(aloc, f"source {s} not in 1..{net.num_sources}"))
            arity = scenario.strategies[agent.strategy - 1].arity
            if len(agent.sources) != arity:
                out.append(Violation(aloc, f"inconsistent arity: reads {len(agent.sources)} sources but "
                                           f"strategy {agent.strategy} has arity {arity}"))
    return out


# ---------------------------------------------------------------------------
# outcome distributions


@dataclass(frozen=True)
class OutcomeDistribution:
    """Exact distribution over outcome tuples; ``probabilities`` is row-major over
    ``itertools.product(*(range(1, k + 1) for k in shape))``."""

    shape: tuple
    probabilities: tuple

    def __post_init__(self):
        shape = tuple(int(k) for k in self.shape)
        probs = tuple(Fraction(p) for p in self.probabilities)
        if any(k < 1 for k in shape):
            raise ValueError(f"outcome counts must be >= 1, got {shape}")
        if len(probs) != math.prod(shape):
            raise ValueError(f"{len(probs)} probabilities for shape {shape}")
        if any(p < 0 for p in probs):
            raise ValueError("probabilities must be nonnegative")
        if sum(probs) != 1:
            raise ValueError(f"probabilities sum to {sum(probs)}, not 1")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "probabilities", probs)

    def __getitem__(self, outcomes) -> Fraction:
        idx = 0
        for a, k in zip(outcomes, self.shape):
            if not 1 <= a <= k:
                raise IndexError(f"outcome {a} outside 1..{k}")
            idx = idx * k + (a - 1)
        return self.probabilities[idx]

    def items(self):
        return zip(itertools.product(*(range(1, k + 1) for k in self.shape)), self.probabilities)

    def tensor(self, other: "OutcomeDistribution") -> "OutcomeDistribution":
        probs = [p * q for p in self.probabilities for q in other.probabilities]
        return OutcomeDistribution(self.shape + other.shape, tuple(probs))

    def power(self, m: int) -> "OutcomeDistribution":
        out = OutcomeDistribution((), (Fraction(1),))
        for _ in range(m):
            out = out.tensor(self)
        return out

    @classmethod
    def from_function(cls, shape, fn) -> "OutcomeDistribution":
        cells = itertools.product(*(range(1, k + 1) for k in shape))
        return cls(tuple(shape), tuple(Fraction(fn(*c)) for c in cells))

    @classmethod
    def uniform(cls, shape) -> "OutcomeDistribution":
        n = math.prod(shape)
        return cls(tuple(shape), (Fraction(1, n),) * n)

    @classmethod
    def point_mass(cls, shape, outcomes) -> "OutcomeDistribution":
        return cls.from_function(shape, lambda *a: int(tuple(a) == tuple(outcomes)))


# ---------------------------------------------------------------------------
# built-in scenarios


def _make(strategies, networks) -> NetworkScenario:
    sigs = tuple(StrategySignature(i + 1, a, o) for i, (a, o) in enumerate(strategies))
    nets = tuple(Network(S, tuple(Agent(p, tuple(src)) for p, src in agents)) for S, agents in networks)
    return NetworkScenario(sigs, nets).checked()


def builtin(name: str, outcomes: int = 2) -> NetworkScenario:
    """``bilocal``, ``triangle3``, ``triangle1`` or ``sleeper``."""
    if name == "bilocal":
        return _make([(1, outcomes), (2, outcomes), (1, outcomes)],
                     [(2, [(1, (1,)), (2, (1, 2)), (3, (2,))])])
    if name == "triangle3":
        return _make([(2, outcomes)] * 3,
                     [(3, [(1, (2, 3)), (2, (3, 1)), (3, (1, 2))])])
    if name == "triangle1":
        return _make([(2, outcomes)],
                     [(3, [(1, (2, 3)), (1, (3, 1)), (1, (1, 2))])])
    if name == "sleeper":
        return _make([(2, outcomes)], [
            (3, [(1, (1, 2)), (1, (1, 3))]),
            (3, [(1, (1, 3)), (1, (2, 3))]),
            (2, [(1, (1, 2))]),
            (8, [(1, (1, 2)), (1, (1, 3)), (1, (4, 6)), (1, (5, 6)), (1, (7, 8))]),
        ])
    raise ValueError(f"unknown built-in scenario {name!r}; choose bilocal, triangle3, triangle1 or sleeper")


BUILTINS = ("bilocal", "triangle3", "triangle1", "sleeper")


# ---------------------------------------------------------------------------
# brute-force oracle


def source_bins(scenario: NetworkScenario, strategies: Sequence, bin_counts=None) -> list:
    """Per network, the bin count of each source, read off the strategy domains."""
    if len(strategies) != len(scenario.strategies):
        raise ValueError(f"{len(strategies)} strategies given, scenario has {len(scenario.strategies)}")
    for p, (s, sig) in enumerate(zip(strategies, scenario.strategies), start=1):
        if s.arity != sig.arity:
            raise ValueError(f"strategy {p} has arity {s.arity}, scenario expects {sig.arity}")
        if s.outcomes > sig.outcomes:
            raise ValueError(f"strategy {p} has {s.outcomes} outcomes, scenario allows {sig.outcomes}")
        if bin_counts is not None and tuple(bin_counts[p - 1]) != tuple(s.domain_sizes):
            raise ValueError(f"strategy {p} domain {s.domain_sizes} does not match bin counts "
                             f"{tuple(bin_counts[p - 1])}")
    out = []
    for c, net in enumerate(scenario.networks):
        bins = [None] * net.num_sources
        for k, agent in enumerate(net.agents):
            dom = strategies[agent.strategy - 1].domain_sizes
            for slot, src in enumerate(agent.sources):
                if bins[src - 1] is None:
                    bins[src - 1] = dom[slot]
                elif bins[src - 1] != dom[slot]:
                    raise ValueError(f"network {c + 1} source {src} is read with {bins[src - 1]} "
                                     f"and {dom[slot]} bins")
        out.append([b if b is not None else 1 for b in bins])
    return out


def oracle_compatible(scenario: NetworkScenario, strategies: Sequence, bin_counts=None) -> list:
    """Outcome distributions produced by binned deterministic strategies.

    Every source is uniform over its bins; each network's distribution is the
    exact average over all joint bin assignments.
    """
    bins = source_bins(scenario, strategies, bin_counts)
    out = []
    for c, net in enumerate(scenario.networks):
        shape = scenario.outcome_shape(c)
        counts = {}
        total = 0
        for values in itertools.product(*(range(b) for b in bins[c])):
            a = tuple(strategies[ag.strategy - 1](*(values[s - 1] for s in ag.sources)) for ag in net.agents)
            counts[a] = counts.get(a, 0) + 1
            total += 1
        out.append(OutcomeDistribution.from_function(shape, lambda *a: Fraction(counts.get(a, 0), total)))
    return out


# ---------------------------------------------------------------------------
# files


class FileFormatError(ValueError):
    """A malformed input file; the message carries ``path:line``."""


def _line(node) -> int:
    return node.start_mark.line + 1


def _load_nodes(text: str, path: str):
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        line = mark.line + 1 if mark is not None else 1
        raise FileFormatError(f"{path}:{line}: {exc.problem or exc}") from None
    if node is None:
        raise FileFormatError(f"{path}:1: empty document")
    return node, data


def _child(node, key):
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            if k.value == key:
                return v
    return None


def _items(node):
    return node.value if isinstance(node, yaml.SequenceNode) else []


def _expect_int(value, node, path, what):
    if not isinstance(value, int) or isinstance(value, bool):
        raise FileFormatError(f"{path}:{_line(node)}: {what} must be an integer, got {value!r}")
    return value


def scenario_from_text(text: str, path: str = "<scenario>") -> NetworkScenario:
    """Parse a scenario document (JSON or YAML) and validate it.

    Schema::

        strategies: [{arity: int, outcomes: int}, ...]           # ids 1..P in order
        networks:
          - num_sources: int
            agents: [{strategy: int, sources: [int, ...]}, ...]  # 1-based
    """
    root, data = _load_nodes(text, path)
    if not isinstance(data, dict):
        raise FileFormatError(f"{path}:{_line(root)}: top level must be a mapping")
    for key in ("strategies", "networks"):
        if key not in data:
            raise FileFormatError(f"{path}:{_line(root)}: missing key {key!r}")
        if not isinstance(data[key], list):
            raise FileFormatError(f"{path}:{_line(_child(root, key))}: {key!r} must be a list")
    strategies = []
    snodes = _items(_child(root, "strategies"))
    for i, (entry, node) in enumerate(zip(data["strategies"], snodes)):
        if not isinstance(entry, dict) or set(entry) - {"arity", "outcomes"} or len(entry) != 2:
            raise FileFormatError(f"{path}:{_line(node)}: strategy entry needs exactly 'arity' and 'outcomes'")
        arity = _expect_int(entry["arity"], _child(node, "arity"), path, "arity")
        outcomes = _expect_int(entry["outcomes"], _child(node, "outcomes"), path, "outcomes")
        strategies.append(StrategySignature(i + 1, arity, outcomes))
    networks = []
    nnodes = _items(_child(root, "networks"))
    line_of = {}
    for c, (entry, node) in enumerate(zip(data["networks"], nnodes)):
        line_of[f"networks[{c}]"] = _line(node)
        if not isinstance(entry, dict) or "num_sources" not in entry or "agents" not in entry:
            raise FileFormatError(f"{path}:{_line(node)}: network entry needs 'num_sources' and 'agents'")
        S = _expect_int(entry["num_sources"], _child(node, "num_sources"), path, "num_sources")
        agents = []
        anodes = _items(_child(node, "agents"))
        if not isinstance(entry["agents"], list):
            raise FileFormatError(f"{path}:{_line(_child(node, 'agents'))}: 'agents' must be a list")
        for k, (a, anode) in enumerate(zip(entry["agents"], anodes)):
            line_of[f"networks[{c}].agents[{k}]"] = _line(anode)
            if not isinstance(a, dict) or "strategy" not in a or "sources" not in a:
                raise FileFormatError(f"{path}:{_line(anode)}: agent entry needs 'strategy' and 'sources'")
            p = _expect_int(a["strategy"], _child(anode, "strategy"), path, "strategy")
            srcs = a["sources"]
            if not isinstance(srcs, list):
                raise FileFormatError(f"{path}:{_line(_child(anode, 'sources'))}: 'sources' must be a list")
            for s in srcs:
                _expect_int(s, _child(anode, "sources"), path, "source index")
            agents.append(Agent(p, tuple(srcs)))
        networks.append(Network(S, tuple(agents)))
    for i, node in enumerate(snodes):
        line_of[f"strategies[{i}]"] = _line(node)
    scenario = NetworkScenario(tuple(strategies), tuple(networks))
    problems = validate(scenario)
    if problems:
        msgs = [f"{path}:{line_of.get(v.location, _line(root))}: {v}" for v in problems]
        raise FileFormatError("\n".join(msgs))
    return scenario


def load_scenario(path: str) -> NetworkScenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_text(fh.read(), path)


def scenario_to_dict(scenario: NetworkScenario) -> dict:
    return {
        "strategies": [{"arity": s.arity, "outcomes": s.outcomes} for s in scenario.strategies],
        "networks": [{"num_sources": n.num_sources,
                      "agents": [{"strategy": a.strategy, "sources": list(a.sources)} for a in n.agents]}
                     for n in scenario.networks],
    }


def parse_rational(text) -> Fraction:
    """``p/q``, integer or decimal string, parsed exactly."""
    if isinstance(text, (int, Fraction)) and not isinstance(text, bool):
        return Fraction(text)
    if isinstance(text, float):
        raise ValueError(f"refusing float {text!r}; write it as a string or p/q")
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a rational number: {text!r}") from None


def targets_from_text(text: str, scenario: NetworkScenario, path: str = "<targets>") -> list:
    """Target file: ``targets: [[p_1, p_2, ...], ...]``, one list per network.

    Entries are strings or integers (``"1/4"``, ``"0.25"``, ``0``) in row-major
    order over the network's outcome tuples.
    """
    root, data = _load_nodes(text, path)
    if not isinstance(data, dict) or not isinstance(data.get("targets"), list):
        raise FileFormatError(f"{path}:{_line(root)}: expected a mapping with a 'targets' list")
    nodes = _items(_child(root, "targets"))
    if len(data["targets"]) != len(scenario.networks):
        raise FileFormatError(f"{path}:{_line(root)}: {len(data['targets'])} target lists for "
                              f"{len(scenario.networks)} networks")
    out = []
    for c, (probs, node) in enumerate(zip(data["targets"], nodes)):
        try:
            if not isinstance(probs, list):
                raise ValueError("target must be a list of probabilities")
            # read scalars from the raw text so decimals stay exact
            raw = [n.value for n in _items(node)]
            out.append(OutcomeDistribution(scenario.outcome_shape(c), tuple(parse_rational(p) for p in raw)))
        except ValueError as exc:
            raise FileFormatError(f"{path}:{_line(node)}: network {c + 1}: {exc}") from None
    return out


def load_targets(path: str, scenario: NetworkScenario) -> list:
    with open(path, encoding="utf-8") as fh:
        return targets_from_text(fh.read(), scenario, path)
