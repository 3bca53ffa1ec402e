import itertools
import json
from fractions import Fraction as F

import numpy as np
import pytest

from psinflation import fanout, scenario as sc, sleeper
from psinflation.scenario import Agent, Network, NetworkScenario, OutcomeDistribution, StrategySignature
from psinflation.strategy import DeterministicStrategy


def enumerate_network(net, strategies, bins):
    """Joint outcome distribution by direct enumeration of the sources."""
    dist = {}
    vals = list(itertools.product(*(range(b) for b in bins)))
    for v in vals:
        out = tuple(strategies[a.strategy - 1](*(v[s - 1] for s in a.sources)) for a in net.agents)
        dist[out] = dist.get(out, 0) + F(1, len(vals))
    return dist


def test_builtins_have_the_documented_shape():
    b = sc.builtin("bilocal")
    assert len(b.strategies) == 3 and b.networks[0].num_agents == 3 and b.networks[0].num_sources == 2
    assert [a.sources for a in b.networks[0].agents] == [(1,), (1, 2), (2,)]
    t1 = sc.builtin("triangle1")
    assert len(t1.strategies) == 1 and t1.networks[0].num_sources == 3
    assert t1.networks[0].sources_of(1) == (2, 3)
    s = sc.builtin("sleeper")
    assert [(n.num_agents, n.num_sources) for n in s.networks] == [(2, 3), (2, 3), (1, 2), (5, 8)]
    for name in sc.BUILTINS:
        assert sc.builtin(name).validate() == []
    with pytest.raises(ValueError, match="unknown built-in"):
        sc.builtin("square")


def test_inconsistent_arity_is_reported_with_location():
    bad = NetworkScenario(
        (StrategySignature(1, 2, 2),),
        (Network(2, (Agent(1, (1, 2)),)), Network(1, (Agent(1, (1,)),))),
    )
    problems = bad.validate()
    assert len(problems) == 1
    assert problems[0].location == "networks[1].agents[0]"
    assert "inconsistent arity" in problems[0].message
    with pytest.raises(sc.ScenarioError):
        bad.checked()


def test_every_violation_listed():
    bad = NetworkScenario(
        (StrategySignature(1, 0, 2), StrategySignature(3, 1, 0)),
        (Network(2, (Agent(1, ()), Agent(2, (5,)), Agent(7, (1,)))),),
    )
    locs = [str(v) for v in bad.validate()]
    assert any("strategies[0]: arity must be >= 1" in v for v in locs)
    assert any("contiguous" in v for v in locs)
    assert any("outcomes must be >= 1" in v for v in locs)
    assert any("networks[0].agents[1]: source 5 not in 1..2" in v for v in locs)
    assert any("networks[0].agents[2]: strategy 7 not in 1..2" in v for v in locs)


def test_distribution_invariants():
    with pytest.raises(ValueError, match="sum to 3/4"):
        OutcomeDistribution((2,), (F(1, 2), F(1, 4)))
    with pytest.raises(ValueError, match="nonnegative"):
        OutcomeDistribution((2,), (F(3, 2), F(-1, 2)))
    with pytest.raises(ValueError, match="3 probabilities"):
        OutcomeDistribution((2, 2), (1, 0, 0))
    p = OutcomeDistribution.from_function((2, 3), lambda a, b: F(a * b, 18))
    assert p[(2, 3)] == F(1, 3)
    q = p.tensor(OutcomeDistribution.uniform((2,)))
    assert q.shape == (2, 3, 2) and q[(2, 3, 1)] == F(1, 6)
    assert OutcomeDistribution.uniform((2,)).power(3) == OutcomeDistribution.uniform((2, 2, 2))


def test_oracle_left_input_strategy_gives_half_quarter():
    s = sc.builtin("sleeper")
    left = DeterministicStrategy.from_function((2, 2), 2, lambda x, y: 1 if x == 0 else 2)
    got = sc.oracle_compatible(s, [left])
    assert got == list(sleeper.lambdas_to_targets(sleeper.SleeperPoint(F(1, 2), F(1, 4))))


def test_oracle_constant_strategies_give_point_masses():
    for name in sc.BUILTINS:
        scen = sc.builtin(name)
        strategies = [DeterministicStrategy.constant((3,) * sig.arity, sig.outcomes) for sig in scen.strategies]
        for c, dist in enumerate(sc.oracle_compatible(scen, strategies)):
            assert dist == OutcomeDistribution.point_mass(dist.shape, (1,) * len(dist.shape))


def test_oracle_bilocal_product_matches_enumeration():
    scen = sc.builtin("bilocal")
    A = DeterministicStrategy.from_function((2,), 2, lambda x: x + 1)
    B = DeterministicStrategy.constant((2, 2), 2, 2)
    C = DeterministicStrategy.from_function((2,), 2, lambda x: x + 1)
    got = sc.oracle_compatible(scen, [A, B, C])[0]
    ref = enumerate_network(scen.networks[0], [A, B, C], [2, 2])
    for out, p in got.items():
        assert p == ref.get(out, 0)
        assert p == (F(1, 4) if out[1] == 2 else 0)


def test_oracle_random_tuples_normalized_and_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    for name in ("bilocal", "triangle3", "sleeper"):
        scen = sc.builtin(name)
        for _ in range(10):
            strategies = fanout.random_binned_strategies(scen, rng, max_bins=4)
            dists = sc.oracle_compatible(scen, strategies)
            bins = sc.source_bins(scen, strategies)
            for c, (dist, net) in enumerate(zip(dists, scen.networks)):
                assert sum(dist.probabilities) == 1
                ref = enumerate_network(net, strategies, bins[c])
                assert all(p == ref.get(out, 0) for out, p in dist.items())


def test_oracle_invariant_under_source_relabeling(seed):
    rng = np.random.default_rng(seed)
    scen = sc.builtin("triangle3")
    perm = {1: 3, 2: 1, 3: 2}
    net = scen.networks[0]
    relabeled = NetworkScenario(scen.strategies, (Network(3, tuple(
        Agent(a.strategy, tuple(perm[s] for s in a.sources)) for a in net.agents)),))
    for _ in range(10):
        st = fanout.random_binned_strategies(scen, rng, max_bins=3)
        assert sc.oracle_compatible(scen, st) == sc.oracle_compatible(relabeled, st)


def test_oracle_rejects_mismatched_bins():
    scen = sc.builtin("bilocal")
    A = DeterministicStrategy.constant((2,), 2)
    B = DeterministicStrategy.constant((3, 2), 2)
    with pytest.raises(ValueError, match="source 1 is read with 2 and 3 bins"):
        sc.oracle_compatible(scen, [A, B, A])
    with pytest.raises(ValueError, match="does not match bin counts"):
        sc.oracle_compatible(scen, [A, DeterministicStrategy.constant((2, 2), 2), A],
                             bin_counts=[(2,), (2, 3), (2,)])
    with pytest.raises(ValueError, match="arity"):
        sc.oracle_compatible(scen, [B, B, A])


SLEEPER_YAML = """\
strategies:
  - {arity: 2, outcomes: 2}
networks:
  - num_sources: 2
    agents:
      - strategy: 1
        sources: [1, 2]
"""


def test_scenario_file_roundtrip_yaml_and_json():
    s = sc.scenario_from_text(SLEEPER_YAML, "s.yaml")
    assert s.networks[0].agents[0].sources == (1, 2)
    for name in sc.BUILTINS:
        scen = sc.builtin(name)
        assert sc.scenario_from_text(json.dumps(sc.scenario_to_dict(scen)), "x.json") == scen


def test_scenario_file_errors_are_line_precise():
    text = SLEEPER_YAML.replace("[1, 2]", "[1, 3]")
    with pytest.raises(sc.FileFormatError, match=r"s.yaml:6: networks\[0\].agents\[0\]: source 3 not in 1..2"):
        sc.scenario_from_text(text, "s.yaml")
    with pytest.raises(sc.FileFormatError, match=r"s.yaml:2: strategy entry needs"):
        sc.scenario_from_text(SLEEPER_YAML.replace("{arity: 2, outcomes: 2}", "{arity: 2}"), "s.yaml")
    with pytest.raises(sc.FileFormatError, match=r"s.yaml:1: missing key 'networks'"):
        sc.scenario_from_text("strategies: []\n", "s.yaml")
    js = '{\n  "strategies": [{"arity": 1, "outcomes": 2}],\n  "networks": [\n    {"num_sources": 1,\n     "agents": [{"strategy": 1, "sources": ["a"]}]}\n  ]\n}\n'
    with pytest.raises(sc.FileFormatError, match=r"x.json:5: source index"):
        sc.scenario_from_text(js, "x.json")
    with pytest.raises(sc.FileFormatError, match=r"x.yaml:2: expected the node content"):
        sc.scenario_from_text("strategies: [\n", "x.yaml")


def test_rationals_parse_exactly():
    assert sc.parse_rational("0.1") == F(1, 10)
    assert sc.parse_rational("3/8") == F(3, 8)
    assert sc.parse_rational(2) == 2
    with pytest.raises(ValueError, match="refusing float"):
        sc.parse_rational(0.1)
    with pytest.raises(ValueError, match="not a rational"):
        sc.parse_rational("1/0")


def test_targets_file_keeps_decimals_exact():
    scen = sc.scenario_from_text(SLEEPER_YAML)
    t = sc.targets_from_text("targets:\n  - [0.1, 0.9]\n", scen)
    assert t[0].probabilities == (F(1, 10), F(9, 10))
    t = sc.targets_from_text("targets:\n  - [\"3/10\", 7/10]\n", scen)
    assert t[0].probabilities == (F(3, 10), F(7, 10))
    with pytest.raises(sc.FileFormatError, match=r"t.yaml:2: network 1: probabilities sum to 9/10"):
        sc.targets_from_text("targets:\n  - [0.2, 0.7]\n", scen, "t.yaml")
    with pytest.raises(sc.FileFormatError, match="2 target lists for 1 networks"):
        sc.targets_from_text("targets: [[1, 0], [1, 0]]\n", scen, "t.yaml")
