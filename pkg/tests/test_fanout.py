from fractions import Fraction as F

import numpy as np
import pytest

from psinflation import fanout, lp as lpmod, scenario as sc, sleeper
from psinflation.fanout import FanoutModel, FanoutProblem, Marginal
from psinflation.scenario import OutcomeDistribution
from psinflation.strategy import DeterministicStrategy

Q, H = F(1, 4), F(1, 2)


def sleeper_targets(a, b):
    return list(sleeper.lambdas_to_targets(sleeper.SleeperPoint(a, b)))


def test_event_counts():
    p1, p2, _, _ = sleeper_targets(H, Q)
    prob = fanout.sleeper_fanout(p1, p2)
    assert len(prob.agents) == 16 and prob.num_events == 65536
    assert prob.group_order() == 576
    b = fanout.bilocal_fanout(OutcomeDistribution.uniform((2, 2, 2)))
    assert len(b.agents) == 8 and b.num_events == 256
    assert b.group_order() == 4


def test_triangle1_at_six_is_rejected_by_the_cap():
    p = OutcomeDistribution.uniform((2, 2, 2))
    prob = fanout.triangle1_fanout(p)
    assert len(prob.agents) == 30
    with pytest.raises(ValueError, match="1073741824 atomic events exceed the cap 65536"):
        FanoutModel(prob)
    with pytest.raises(ValueError, match="exceed the cap"):
        fanout.build_unfolded_lp(prob)
    with pytest.raises(ValueError, match="n >= 6"):
        fanout.triangle1_fanout(p, n=4)


def test_problem_validation():
    u = OutcomeDistribution.uniform((2,))
    with pytest.raises(ValueError, match="unknown agent"):
        FanoutProblem(2, (("A", (0,)), ("A", (1,))), (2, 2), {"A": (0,)}, (Marginal((("B", (0,)),), u),))
    with pytest.raises(ValueError, match="does not match"):
        FanoutProblem(2, (("A", (0,)), ("A", (1,))), (2, 2), {"A": (0,)},
                      (Marginal((("A", (0,)),), OutcomeDistribution.uniform((3,))),))
    with pytest.raises(ValueError, match="outside the agent set"):
        FanoutProblem(2, (("A", (0,)),), (2,), {"A": (0,)}, ())


@pytest.mark.parametrize("pt,expected", [((H, Q), True), ((F(9, 20), F(9, 20)), False)])
def test_sleeper_equivalence_examples(pt, expected):
    eq = fanout.check_equivalence(sc.builtin("sleeper"), sleeper.sleeper_spec(), sleeper_targets(*pt))
    assert eq.post_verdict is expected and eq.fanout_verdict is expected and eq.equal


def test_bilocal_constant_point_mass_feasible_on_both_sides():
    scen = sc.builtin("bilocal")
    target = OutcomeDistribution.point_mass((2, 2, 2), (1, 1, 1))
    eq = fanout.check_equivalence(scen, fanout.pair_groups_spec(scen, 2), [target])
    assert eq.post_verdict and eq.fanout_verdict


def test_unsupported_pairing_is_an_error():
    scen = sc.builtin("sleeper")
    with pytest.raises(ValueError, match="no fanout correspondence"):
        fanout.fanout_for(scen, sleeper.sleeper_spec(3), sleeper_targets(H, Q))


def test_folded_witness_expands_to_a_symmetric_unfolded_solution():
    scen = sc.builtin("bilocal")
    A = DeterministicStrategy.from_function((2,), 2, lambda x: x + 1)
    B = DeterministicStrategy.from_function((2, 2), 2, lambda x, y: 1 + (x ^ y))
    target = sc.oracle_compatible(scen, [A, B, A])[0]
    prob = fanout.bilocal_fanout(target)
    model = FanoutModel(prob)
    res = lpmod.solve_feasibility(model.lp())
    assert res.feasible
    q = model.expand(res.witness)
    assert sum(q) == 1
    assert lpmod.verify_witness(fanout.build_unfolded_lp(prob), q)
    # invariant under every element of the symmetry group
    radix = 2 ** np.arange(len(prob.agents) - 1, -1, -1)
    for g in prob.agent_maps():
        images = model.events[:, g].astype(np.int64) @ radix
        assert all(q[int(images[e])] == q[e] for e in range(len(q)))
    for m in prob.marginals:
        assert model.event_marginal(q, m) == list(m.target.probabilities)


def test_folded_and_unfolded_verdicts_agree():
    for target in fanout.bilocal_sample_targets(4, seed=3):
        prob = fanout.bilocal_fanout(target)
        folded = lpmod.solve_feasibility(FanoutModel(prob).lp())
        unfolded_lp = fanout.build_unfolded_lp(prob)
        unfolded = lpmod.solve_feasibility(unfolded_lp)
        assert folded.feasible == unfolded.feasible
        assert lpmod.verify_certificate(unfolded_lp, unfolded.certificate)


def test_sample_targets_are_deterministic_and_valid():
    a = fanout.bilocal_sample_targets(8, seed=5)
    assert a == fanout.bilocal_sample_targets(8, seed=5)
    assert all(sum(t.probabilities) == 1 and t.shape == (2, 2, 2) for t in a)
    assert len(fanout.SLEEPER_SAMPLE) == 9
    assert any(a + b > F(3, 4) for a, b in fanout.SLEEPER_SAMPLE)
    assert any(a + b <= F(3, 4) for a, b in fanout.SLEEPER_SAMPLE)


def test_random_binned_strategies_are_valid_oracle_inputs(seed):
    rng = np.random.default_rng(seed)
    for name in ("sleeper", "bilocal", "triangle3"):
        scen = sc.builtin(name)
        for _ in range(10):
            strategies = fanout.random_binned_strategies(scen, rng, max_bins=3)
            assert all(1 <= d <= 3 for st in strategies for d in st.domain_sizes)
            # raises if a source were read with two different bin counts
            dists = sc.oracle_compatible(scen, strategies)
            assert all(sum(d.probabilities) == 1 for d in dists)
