import itertools

import numpy as np
import pytest

from psinflation import _pykernels, kernels, strategy
from psinflation.strategy import DeterministicStrategy, RelabelGroup

from oracles import brute_orbits

ROW_COL = RelabelGroup.independent(2)


def test_evaluation_is_one_based_outputs_zero_based_inputs():
    s = DeterministicStrategy((2, 3), 2, (1, 2, 1, 2, 2, 2))
    assert s(0, 1) == 2 and s(1, 0) == 2 and s(0, 2) == 1
    assert s.as_array().shape == (2, 3)
    with pytest.raises(IndexError):
        s(2, 0)
    with pytest.raises(ValueError, match="outside 1..2"):
        DeterministicStrategy((2,), 2, (0, 1))
    with pytest.raises(ValueError, match="domain needs 4"):
        DeterministicStrategy((2, 2), 2, (1, 1, 1))


def test_enumeration_counts_and_order():
    count, it = strategy.enumerate_strategies((2, 2), 2)
    tabs = [s.table for s in it]
    assert count == 16 == len(tabs)
    assert tabs == sorted(tabs) and len(set(tabs)) == 16
    assert strategy.count_strategies((4, 4), 2) == 65536
    assert strategy.count_strategies((3,), 3) == 27


def test_enumeration_cap_names_the_count():
    with pytest.raises(ValueError, match="4294967296 strategies exceed"):
        strategy.enumerate_strategies((4, 8), 2)


def test_group_orders():
    assert ROW_COL.order((4, 4)) == 576
    assert RelabelGroup.diagonal(2).order((4, 4)) == 24
    assert RelabelGroup.trivial(2).order((4, 4)) == 1
    with pytest.raises(ValueError, match="unequal domain sizes"):
        RelabelGroup.diagonal(2).order((3, 4))


@pytest.mark.parametrize("rows,cols,k", [(2, 2, 2), (2, 3, 2), (3, 3, 2), (2, 2, 3)])
def test_orbit_counts_agree_with_expansion_and_burnside(rows, cols, k):
    expected, sizes = brute_orbits(rows, cols, k)
    reps = strategy.orbit_representatives((rows, cols), k, ROW_COL)
    assert len(reps) == expected == strategy.burnside_count((rows, cols), k, ROW_COL)
    assert sum(sizes) == k ** (rows * cols)


def test_orbit_sizes_recover_total_4x4():
    reps = strategy.orbit_representatives((4, 4), 2, ROW_COL)
    assert len(reps) == 317
    # orbit-stabilizer over a sample plus the exact total via sizes of all orbits
    tabs = strategy.all_tables(16, 2)
    canon = kernels.canonicalize_tables(tabs, ROW_COL.position_maps((4, 4)))
    _, sizes = np.unique(canon, axis=0, return_counts=True)
    assert len(sizes) == 317 and sizes.sum() == 65536
    for r in reps[::40]:
        assert len(strategy.orbit(r, ROW_COL)) == sizes[reps.index(r)]


def test_canonical_form_is_invariant(rnd):
    maps = list(ROW_COL.elements((4, 4)))
    for _ in range(50):
        s = DeterministicStrategy((4, 4), 2, tuple(rnd.randint(1, 2) for _ in range(16)))
        g = maps[rnd.randrange(len(maps))]
        assert strategy.canonicalize(ROW_COL.act(g, s), ROW_COL) == strategy.canonicalize(s, ROW_COL)
        assert strategy.canonicalize(s, ROW_COL).table == min(strategy.orbit(s, ROW_COL))


def test_act_relabels_inputs():
    s = DeterministicStrategy.from_function((3, 2), 3, lambda x, y: x + 1)
    g = ((1, 2, 0), (0, 1))
    t = RelabelGroup.independent(2).act(g, s)
    for x, y in itertools.product(range(3), range(2)):
        assert t(g[0][x], g[1][y]) == s(x, y)


def test_position_maps_match_act():
    s = DeterministicStrategy((3, 3), 3, tuple(range(1, 4)) * 3)
    group = RelabelGroup.diagonal(2)
    images = {tuple(s.table[i] for i in m) for m in group.position_maps((3, 3))}
    assert images == strategy.orbit(s, group)


def test_backends_agree(rnd):
    tabs = np.array([[rnd.randint(0, 2) for _ in range(9)] for _ in range(300)], dtype=np.uint8)
    maps = ROW_COL.position_maps((3, 3))
    a = _pykernels.canonicalize_tables(tabs, maps)
    b = kernels.canonicalize_tables(tabs, maps)
    assert np.array_equal(a, b)
    pos = np.array([[0, 4], [1, 2], [8, 8]], dtype=np.intp)
    radix = np.array([3, 1], dtype=np.int64)
    h1 = _pykernels.outcome_histogram(tabs, pos, radix, 9)
    h2 = kernels.outcome_histogram(tabs, pos, radix, 9)
    assert np.array_equal(h1, h2)
    assert (h1.sum(axis=1) == len(pos)).all()


def test_single_constant_map():
    count, it = strategy.enumerate_strategies((1,), 1)
    assert count == 1 and [s.table for s in it] == [(1,)]


def test_canonical_examples():
    ones = DeterministicStrategy.constant((4, 4), 2)
    assert strategy.canonicalize(ones, ROW_COL) == ones
    table = [1] * 16
    table[2 * 4 + 1] = 2  # single 2 at row 3, column 2
    canon = strategy.canonicalize(DeterministicStrategy((4, 4), 2, table), ROW_COL)
    # the lexicographic minimum pushes the mark to the last cell
    assert canon.table == (1,) * 15 + (2,)


def test_representatives_sorted_and_complete():
    reps = strategy.orbit_representatives((3, 3), 2, ROW_COL)
    tabs = [r.table for r in reps]
    assert tabs == sorted(tabs)
    _, it = strategy.enumerate_strategies((3, 3), 2)
    assert {strategy.canonicalize(s, ROW_COL).table for s in it} == set(tabs)
