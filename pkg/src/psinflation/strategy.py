"""Deterministic strategies, input-relabeling groups and orbit representatives.

A strategy of arity ``k`` is a table over ``range(d_1) x ... x range(d_k)``
(inputs are 0-based) with outcomes in ``1..outcomes``.  Tables are stored
flattened in row-major order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import kernels

DEFAULT_CAP = 2 ** 20
MAX_GROUP_ORDER = 20_000


@dataclass(frozen=True)
class DeterministicStrategy:
    domain_sizes: tuple
    outcomes: int
    table: tuple

    def __post_init__(self):
        object.__setattr__(self, "domain_sizes", tuple(int(d) for d in self.domain_sizes))
        object.__setattr__(self, "table", tuple(int(v) for v in self.table))
        if not self.domain_sizes or any(d < 1 for d in self.domain_sizes):
            raise ValueError(f"domain sizes must be positive, got {self.domain_sizes}")
        if self.outcomes < 1:
            raise ValueError("outcomes must be >= 1")
        size = math.prod(self.domain_sizes)
        if len(self.table) != size:
            raise ValueError(f"table has {len(self.table)} entries, domain needs {size}")
        bad = [v for v in self.table if not 1 <= v <= self.outcomes]
        if bad:
            raise ValueError(f"table entry {bad[0]} outside 1..{self.outcomes}")

    @property
    def arity(self) -> int:
        return len(self.domain_sizes)

    def __call__(self, *inputs) -> int:
        return self.table[_flat_index(inputs, self.domain_sizes)]

    def as_array(self) -> np.ndarray:
        return np.array(self.table, dtype=np.int64).reshape(self.domain_sizes)

    @classmethod
    def constant(cls, domain_sizes, outcomes, value=1):
        return cls(tuple(domain_sizes), outcomes, (value,) * math.prod(domain_sizes))

    @classmethod
    def from_function(cls, domain_sizes, outcomes, fn):
        cells = itertools.product(*(range(d) for d in domain_sizes))
        return cls(tuple(domain_sizes), outcomes, tuple(fn(*c) for c in cells))


def _flat_index(inputs, sizes) -> int:
    if len(inputs) != len(sizes):
        raise ValueError(f"expected {len(sizes)} inputs, got {len(inputs)}")
    idx = 0
    for v, d in zip(inputs, sizes):
        if not 0 <= v < d:
            raise IndexError(f"input {v} outside range({d})")
        idx = idx * d + v
    return idx


def strides(sizes) -> tuple:
    out, acc = [], 1
    for d in reversed(sizes):
        out.append(acc)
        acc *= d
    return tuple(reversed(out))


# ---------------------------------------------------------------------------
# relabeling groups


@dataclass(frozen=True)
class RelabelGroup:
    """Products of symmetric groups acting on input values.

    Slots are grouped into classes; every class gets one permutation of its
    values, applied to all slots of that class.  ``independent(k)`` gives each
    of ``k`` slots its own class, ``diagonal(k)`` puts them all in one.
    """

    classes: tuple

    def __post_init__(self):
        classes = tuple(tuple(sorted(int(s) for s in c)) for c in self.classes)
        flat = [s for c in classes for s in c]
        if sorted(flat) != list(range(len(flat))):
            raise ValueError(f"classes {classes} do not partition the slots 0..{len(flat) - 1}")
        object.__setattr__(self, "classes", classes)

    @classmethod
    def independent(cls, arity: int) -> "RelabelGroup":
        return cls(tuple((i,) for i in range(arity)))

    @classmethod
    def diagonal(cls, arity: int) -> "RelabelGroup":
        return cls((tuple(range(arity)),))

    @classmethod
    def trivial(cls, arity: int) -> "RelabelGroup":
        # an empty product: no relabeling at all
        return _TrivialGroup(tuple((i,) for i in range(arity)))

    @property
    def arity(self) -> int:
        return sum(len(c) for c in self.classes)

    def class_size(self, c, domain_sizes) -> int:
        sizes = {domain_sizes[s] for s in self.classes[c]}
        if len(sizes) != 1:
            raise ValueError(f"slots of class {self.classes[c]} have unequal domain sizes {sizes}")
        return sizes.pop()

    def order(self, domain_sizes) -> int:
        return math.prod(math.factorial(self.class_size(c, domain_sizes)) for c in range(len(self.classes)))

    def elements(self, domain_sizes) -> Iterator[tuple]:
        """Yield per-slot value maps ``(perm_slot0, perm_slot1, ...)``."""
        if len(domain_sizes) != self.arity:
            raise ValueError(f"group acts on {self.arity} slots, domain has {len(domain_sizes)}")
        per_class = [itertools.permutations(range(self.class_size(c, domain_sizes)))
                     for c in range(len(self.classes))]
        for choice in itertools.product(*per_class):
            perms = [None] * self.arity
            for c, perm in zip(self.classes, choice):
                for s in c:
                    perms[s] = perm
            yield tuple(perms)

    def position_maps(self, domain_sizes) -> np.ndarray:
        """Array ``P[g, t]``: entry ``t`` of ``g . s`` is entry ``P[g, t]`` of ``s``.

        ``(g . s)(x) = s(g^{-1} x)``; since the group is closed under inverses
        the set of maps is the same whichever convention is used.
        """
        order = self.order(domain_sizes)
        if order > MAX_GROUP_ORDER:
            raise ValueError(f"group order {order} exceeds traversal limit {MAX_GROUP_ORDER}")
        cells = np.array(list(itertools.product(*(range(d) for d in domain_sizes))), dtype=np.intp)
        cells = cells.reshape(-1, len(domain_sizes))
        st = np.array(strides(domain_sizes), dtype=np.intp)
        maps = []
        for perms in self.elements(domain_sizes):
            moved = np.stack([np.asarray(p, dtype=np.intp)[cells[:, i]] for i, p in enumerate(perms)], axis=1)
            maps.append(moved @ st)
        return np.array(maps, dtype=np.intp)

    def act(self, perms, s: DeterministicStrategy) -> DeterministicStrategy:
        """Relabel inputs of ``s``: the result maps ``(perm_i[x_i])_i`` to ``s(x)``."""
        out = [0] * len(s.table)
        for cell in itertools.product(*(range(d) for d in s.domain_sizes)):
            moved = tuple(p[x] for p, x in zip(perms, cell))
            out[_flat_index(moved, s.domain_sizes)] = s(*cell)
        return DeterministicStrategy(s.domain_sizes, s.outcomes, tuple(out))


class _TrivialGroup(RelabelGroup):
    def order(self, domain_sizes) -> int:
        return 1

    def elements(self, domain_sizes):
        yield tuple(tuple(range(d)) for d in domain_sizes)


# ---------------------------------------------------------------------------
# enumeration and canonical forms


def count_strategies(domain_sizes, outcomes) -> int:
    return outcomes ** math.prod(domain_sizes)


def enumerate_strategies(domain_sizes, outcomes, cap: int = DEFAULT_CAP):
    """Return ``(count, iterator)`` over all tables in lexicographic order.

    Raises ValueError naming the count when it exceeds ``cap``.
    """
    domain_sizes = tuple(domain_sizes)
    if outcomes < 1 or not domain_sizes or any(d < 1 for d in domain_sizes):
        raise ValueError(f"bad strategy shape {domain_sizes} with {outcomes} outcomes")
    total = count_strategies(domain_sizes, outcomes)
    if total > cap:
        raise ValueError(f"{total} strategies exceed the enumeration cap {cap}")
    T = math.prod(domain_sizes)

    def gen():
        for table in itertools.product(range(1, outcomes + 1), repeat=T):
            yield DeterministicStrategy(domain_sizes, outcomes, table)

    return total, gen()


def all_tables(size: int, outcomes: int) -> np.ndarray:
    """All tables of ``size`` entries over ``1..outcomes`` as a uint8 array, lex order."""
    total = outcomes ** size
    codes = np.arange(total, dtype=np.int64)
    powers = outcomes ** np.arange(size - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] // powers) % outcomes + 1).astype(np.uint8)


def canonicalize(s: DeterministicStrategy, group: RelabelGroup) -> DeterministicStrategy:
    """Lexicographically smallest table in the orbit of ``s``."""
    maps = group.position_maps(s.domain_sizes)
    t = np.array([s.table], dtype=np.uint8)
    best = kernels.canonicalize_tables(t, maps)[0]
    return DeterministicStrategy(s.domain_sizes, s.outcomes, tuple(int(v) for v in best))


def orbit(s: DeterministicStrategy, group: RelabelGroup) -> set:
    """All tables in the orbit of ``s`` by explicit traversal."""
    return {group.act(perms, s).table for perms in group.elements(s.domain_sizes)}


def orbit_representative_tables(domain_sizes, outcomes, group: RelabelGroup,
                                cap: int = DEFAULT_CAP, chunk: int = 8192) -> np.ndarray:
    """Sorted canonical tables, one per orbit, as a uint8 array."""
    total = count_strategies(domain_sizes, outcomes)
    if total > cap:
        raise ValueError(f"{total} strategies exceed the enumeration cap {cap}")
    maps = group.position_maps(domain_sizes)
    T = math.prod(domain_sizes)
    tables = all_tables(T, outcomes)
    canon = []
    for start in range(0, total, chunk):
        block = tables[start:start + chunk]
        c = kernels.canonicalize_tables(block, maps)
        # a table is a representative iff it equals its canonical form
        canon.append(block[(c == block).all(axis=1)])
    return np.concatenate(canon, axis=0)


def orbit_representatives(domain_sizes, outcomes, group: RelabelGroup,
                          cap: int = DEFAULT_CAP) -> list:
    tabs = orbit_representative_tables(domain_sizes, outcomes, group, cap)
    return [DeterministicStrategy(tuple(domain_sizes), outcomes, tuple(int(v) for v in t)) for t in tabs]


def burnside_count(domain_sizes, outcomes, group: RelabelGroup) -> int:
    """Number of orbits via Burnside: average number of fixed tables per element."""
    maps = group.position_maps(domain_sizes)
    total = 0
    for m in maps:
        # cycles of the position permutation
        seen = np.zeros(len(m), dtype=bool)
        cycles = 0
        for t in range(len(m)):
            if not seen[t]:
                cycles += 1
                u = t
                while not seen[u]:
                    seen[u] = True
                    u = m[u]
        total += outcomes ** cycles
    return total // len(maps)
