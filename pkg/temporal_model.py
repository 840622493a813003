"""
Core model for temporal relations.

A temporal relation of arity k is a union of orbits of k-tuples of rationals
under the order automorphisms of (Q, <). An orbit is determined by the
comparison pattern of its tuples, which we store as a weak order: one level
rank per coordinate, levels contiguous from 0.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Dict, FrozenSet, Iterable, Iterator, List, Sequence, Tuple

from solver_config import ARITY_CAP
from solver_errors import ArityCapExceeded

logger = logging.getLogger(__name__)

# Exact rationals: reduced, positive denominator, 0 is 0/1
Rational = Fraction


def canonical_ranks(keys: Sequence) -> Tuple[int, ...]:
    """Rank each key by the number of distinct keys strictly below it."""
    index = {key: rank for rank, key in enumerate(sorted(set(keys)))}
    return tuple(index[key] for key in keys)


@dataclass(frozen=True, order=True)
class WeakOrder:
    """Orbit of k-tuples encoded as level ranks."""

    ranks: Tuple[int, ...]

    def __post_init__(self):
        ranks = tuple(self.ranks)
        object.__setattr__(self, 'ranks', ranks)
        if ranks and set(ranks) != set(range(max(ranks) + 1)):
            raise ValueError(f"ranks {ranks} do not occupy contiguous levels from 0")

    @classmethod
    def from_keys(cls, keys: Sequence) -> 'WeakOrder':
        """Canonicalize any sequence of mutually comparable keys."""
        return cls(canonical_ranks(keys))

    @property
    def arity(self) -> int:
        return len(self.ranks)

    @property
    def levels(self) -> int:
        return max(self.ranks) + 1 if self.ranks else 0

    def restrict(self, coords: Sequence[int]) -> 'WeakOrder':
        return WeakOrder.from_keys([self.ranks[i] for i in coords])

    def reversed(self) -> 'WeakOrder':
        top = self.levels - 1
        return WeakOrder(tuple(top - r for r in self.ranks))

    def level_sets(self) -> List[Tuple[int, ...]]:
        """Coordinates grouped by level, lowest level first."""
        groups = [[] for _ in range(self.levels)]
        for coord, rank in enumerate(self.ranks):
            groups[rank].append(coord)
        return [tuple(group) for group in groups]

    def __str__(self):
        return '(' + ','.join(str(r) for r in self.ranks) + ')'


@dataclass(frozen=True)
class TemporalRelation:
    """A k-ary temporal relation: a canonical (sorted, deduplicated) orbit set."""

    arity: int
    orbits: Tuple[WeakOrder, ...] = ()
    _members: FrozenSet[WeakOrder] = field(default=frozenset(), init=False, repr=False, compare=False)

    def __post_init__(self):
        members = frozenset(self.orbits)
        for orbit in members:
            if orbit.arity != self.arity:
                raise ValueError(f"orbit {orbit} does not have arity {self.arity}")
        object.__setattr__(self, 'orbits', tuple(sorted(members)))
        object.__setattr__(self, '_members', members)

    @classmethod
    def empty(cls, arity: int) -> 'TemporalRelation':
        return cls(arity, ())

    @classmethod
    def full(cls, arity: int) -> 'TemporalRelation':
        return cls(arity, all_weak_orders(arity))

    @classmethod
    def from_tuples(cls, arity: int, tuples: Iterable[Sequence]) -> 'TemporalRelation':
        return cls(arity, tuple(orbit_of_tuple(t) for t in tuples))

    def __contains__(self, orbit: WeakOrder) -> bool:
        return orbit in self._members

    def __iter__(self) -> Iterator[WeakOrder]:
        return iter(self.orbits)

    def __len__(self) -> int:
        return len(self.orbits)

    def contains_tuple(self, values: Sequence) -> bool:
        return orbit_of_tuple(values) in self._members

    def is_empty(self) -> bool:
        return not self.orbits

    def is_full(self) -> bool:
        return len(self.orbits) == ordered_bell(self.arity)

    def member_set(self) -> FrozenSet[WeakOrder]:
        return self._members

    def __str__(self):
        return '{' + ', '.join(str(w) for w in self.orbits) + '}'


@dataclass(frozen=True)
class LayeredSolution:
    """Ordered layers of variables; layer j holds the variables with value j."""

    layers: Tuple[FrozenSet[str], ...]

    def __post_init__(self):
        layers = tuple(frozenset(layer) for layer in self.layers)
        seen = set()
        for layer in layers:
            if not layer:
                raise ValueError("layers must be non-empty")
            if seen & layer:
                raise ValueError("layers must be disjoint")
            seen |= layer
        object.__setattr__(self, 'layers', layers)

    @property
    def values(self) -> Dict[str, Rational]:
        return {var: Rational(j) for j, layer in enumerate(self.layers) for var in layer}

    def variables(self) -> FrozenSet[str]:
        return frozenset().union(*self.layers) if self.layers else frozenset()

    def level_of(self, var: str) -> int:
        for j, layer in enumerate(self.layers):
            if var in layer:
                return j
        raise KeyError(var)

    def reversed(self) -> 'LayeredSolution':
        return LayeredSolution(tuple(reversed(self.layers)))

    def __str__(self):
        return ' < '.join('{' + ','.join(sorted(layer)) + '}' for layer in self.layers)


def check_arity(arity: int):
    if arity > ARITY_CAP:
        raise ArityCapExceeded(arity, ARITY_CAP)


def orbit_of_tuple(values: Sequence) -> WeakOrder:
    """The orbit of a tuple of rationals."""
    return WeakOrder(canonical_ranks(list(values)))


def representative(orbit: WeakOrder) -> Tuple[Rational, ...]:
    """Integer-valued tuple in the orbit: coordinate i gets its rank."""
    return tuple(Rational(r) for r in orbit.ranks)


def enumerate_weak_orders(k: int) -> Iterator[WeakOrder]:
    """
    Yield every weak order of arity k exactly once, in lexicographic order
    of the rank arrays.
    """
    if k < 0:
        raise ValueError("arity must be non-negative")
    check_arity(k)
    ranks = [0] * k

    def extend(position: int, used: FrozenSet[int], top: int):
        remaining = k - position
        if remaining == 0:
            # every level below the top must be occupied
            if len(used) == top + 1:
                yield WeakOrder(tuple(ranks))
            return
        for rank in range(k):
            new_top = max(top, rank)
            new_used = used | {rank}
            if (new_top + 1) - len(new_used) > remaining - 1:
                if rank > top:
                    break
                continue
            ranks[position] = rank
            yield from extend(position + 1, new_used, new_top)

    if k == 0:
        yield WeakOrder(())
        return
    yield from extend(0, frozenset(), -1)


@lru_cache(maxsize=None)
def all_weak_orders(k: int) -> Tuple[WeakOrder, ...]:
    """Cached tuple of enumerate_weak_orders(k); intended for small k."""
    return tuple(enumerate_weak_orders(k))


@lru_cache(maxsize=None)
def ordered_bell(k: int) -> int:
    """Number of weak orders on k coordinates (Fubini numbers)."""
    if k == 0:
        return 1
    return sum(comb(k, i) * ordered_bell(k - i) for i in range(1, k + 1))


def dualize(relation: TemporalRelation) -> TemporalRelation:
    """Order reversal: the image of the relation under x -> -x."""
    return TemporalRelation(relation.arity, tuple(w.reversed() for w in relation))


def identify_coordinates(relation: TemporalRelation, mapping: Sequence[int]) -> TemporalRelation:
    """
    Relation {t' : t' o mapping in R} of arity max(mapping)+1.

    `mapping[i]` is the target coordinate of source coordinate i and must hit
    every target coordinate.
    """
    if len(mapping) != relation.arity:
        raise ValueError(f"mapping has length {len(mapping)}, relation arity is {relation.arity}")
    target_arity = max(mapping) + 1 if mapping else 0
    if set(mapping) != set(range(target_arity)):
        raise ValueError(f"mapping {tuple(mapping)} is not surjective onto [{target_arity}]")

    first_source = {}
    for source, target in enumerate(mapping):
        first_source.setdefault(target, source)

    orbits = []
    for orbit in relation:
        if all(orbit.ranks[i] == orbit.ranks[first_source[t]] for i, t in enumerate(mapping)):
            orbits.append(orbit.restrict([first_source[t] for t in range(target_arity)]))
    return TemporalRelation(target_arity, tuple(orbits))


def project(relation: TemporalRelation, coords: Sequence[int]) -> TemporalRelation:
    """Existential projection onto the given coordinates, in the given order."""
    if not coords:
        raise ValueError("projection needs at least one coordinate")
    if len(set(coords)) != len(coords):
        raise ValueError(f"projection coordinates {tuple(coords)} are not distinct")
    for c in coords:
        if not 0 <= c < relation.arity:
            raise ValueError(f"coordinate {c} out of range for arity {relation.arity}")
    return TemporalRelation(len(coords), tuple(w.restrict(coords) for w in relation))
