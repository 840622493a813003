"""
Symbolic application of the binary operations min, max, mx, dual-mx, pp and
dual-pp to pairs of orbits, and exact preservation testing.

Applying an operation componentwise to two tuples t, t' gives a tuple whose
orbit depends only on how the values of t and t' interleave (and, for pp, on
where 0 falls among the values of t). Preservation over Q is therefore
decided by enumerating those finitely many patterns.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

from temporal_model import Rational, TemporalRelation, WeakOrder, canonical_ranks

logger = logging.getLogger(__name__)


class Operation(Enum):
    MIN = 'min'
    MAX = 'max'
    MX = 'mx'
    DUAL_MX = 'dual-mx'
    PP = 'pp'
    DUAL_PP = 'dual-pp'

    @property
    def uses_zero(self) -> bool:
        return self in (Operation.PP, Operation.DUAL_PP)

    @property
    def base(self) -> 'Operation':
        """The operation this one is the negation-conjugate of (or itself)."""
        return {Operation.MAX: Operation.MIN,
                Operation.DUAL_MX: Operation.MX,
                Operation.DUAL_PP: Operation.PP}.get(self, self)

    @property
    def is_dual(self) -> bool:
        return self.base is not self


@dataclass(frozen=True)
class CombinedPattern:
    """
    Interleaving of two k-tuples as one weak order of arity 2k.

    `zero_position` places the constant 0 among the levels of the first
    tuple: 2j means strictly below level j (2L means above the top level),
    2j+1 means equal to level j.
    """

    combined: WeakOrder
    zero_position: Optional[int] = None

    @property
    def k(self) -> int:
        return self.combined.arity // 2

    @property
    def first(self) -> WeakOrder:
        return self.combined.restrict(range(self.k))

    @property
    def second(self) -> WeakOrder:
        return self.combined.restrict(range(self.k, 2 * self.k))

    def first_is_nonpositive(self, coord: int) -> bool:
        level = self.first.ranks[coord]
        return 2 * level + 1 <= self.zero_position

    def reversed(self) -> 'CombinedPattern':
        """The pattern of (-t, -t')."""
        zero = None
        if self.zero_position is not None:
            zero = 2 * self.first.levels - self.zero_position
        return CombinedPattern(self.combined.reversed(), zero)

    def witness_tuples(self) -> Tuple[Tuple[Rational, ...], Tuple[Rational, ...]]:
        """Concrete tuples (t, t') realizing this pattern."""
        k = self.k
        ranks = self.combined.ranks
        if self.zero_position is None:
            return (tuple(Rational(r) for r in ranks[:k]),
                    tuple(Rational(r) for r in ranks[k:]))
        # only the order inside t, inside t', and the sign of t matter here
        first = tuple(Rational(2 * level + 1 - self.zero_position) for level in self.first.ranks)
        return first, tuple(Rational(r) for r in self.second.ranks)

    def __str__(self):
        text = f"{self.combined}"
        if self.zero_position is not None:
            text += f" zero@{self.zero_position}"
        return text


@dataclass(frozen=True)
class Counterexample:
    left: WeakOrder
    right: WeakOrder
    pattern: CombinedPattern
    image: WeakOrder

    def describe(self) -> str:
        t, t_prime = self.pattern.witness_tuples()
        fmt = lambda values: '(' + ', '.join(str(v) for v in values) + ')'
        return f"{fmt(t)} and {fmt(t_prime)} map to orbit {self.image}, which is not in the relation"


@dataclass(frozen=True)
class PreservationReport:
    operation: Operation
    closed: bool
    counterexample: Optional[Counterexample] = None

    def __post_init__(self):
        if self.closed != (self.counterexample is None):
            raise ValueError("closed must be true exactly when no counterexample is given")


def _level_merges(lp: int, lq: int) -> Iterator[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """Every weak-order merge of two chains, as merged positions of each level."""
    pos_p = [0] * lp
    pos_q = [0] * lq

    def merge(i: int, j: int, rank: int):
        if i == lp and j == lq:
            yield tuple(pos_p), tuple(pos_q)
            return
        if i < lp and j < lq:
            pos_p[i] = pos_q[j] = rank
            yield from merge(i + 1, j + 1, rank + 1)
        if i < lp:
            pos_p[i] = rank
            yield from merge(i + 1, j, rank + 1)
        if j < lq:
            pos_q[j] = rank
            yield from merge(i, j + 1, rank + 1)

    yield from merge(0, 0, 0)


def shuffles(p: WeakOrder, q: WeakOrder, with_zero: bool = False) -> Iterator[CombinedPattern]:
    """
    Every interleaving of the levels of p with the levels of q, each once;
    with `with_zero`, additionally every placement of 0 among p's levels.
    """
    if p.arity != q.arity:
        raise ValueError(f"orbits have different arities {p.arity} and {q.arity}")
    for pos_p, pos_q in _level_merges(p.levels, q.levels):
        combined = WeakOrder(tuple(pos_p[r] for r in p.ranks) + tuple(pos_q[r] for r in q.ranks))
        if not with_zero:
            yield CombinedPattern(combined)
            continue
        for zero in range(2 * p.levels + 1):
            yield CombinedPattern(combined, zero)


def apply_min(pattern: CombinedPattern) -> WeakOrder:
    k = pattern.k
    ranks = pattern.combined.ranks
    return WeakOrder(canonical_ranks([min(ranks[i], ranks[k + i]) for i in range(k)]))


def apply_mx(pattern: CombinedPattern) -> WeakOrder:
    """Key (rank of the minimum, tie flag): alpha(m) < beta(m) < alpha(m') for m < m'."""
    k = pattern.k
    ranks = pattern.combined.ranks
    keys = [(min(ranks[i], ranks[k + i]), int(ranks[i] == ranks[k + i])) for i in range(k)]
    return WeakOrder(canonical_ranks(keys))


def apply_pp(pattern: CombinedPattern) -> WeakOrder:
    """First argument where it is <= 0, second argument above every such value otherwise."""
    if pattern.zero_position is None:
        raise ValueError("pp needs a pattern with a zero position")
    k = pattern.k
    ranks = pattern.combined.ranks
    keys = []
    for i in range(k):
        if pattern.first_is_nonpositive(i):
            keys.append((0, ranks[i]))
        else:
            keys.append((1, ranks[k + i]))
    return WeakOrder(canonical_ranks(keys))


BASE_APPLY = {
    Operation.MIN: apply_min,
    Operation.MX: apply_mx,
    Operation.PP: apply_pp,
}


def apply_dual(op: Operation, pattern: CombinedPattern) -> WeakOrder:
    """Conjugation by negation: (t, t') -> -op(-t, -t')."""
    if op not in BASE_APPLY:
        raise ValueError(f"no dual defined for {op.value}")
    return BASE_APPLY[op](pattern.reversed()).reversed()


def apply_operation(op: Operation, pattern: CombinedPattern) -> WeakOrder:
    if op.is_dual:
        return apply_dual(op.base, pattern)
    return BASE_APPLY[op](pattern)


@lru_cache(maxsize=None)
def image_orbits(op: Operation, p: WeakOrder, q: WeakOrder) -> FrozenSet[WeakOrder]:
    """All orbits op can produce from a tuple in p and a tuple in q."""
    return frozenset(apply_operation(op, c) for c in shuffles(p, q, op.uses_zero))


def preserves(op: Operation, relation: TemporalRelation) -> PreservationReport:
    """
    Decide whether op preserves the relation; on failure report the first
    violating pair of orbits and pattern in canonical order.
    """
    op = Operation(op)
    members = relation.member_set()
    for p in relation.orbits:
        for q in relation.orbits:
            if image_orbits(op, p, q) <= members:
                continue
            for pattern in shuffles(p, q, op.uses_zero):
                image = apply_operation(op, pattern)
                if image not in members:
                    logger.debug(f"{op.value} fails on {p} x {q} via {pattern} -> {image}")
                    return PreservationReport(op, False, Counterexample(p, q, pattern, image))
    return PreservationReport(op, True)


def classify(relation: TemporalRelation) -> Dict[Operation, bool]:
    """Which of the six operations preserve the relation."""
    return {op: preserves(op, relation).closed for op in Operation}
