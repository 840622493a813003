"""
Synthesis and verification of the three syntactic normal forms:

    pp-clauses       x != y1 | ... | x != yk | x >= z1 | ... | x >= zl
    min-clauses      x o1 z1 | ... | x ol zl          with oi in {>=, >}
    min-affine       the min-tuple of the scope lies in a near-affine T

A form is synthesized as the conjunction of every entailed formula of the
restricted shape; it defines R exactly when R is closed under the matching
operation. The conjunction is then pruned greedily.

Orbit sets are handled as int bitmasks over the canonical orbit list of
the arity, so entailment and conjunction are single AND operations.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from gf2_affine import BitTuple, BoolRelation, is_near_affine, min_tuple, near_affine_closure
from temporal_model import (TemporalRelation, WeakOrder, all_weak_orders, check_arity, dualize,
                            representative)

logger = logging.getLogger(__name__)

GE = '>='
GT = '>'
DUAL_OPS = {'>=': '<=', '>': '<'}


# --- Normal form types ---------------------------------------------------

@dataclass(frozen=True)
class MinClause:
    """x o1 z1 | ... ; no literals means false. `dual` reads >=/> as <=/<."""

    head: str
    literals: Tuple[Tuple[str, str], ...] = ()
    dual: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'literals', tuple(tuple(lit) for lit in self.literals))
        for op, body in self.literals:
            if op not in (GE, GT):
                raise ValueError(f"min-clause literal operator must be >= or >, got {op!r}")
            if body == self.head:
                raise ValueError(f"literal {self.head} {op} {body} repeats the head")

    def holds(self, values: Mapping) -> bool:
        x = values[self.head]
        for op, body in self.literals:
            z = values[body]
            if self.dual:
                x_, z_ = -x, -z
            else:
                x_, z_ = x, z
            if (x_ >= z_) if op == GE else (x_ > z_):
                return True
        return False

    def variables(self) -> Tuple[str, ...]:
        return (self.head,) + tuple(body for _, body in self.literals)

    def dualized(self) -> 'MinClause':
        return MinClause(self.head, self.literals, not self.dual)

    def __str__(self):
        if not self.literals:
            return 'false'
        show = (lambda op: DUAL_OPS[op]) if self.dual else (lambda op: op)
        return ' | '.join(f"{self.head} {show(op)} {body}" for op, body in self.literals)


@dataclass(frozen=True)
class PPClause:
    """x != y1 | ... | x >= z1 | ... ; both lists empty means false."""

    head: str
    diseq_bodies: Tuple[str, ...] = ()
    geq_bodies: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'diseq_bodies', tuple(self.diseq_bodies))
        object.__setattr__(self, 'geq_bodies', tuple(self.geq_bodies))
        if self.head in self.diseq_bodies or self.head in self.geq_bodies:
            raise ValueError(f"pp-clause with head {self.head} repeats the head")

    def holds(self, values: Mapping) -> bool:
        x = values[self.head]
        return (any(x != values[y] for y in self.diseq_bodies)
                or any(x >= values[z] for z in self.geq_bodies))

    def variables(self) -> Tuple[str, ...]:
        return (self.head,) + self.diseq_bodies + self.geq_bodies

    def __str__(self):
        parts = [f"{self.head} != {y}" for y in self.diseq_bodies]
        parts += [f"{self.head} >= {z}" for z in self.geq_bodies]
        return ' | '.join(parts) if parts else 'false'


@dataclass(frozen=True)
class MinAffineForm:
    """
    The min-tuple of the scope's values lies in T (near-affine, 1...1 excluded).
    With `dual`, the max-tuple is used instead.
    """

    scope: Tuple[str, ...]
    T: BoolRelation
    dual: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'scope', tuple(self.scope))
        if self.T.width != len(self.scope):
            raise ValueError(f"T has width {self.T.width}, scope has {len(self.scope)} variables")
        object.__setattr__(self, 'T', self.T.without_ones())
        check = is_near_affine(self.T)
        if not check.near_affine:
            raise ValueError(f"T = {self.T} is not near-affine")

    def holds(self, values: Mapping) -> bool:
        if not self.scope:
            return bool(self.T.members)
        scoped = [values[v] for v in self.scope]
        if self.dual:
            scoped = [-v for v in scoped]
        return min_tuple(scoped) in self.T

    def variables(self) -> Tuple[str, ...]:
        return self.scope

    def dualized(self) -> 'MinAffineForm':
        return MinAffineForm(self.scope, self.T, not self.dual)

    def describe(self) -> str:
        text = f"scope ({','.join(self.scope)}), T = {self.T}"
        return text + ' (max-tuple)' if self.dual else text

    def _pattern(self, t: BitTuple) -> str:
        zeros = [v for v, bit in zip(self.scope, t.bits) if bit == 0]
        ones = [v for v, bit in zip(self.scope, t.bits) if bit == 1]
        strict = '>' if self.dual else '<'
        atoms = [f"{zeros[0]} = {other}" for other in zeros[1:]]
        atoms += [f"{zeros[0]} {strict} {other}" for other in ones]
        return ' & '.join(atoms) if atoms else f"{zeros[0]} = {zeros[0]}"

    def __str__(self):
        members = self.T.sorted_members()
        if not members:
            return 'false'
        if len(members) == 1:
            return self._pattern(members[0])
        return ' | '.join(f"({self._pattern(t)})" for t in members)


def format_conjunction(forms: Sequence) -> str:
    """Print a normal form in formula syntax (re-parseable)."""
    if not forms:
        return 'true'
    if len(forms) == 1:
        return str(forms[0])
    return ' & '.join(f"({form})" for form in forms)


def relation_of_normal_form(forms: Sequence, variables: Sequence[str]) -> TemporalRelation:
    """The relation the conjunction of the forms defines over `variables`."""
    names = tuple(variables)
    check_arity(len(names))
    orbits = []
    for orbit in all_weak_orders(len(names)):
        values = dict(zip(names, representative(orbit)))
        if all(form.holds(values) for form in forms):
            orbits.append(orbit)
    return TemporalRelation(len(names), tuple(orbits))


# --- Synthesis machinery ---------------------------------------------------

def default_names(arity: int) -> Tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(arity))


def _names_for(relation: TemporalRelation, variables: Optional[Sequence[str]]) -> Tuple[str, ...]:
    names = tuple(variables) if variables is not None else default_names(relation.arity)
    if len(names) != relation.arity:
        raise ValueError(f"{len(names)} names given for a relation of arity {relation.arity}")
    if len(set(names)) != len(names):
        raise ValueError("normal-form variable names must be distinct")
    return names


@lru_cache(maxsize=None)
def _orbit_index(arity: int) -> Dict[WeakOrder, int]:
    return {w: i for i, w in enumerate(all_weak_orders(arity))}


def relation_mask(relation: TemporalRelation) -> int:
    index = _orbit_index(relation.arity)
    mask = 0
    for w in relation:
        mask |= 1 << index[w]
    return mask


def _mask_of(arity: int, predicate: Callable[[Tuple[int, ...]], bool]) -> int:
    mask = 0
    for i, w in enumerate(all_weak_orders(arity)):
        if predicate(w.ranks):
            mask |= 1 << i
    return mask


@lru_cache(maxsize=None)
def _min_clause_candidates(arity: int) -> Tuple[Tuple[int, Tuple[Tuple[str, int], ...], int], ...]:
    """(head, literals, orbit mask) for every clause of shape x o1 z1 | ..."""
    candidates = []
    for head in range(arity):
        bodies = [z for z in range(arity) if z != head]
        for choice in product((None, GE, GT), repeat=len(bodies)):
            literals = tuple((op, z) for op, z in zip(choice, bodies) if op is not None)
            if not literals:
                continue

            def satisfied(ranks, head=head, literals=literals):
                return any(ranks[head] >= ranks[z] if op == GE else ranks[head] > ranks[z]
                           for op, z in literals)

            candidates.append((head, literals, _mask_of(arity, satisfied)))
    return tuple(candidates)


@lru_cache(maxsize=None)
def _pp_clause_candidates(arity: int) -> Tuple[Tuple[int, Tuple[int, ...], Tuple[int, ...], int], ...]:
    """(head, diseq bodies, geq bodies, orbit mask) for every pp-clause."""
    candidates = []
    for head in range(arity):
        bodies = [z for z in range(arity) if z != head]
        for choice in product((None, '!=', GE), repeat=len(bodies)):
            diseq = tuple(z for op, z in zip(choice, bodies) if op == '!=')
            geq = tuple(z for op, z in zip(choice, bodies) if op == GE)
            if not diseq and not geq:
                continue

            def satisfied(ranks, head=head, diseq=diseq, geq=geq):
                return (any(ranks[head] != ranks[y] for y in diseq)
                        or any(ranks[head] >= ranks[z] for z in geq))

            candidates.append((head, diseq, geq, _mask_of(arity, satisfied)))
    return tuple(candidates)


def _conjunction_mask(arity: int, masks: Sequence[int]) -> int:
    full = (1 << len(all_weak_orders(arity))) - 1
    result = full
    for mask in masks:
        result &= mask
    return result


def _synthesize(arity: int, target: int, candidates: List[Tuple[tuple, int]],
                false_form: Callable[[], object]) -> Optional[List[tuple]]:
    """
    Keep entailed candidates, check that their conjunction is the target,
    then drop candidates in reverse canonical order while the conjunction
    stays equal to the target.

    Candidates are (canonical key, orbit mask) pairs; returns the kept keys
    in canonical order, or None when the entailed conjunction is too weak.
    """
    entailed = [(key, mask) for key, mask in candidates if target & ~mask == 0]
    if _conjunction_mask(arity, [m for _, m in entailed]) != target:
        if target == 0:
            return [false_form()]
        return None
    kept = dict(entailed)
    for key, _ in sorted(entailed, key=lambda item: item[0], reverse=True):
        trial = [m for k, m in kept.items() if k != key]
        if _conjunction_mask(arity, trial) == target:
            del kept[key]
            logger.debug(f"pruned redundant conjunct {key}")
    return sorted(kept)


def min_clause_form(relation: TemporalRelation,
                    variables: Optional[Sequence[str]] = None) -> Optional[Tuple[MinClause, ...]]:
    """
    Conjunction of min-clauses defining the relation, or None when the
    relation is not preserved by min.
    """
    names = _names_for(relation, variables)
    check_arity(relation.arity)
    candidates = [((len(lits), head, lits), mask)
                  for head, lits, mask in _min_clause_candidates(relation.arity)]
    kept = _synthesize(relation.arity, relation_mask(relation), candidates,
                       lambda: 'false')
    if kept is None:
        return None
    if kept == ['false']:
        return (MinClause(names[0]),) if names else ()
    clauses = [MinClause(names[head], tuple((op, names[z]) for op, z in lits))
               for _, head, lits in kept]
    return tuple(sorted(clauses, key=lambda c: (names.index(c.head), _literal_key(c, names))))


def _literal_key(clause: MinClause, names: Sequence[str]) -> tuple:
    return tuple((names.index(body), op) for op, body in clause.literals)


def pp_clause_form(relation: TemporalRelation,
                   variables: Optional[Sequence[str]] = None) -> Optional[Tuple[PPClause, ...]]:
    """
    Conjunction of pp-clauses defining the relation, or None when the
    relation is not preserved by pp.
    """
    names = _names_for(relation, variables)
    check_arity(relation.arity)
    candidates = [((len(diseq) + len(geq), head, diseq, geq), mask)
                  for head, diseq, geq, mask in _pp_clause_candidates(relation.arity)]
    kept = _synthesize(relation.arity, relation_mask(relation), candidates,
                       lambda: 'false')
    if kept is None:
        return None
    if kept == ['false']:
        return (PPClause(names[0]),) if names else ()
    clauses = [PPClause(names[head], tuple(names[y] for y in diseq), tuple(names[z] for z in geq))
               for _, head, diseq, geq in kept]
    return tuple(sorted(clauses, key=lambda c: (names.index(c.head),
                                                [names.index(v) for v in c.diseq_bodies],
                                                [names.index(v) for v in c.geq_bodies])))


def min_tuple_set(relation: TemporalRelation, scope: Sequence[int]) -> BoolRelation:
    """Min-tuples of the relation's orbits restricted to the scope coordinates."""
    return BoolRelation(len(scope), frozenset(min_tuple([w.ranks[i] for i in scope]) for w in relation))


def min_affine_form(relation: TemporalRelation,
                    variables: Optional[Sequence[str]] = None) -> Optional[Tuple[MinAffineForm, ...]]:
    """
    Conjunction of min-affine formulas defining the relation, or None when
    the relation is not preserved by mx.
    """
    names = _names_for(relation, variables)
    check_arity(relation.arity)
    arity = relation.arity
    if arity == 0:
        return () if relation.orbits else (MinAffineForm((), BoolRelation(0)),)

    candidates = []
    closures = {}
    for size in range(1, arity + 1):
        for scope in combinations(range(arity), size):
            closure = near_affine_closure(min_tuple_set(relation, scope))
            if closure.is_all_but_ones():
                continue
            closures[scope] = closure

            def satisfied(ranks, scope=scope, closure=closure):
                return min_tuple([ranks[i] for i in scope]) in closure

            candidates.append(((size, scope), _mask_of(arity, satisfied)))

    kept = _synthesize(arity, relation_mask(relation), candidates, lambda: (1, (0,)))
    if kept is None:
        return None
    return tuple(MinAffineForm(tuple(names[i] for i in scope), closures.get(scope, BoolRelation(len(scope))))
                 for _, scope in kept)


def max_clause_form(relation: TemporalRelation,
                    variables: Optional[Sequence[str]] = None) -> Optional[Tuple[MinClause, ...]]:
    """Dual of min_clause_form: clauses x <= z | x < z' for max-closed relations."""
    clauses = min_clause_form(dualize(relation), variables)
    if clauses is None:
        return None
    return tuple(c.dualized() for c in clauses)


def max_affine_form(relation: TemporalRelation,
                    variables: Optional[Sequence[str]] = None) -> Optional[Tuple[MinAffineForm, ...]]:
    """Dual of min_affine_form, for relations preserved by dual-mx."""
    forms = min_affine_form(dualize(relation), variables)
    if forms is None:
        return None
    return tuple(f.dualized() for f in forms)


NORMAL_FORMS = {
    'min': min_clause_form,
    'pp': pp_clause_form,
    'mxaffine': min_affine_form,
    'max': max_clause_form,
    'dual-mxaffine': max_affine_form,
}
