"""
Layered solvers for temporal CSPs whose relations are min-, mx-, max- or
dual-mx-closed, with optional pinned orders.

Both solvers build the solution bottom-up: each round picks a set S of
remaining variables that may all share the smallest value, emits it as the
next layer and drops every constraint that S settles.

    min:  S is the largest set in which every clause headed in S has a
          >=-literal with its body in S (shrinking fixpoint)
    mx:   indicator vectors of valid S form a GF(2) subspace; S is read off
          a kernel basis (or a particular solution when a pin forces it)

Engines `max` and `dual-mx` dualize every relation, solve with the base
engine and reverse the layers.
"""

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from formula_parser import first_appearance, parse_formula, relation_of_formula
from gf2_affine import GF2System, parity_check, solve_gf2
from instance_loader import CSPInstance, Constraint
from normal_forms import GE, GT, MinAffineForm, MinClause, default_names, min_affine_form, min_clause_form
from polymorphisms import Operation, preserves
from solver_config import BRUTE_CSP_VAR_CAP
from solver_errors import LanguageNotSupported, OracleCapExceeded
from temporal_model import (LayeredSolution, Rational, TemporalRelation, dualize, enumerate_weak_orders,
                            identify_coordinates, representative)

logger = logging.getLogger(__name__)

ENGINES = ('min', 'mx', 'max', 'dual-mx')
ENGINE_OPERATION = {
    'min': Operation.MIN,
    'mx': Operation.MX,
    'max': Operation.MAX,
    'dual-mx': Operation.DUAL_MX,
}

LESS_THAN = relation_of_formula(parse_formula('a < b'), ('a', 'b'))


@dataclass(frozen=True)
class PinnedOrder:
    """Disjoint non-empty variable sets P1 < P2 < ... a solution must realize exactly."""

    levels: Tuple[FrozenSet[str], ...] = ()

    def __post_init__(self):
        levels = tuple(frozenset(level) for level in self.levels)
        seen = set()
        for level in levels:
            if not level:
                raise ValueError("pinned levels must be non-empty")
            if seen & level:
                raise ValueError("pinned levels must be disjoint")
            seen |= level
        object.__setattr__(self, 'levels', levels)

    @classmethod
    def from_values(cls, values: Mapping[str, Rational]) -> 'PinnedOrder':
        """The order type of an assignment."""
        groups = defaultdict(set)
        for var, value in values.items():
            groups[value].add(var)
        return cls(tuple(frozenset(groups[v]) for v in sorted(groups)))

    def variables(self) -> FrozenSet[str]:
        return frozenset().union(*self.levels) if self.levels else frozenset()

    def reversed(self) -> 'PinnedOrder':
        return PinnedOrder(tuple(reversed(self.levels)))

    def realized_by(self, values: Mapping[str, Rational]) -> bool:
        previous = None
        for level in self.levels:
            level_values = {values[v] for v in level}
            if len(level_values) != 1:
                return False
            value = level_values.pop()
            if previous is not None and not previous < value:
                return False
            previous = value
        return True

    def __str__(self):
        return ' < '.join('{' + ','.join(sorted(level)) + '}' for level in self.levels)


def normalize_clause(head: str, literals: Iterable[Tuple[str, str]]) -> Optional[MinClause]:
    """
    Drop literals x > x, drop the whole clause when it has x >= x, and merge
    x >= z with x > z into x >= z. Returns None for a tautology.
    """
    ops = {}
    for op, body in literals:
        if body == head:
            if op == GE:
                return None
            continue
        if ops.get(body) != GE:
            ops[body] = op
    return MinClause(head, tuple((op, body) for body, op in ops.items()))


@dataclass(frozen=True)
class MinCSP:
    variables: Tuple[str, ...]
    clauses: Tuple[MinClause, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'variables', tuple(self.variables))
        object.__setattr__(self, 'clauses', tuple(self.clauses))
        declared = set(self.variables)
        for clause in self.clauses:
            for var in clause.variables():
                if var not in declared:
                    raise ValueError(f"clause {clause} uses undeclared variable '{var}'")

    @classmethod
    def from_raw(cls, variables: Sequence[str],
                 clauses: Iterable[Tuple[str, Iterable[Tuple[str, str]]]]) -> 'MinCSP':
        """Build from (head, literals) pairs that may repeat the head."""
        normalized = [normalize_clause(head, literals) for head, literals in clauses]
        return cls(tuple(variables), tuple(c for c in normalized if c is not None))

    @property
    def forms(self) -> Tuple[MinClause, ...]:
        return self.clauses

    @cached_property
    def index(self) -> 'ClauseIndex':
        """Shared by every solve of this instance, pinned or not."""
        return ClauseIndex.build(self.clauses)

    def extended(self, clauses: Iterable[MinClause]) -> 'MinCSP':
        return MinCSP(self.variables, self.clauses + tuple(clauses))

    def holds(self, values: Mapping) -> bool:
        return all(c.holds(values) for c in self.clauses)


@dataclass(frozen=True)
class MxCSP:
    variables: Tuple[str, ...]
    conjuncts: Tuple[MinAffineForm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'variables', tuple(self.variables))
        object.__setattr__(self, 'conjuncts', tuple(self.conjuncts))
        declared = set(self.variables)
        for form in self.conjuncts:
            if len(set(form.scope)) != len(form.scope):
                raise ValueError(f"min-affine scope {form.scope} repeats a variable")
            for var in form.scope:
                if var not in declared:
                    raise ValueError(f"conjunct over {form.scope} uses undeclared variable '{var}'")

    @property
    def forms(self) -> Tuple[MinAffineForm, ...]:
        return self.conjuncts

    def extended(self, conjuncts: Iterable[MinAffineForm]) -> 'MxCSP':
        return MxCSP(self.variables, self.conjuncts + tuple(conjuncts))

    def holds(self, values: Mapping) -> bool:
        return all(f.holds(values) for f in self.conjuncts)


NativeCSP = Union[MinCSP, MxCSP]


def _check_pin(variables: Sequence[str], pin: Optional[PinnedOrder]):
    if pin is None:
        return
    unknown = pin.variables() - set(variables)
    if unknown:
        raise ValueError(f"pinned variables {sorted(unknown)} are not instance variables")


# --- min-closed instances --------------------------------------------------

@dataclass(frozen=True)
class ClauseIndex:
    """Clause ids by head, by occurring variable and by >=-body, built once per clause set."""

    heads: Tuple[str, ...]
    ge_bodies: Tuple[FrozenSet[str], ...]
    occurs: Mapping[str, Tuple[int, ...]]
    watchers: Mapping[str, Tuple[int, ...]]

    @classmethod
    def build(cls, clauses: Sequence[MinClause]) -> 'ClauseIndex':
        heads, ge_bodies = [], []
        occurs = defaultdict(list)
        watchers = defaultdict(list)
        for cid, clause in enumerate(clauses):
            heads.append(clause.head)
            bodies = frozenset(body for op, body in clause.literals if op == GE)
            ge_bodies.append(bodies)
            for var in set(clause.variables()):
                occurs[var].append(cid)
            for body in bodies:
                watchers[body].append(cid)
        return cls(tuple(heads), tuple(ge_bodies),
                   {var: tuple(ids) for var, ids in occurs.items()},
                   {var: tuple(ids) for var, ids in watchers.items()})


def _greatest_free_set(index: ClauseIndex, alive: Set[int], allowed: Set[str]) -> FrozenSet[str]:
    free = set(allowed)
    support = {}
    queue = []
    for cid in alive:
        head = index.heads[cid]
        if head in free:
            n = len(index.ge_bodies[cid] & free)
            support[cid] = n
            if not n:
                queue.append(head)
    while queue:
        var = queue.pop()
        if var not in free:
            continue
        free.discard(var)
        for cid in index.watchers.get(var, ()):
            if cid in support and index.heads[cid] in free:
                support[cid] -= 1
                if not support[cid]:
                    queue.append(index.heads[cid])
    return frozenset(free)


def max_free_set(clauses: Sequence[MinClause], allowed: Iterable[str]) -> FrozenSet[str]:
    """
    Largest S within `allowed` such that every clause headed in S has a
    >=-literal with body in S.
    """
    clauses = list(clauses)
    return _greatest_free_set(ClauseIndex.build(clauses), set(range(len(clauses))), set(allowed))


def is_valid_min_layer(clauses: Sequence[MinClause], layer: FrozenSet[str]) -> bool:
    return all(any(op == GE and body in layer for op, body in c.literals)
               for c in clauses if c.head in layer)


class _MinLayering:
    """
    State of one layered min solve.

    `support[c]` counts the >=-bodies of clause c outside the pin. It stays
    fixed while c is alive, since a clause dies as soon as one of its
    variables is emitted, so a free set is found by propagating from the
    heads of unsupported clauses only.
    """

    def __init__(self, index: ClauseIndex, pinned: Set[str]):
        self.index = index
        self.alive = set(range(len(index.heads)))
        self.support = [len(bodies - pinned) for bodies in index.ge_bodies]
        self.unsupported = Counter(head for cid, head in enumerate(index.heads) if not self.support[cid])

    def bonus(self, level: FrozenSet[str]) -> Dict[int, int]:
        """>=-bodies of each alive clause that lie in a pinned level."""
        bonus = {}
        for var in level:
            for cid in self.index.watchers.get(var, ()):
                if cid in self.alive:
                    bonus[cid] = bonus.get(cid, 0) + 1
        return bonus

    def free_set(self, allowed: Set[str], bonus: Optional[Mapping[int, int]] = None) -> FrozenSet[str]:
        """
        Greatest subset of `allowed` in which every alive clause headed inside
        has a >=-body inside. `allowed` holds the unpinned remaining variables,
        plus one pinned level whose clause counts are given by `bonus`.
        """
        index, support, alive = self.index, self.support, self.alive
        bonus = bonus or {}
        rescued = Counter(index.heads[cid] for cid in bonus if not support[cid])
        queue = [head for head, n in self.unsupported.items() if n > rescued[head] and head in allowed]
        free = set(allowed)
        lost = {}
        while queue:
            var = queue.pop()
            if var not in free:
                continue
            free.discard(var)
            for cid in index.watchers.get(var, ()):
                if cid in alive and index.heads[cid] in free:
                    lost[cid] = lost.get(cid, 0) + 1
                    if lost[cid] == support[cid] + bonus.get(cid, 0):
                        queue.append(index.heads[cid])
        return frozenset(free)

    def emit(self, layer: FrozenSet[str]):
        for var in layer:
            for cid in self.index.occurs.get(var, ()):
                if cid in self.alive:
                    self.alive.discard(cid)
                    if not self.support[cid]:
                        head = self.index.heads[cid]
                        self.unsupported[head] -= 1
                        if not self.unsupported[head]:
                            del self.unsupported[head]


def solve_min_csp(csp: MinCSP, pin: Optional[PinnedOrder] = None) -> Optional[LayeredSolution]:
    """
    Layered greedy for min-closed clause sets.

    Returns:
        LayeredSolution realizing the pin exactly, or None when no
        assignment extending the pin satisfies every clause
    """
    _check_pin(csp.variables, pin)
    remaining = set(csp.variables)
    pinned_levels = list(pin.levels) if pin else []
    pinned = set().union(*pinned_levels) if pinned_levels else set()
    state = _MinLayering(csp.index, pinned)
    layers = []

    while remaining:
        unpinned = remaining - pinned
        layer = state.free_set(unpinned)
        if not layer and pinned_levels:
            bottom = pinned_levels[0]
            candidate = state.free_set(unpinned | bottom, state.bonus(bottom))
            if bottom <= candidate:
                layer = candidate
                pinned_levels.pop(0)
                pinned -= bottom
        if not layer:
            logger.debug(f"min solver stuck with {len(remaining)} variables and {len(state.alive)} clauses")
            return None
        layers.append(layer)
        remaining -= layer
        state.emit(layer)
    return LayeredSolution(tuple(layers))


# --- mx-closed instances ---------------------------------------------------

def layer_system(conjuncts: Sequence[MinAffineForm], remaining: Sequence[str],
                 pin_levels: Sequence[FrozenSet[str]] = (), include_bottom: bool = False) -> GF2System:
    """
    GF(2) system over the indicator bits of a candidate bottom layer.

    Every conjunct contributes the parity checks of its linear part, so the
    indicator restricted to the scope stays in {t ^ 1...1 : t in T} + {0}.
    Pinned variables are forced to 0, except the lowest pinned level which is
    forced to 1 when `include_bottom` is set.
    """
    index = {var: i for i, var in enumerate(remaining)}
    rows, rhs = [], []
    for form in conjuncts:
        checks = parity_check(form.T)
        for row in checks.rows:
            packed = 0
            for j, var in enumerate(form.scope):
                if (row >> j) & 1:
                    packed |= 1 << index[var]
            rows.append(packed)
            rhs.append(0)
    for level_no, level in enumerate(pin_levels):
        bit = 1 if include_bottom and level_no == 0 else 0
        for var in sorted(level):
            if var in index:
                rows.append(1 << index[var])
                rhs.append(bit)
    return GF2System(len(remaining), tuple(rows), tuple(rhs))


def solve_mx_csp(csp: MxCSP, pin: Optional[PinnedOrder] = None) -> Optional[LayeredSolution]:
    """
    Layered GF(2) solver for conjunctions of min-affine formulas.

    Returns:
        LayeredSolution realizing the pin exactly, or None when unsatisfiable
    """
    _check_pin(csp.variables, pin)
    conjuncts = []
    for form in csp.conjuncts:
        if form.scope:
            conjuncts.append(form)
        elif not form.T.members:
            return None
    remaining = list(csp.variables)
    pinned_levels = list(pin.levels) if pin else []
    layers = []

    while remaining:
        free_only = solve_gf2(layer_system(conjuncts, remaining, pinned_levels))
        bits = None
        if free_only is not None and free_only.kernel:
            bits = free_only.kernel[0]
        elif pinned_levels:
            with_bottom = solve_gf2(layer_system(conjuncts, remaining, pinned_levels, include_bottom=True))
            if with_bottom is not None:
                bits = with_bottom.particular
                pinned_levels.pop(0)
        if bits is None:
            logger.debug(f"mx solver stuck with {len(remaining)} variables and {len(conjuncts)} conjuncts")
            return None
        layer = frozenset(var for var, bit in zip(remaining, bits.bits) if bit)
        layers.append(layer)
        remaining = [var for var in remaining if var not in layer]
        conjuncts = [f for f in conjuncts if not layer.intersection(f.scope)]
        logger.debug(f"mx layer {len(layers) - 1}: {sorted(layer)}")
    return LayeredSolution(tuple(layers))


# --- engines ---------------------------------------------------------------

def _rename_forms(forms: Sequence, mapping: Mapping[str, str]) -> List:
    renamed = []
    for form in forms:
        if isinstance(form, MinClause):
            renamed.append(MinClause(mapping[form.head],
                                     tuple((op, mapping[b]) for op, b in form.literals), form.dual))
        else:
            renamed.append(MinAffineForm(tuple(mapping[v] for v in form.scope), form.T, form.dual))
    return renamed


class CSPSolver:
    """Compiles constraints into one engine's native form and solves them."""

    def __init__(self, engine: str = 'min'):
        if engine not in ENGINES:
            raise ValueError(f"unknown engine '{engine}', expected one of {', '.join(ENGINES)}")
        self.engine = engine
        self.base = 'min' if engine in ('min', 'max') else 'mx'
        self.dual = engine in ('max', 'dual-mx')
        self._forms_cache: Dict[TemporalRelation, Tuple] = {}
        self.stats = {
            'compiled_constraints': 0,
            'solves': 0,
            'pinned_solves': 0,
            'unsat': 0,
        }

    def _native_forms(self, relation: TemporalRelation, label: str) -> Tuple:
        if relation not in self._forms_cache:
            target = dualize(relation) if self.dual else relation
            names = default_names(relation.arity)
            synthesize = min_clause_form if self.base == 'min' else min_affine_form
            forms = synthesize(target, names)
            if forms is None:
                raise LanguageNotSupported(f"relation {label or relation} is not preserved by {self.engine}")
            self._forms_cache[relation] = forms
        return self._forms_cache[relation]

    def compile_constraint(self, constraint: Constraint) -> List:
        """Native forms for one constraint; repeated arguments are identified first."""
        distinct = first_appearance(constraint.args)
        mapping = [distinct.index(a) for a in constraint.args]
        relation = constraint.relation
        if len(distinct) != len(constraint.args):
            relation = identify_coordinates(relation, mapping)
        forms = self._native_forms(relation, constraint.label)
        self.stats['compiled_constraints'] += 1
        return _rename_forms(forms, dict(zip(default_names(len(distinct)), distinct)))

    def compile(self, instance: CSPInstance) -> NativeCSP:
        forms = [f for c in instance.constraints for f in self.compile_constraint(c)]
        return self.native(instance.variables, forms)

    def native(self, variables: Sequence[str], forms: Sequence) -> NativeCSP:
        if self.base == 'min':
            clauses = [normalize_clause(f.head, f.literals) for f in forms]
            return MinCSP(tuple(variables), tuple(c for c in clauses if c is not None))
        return MxCSP(tuple(variables), tuple(forms))

    def extend(self, csp: NativeCSP, forms: Sequence) -> NativeCSP:
        return csp.extended(self.native(csp.variables, forms).forms)

    def less_than(self, smaller: str, larger: str) -> List:
        """Native forms of smaller < larger."""
        constraint = Constraint(LESS_THAN, (smaller, larger), f"{smaller} < {larger}", comparison=True)
        return self.compile_constraint(constraint)

    def solve_native(self, csp: NativeCSP, pin: Optional[PinnedOrder] = None) -> Optional[LayeredSolution]:
        """Solve a compiled instance; pins and layers are given in the original order."""
        self.stats['solves'] += 1
        if pin is not None:
            self.stats['pinned_solves'] += 1
        native_pin = pin.reversed() if (pin is not None and self.dual) else pin
        if self.base == 'min':
            solution = solve_min_csp(csp, native_pin)
        else:
            solution = solve_mx_csp(csp, native_pin)
        if solution is None:
            self.stats['unsat'] += 1
            return None
        return solution.reversed() if self.dual else solution

    def solve(self, instance: CSPInstance, pin: Optional[PinnedOrder] = None) -> Optional[LayeredSolution]:
        return self.solve_native(self.compile(instance), pin)


def select_engine(relations: Iterable[TemporalRelation]) -> str:
    """
    First engine among min, mx, max, dual-mx whose operation preserves every
    relation.

    Raises:
        LanguageNotSupported: if no single engine covers all relations
    """
    relations = list(dict.fromkeys(relations))
    for engine in ENGINES:
        op = ENGINE_OPERATION[engine]
        if all(preserves(op, r).closed for r in relations):
            logger.info(f"auto engine selected: {engine}")
            return engine
    raise LanguageNotSupported("the constraint relations are not all preserved by one of min, mx, max, dual-mx")


def solve_csp(instance: CSPInstance, engine: str = 'auto',
              pin: Optional[PinnedOrder] = None) -> Tuple[str, Optional[LayeredSolution]]:
    """
    Convenience function: pick an engine (or use the given one) and solve.

    Returns:
        (engine name, LayeredSolution or None for UNSAT)
    """
    if engine == 'auto':
        engine = select_engine(c.relation for c in instance.constraints)
    solver = CSPSolver(engine)
    return engine, solver.solve(instance, pin)


# --- brute-force oracle ----------------------------------------------------

def brute_csp(variables: Sequence[str], constraints: Sequence,
              pin: Optional[PinnedOrder] = None) -> Optional[Dict[str, Rational]]:
    """
    Enumerate every weak order of the variables; return the first assignment
    that realizes the pin and satisfies every constraint (anything with a
    `holds(values)` method), or None.

    Raises:
        OracleCapExceeded: above BRUTE_CSP_VAR_CAP variables
    """
    names = tuple(variables)
    if len(names) > BRUTE_CSP_VAR_CAP:
        raise OracleCapExceeded(f"brute-force CSP is capped at {BRUTE_CSP_VAR_CAP} variables, got {len(names)}")
    _check_pin(names, pin)
    for orbit in enumerate_weak_orders(len(names)):
        values = dict(zip(names, representative(orbit)))
        if pin is not None and not pin.realized_by(values):
            continue
        if all(c.holds(values) for c in constraints):
            return values
    return None
