"""
Fixed regression suite of known facts about the example relations:
which operations preserve them, the counterexamples that break the others,
and the normal forms they have.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import pandas as pd

from formula_parser import parse_formula, relation_of_formula
from normal_forms import format_conjunction, min_affine_form, min_clause_form, relation_of_normal_form
from polymorphisms import Operation, preserves
from temporal_model import TemporalRelation, WeakOrder, ordered_bell

logger = logging.getLogger(__name__)

FIXTURES: Dict[str, str] = {
    'leq': 'x <= y',
    'lt': 'x < y',
    'neq': 'x != y',
    'U': '(x = y & y < z) | (x = z & z < y) | (x = y & y = z)',
    'X': '(x = y & y < z) | (x = z & z < y) | (y = z & y < x)',
    'gt_or_gt': 'x1 > x2 | x1 > x3',
    'pp_not_min': '(x = y & y < z) | (x > y & y = z)',
}

U_MIN_CLAUSE_FORM = '(x >= y | x >= z) & (y >= x) & (z >= x)'
X_MIN_TUPLES = '{001,010,100}'


@dataclass(frozen=True)
class Fact:
    name: str
    description: str
    check: Callable[['FactSuite'], Tuple[bool, str]]


def _closed(op: Operation, fixture: str, expected: bool):
    def check(suite: 'FactSuite') -> Tuple[bool, str]:
        report = preserves(op, suite.relation(fixture))
        if report.closed:
            return expected, 'closed'
        return not expected, report.counterexample.describe()
    return check


def _min_neq_counterexample(suite: 'FactSuite') -> Tuple[bool, str]:
    report = preserves(Operation.MIN, suite.relation('neq'))
    if report.closed:
        return False, 'min unexpectedly preserves !='
    cx = report.counterexample
    pair = {cx.left.ranks, cx.right.ranks}
    passed = pair == {(0, 1), (1, 0)} and cx.image == WeakOrder((0, 0))
    return passed, f"{cx.left} and {cx.right} -> {cx.image}"


def _u_min_clause_form(suite: 'FactSuite') -> Tuple[bool, str]:
    relation = suite.relation('U')
    names = suite.variables('U')
    form = min_clause_form(relation, names)
    if form is None:
        return False, 'no min-clause form'
    printed = format_conjunction(form)
    defines = relation_of_normal_form(form, names) == relation
    return printed == U_MIN_CLAUSE_FORM and defines, printed


def _x_min_affine_form(suite: 'FactSuite') -> Tuple[bool, str]:
    relation = suite.relation('X')
    forms = min_affine_form(relation, suite.variables('X'))
    if forms is None:
        return False, 'no min-affine form'
    detail = '; '.join(f.describe() for f in forms)
    passed = len(forms) == 1 and forms[0].scope == ('x', 'y', 'z') and str(forms[0].T) == X_MIN_TUPLES
    return passed, detail


def _ordered_bell(suite: 'FactSuite') -> Tuple[bool, str]:
    counts = [ordered_bell(k) for k in range(5)]
    return counts == [1, 1, 3, 13, 75], ', '.join(str(c) for c in counts)


FACTS: List[Fact] = [
    Fact('min-preserves-leq', 'min preserves <=', _closed(Operation.MIN, 'leq', True)),
    Fact('min-preserves-lt', 'min preserves <', _closed(Operation.MIN, 'lt', True)),
    Fact('min-preserves-U', 'min preserves U', _closed(Operation.MIN, 'U', True)),
    Fact('min-preserves-gt-or-gt', 'min preserves x1>x2 | x1>x3', _closed(Operation.MIN, 'gt_or_gt', True)),
    Fact('min-violates-neq', 'min maps (0,1),(1,0) in != to (0,0)', _min_neq_counterexample),
    Fact('mx-violates-leq', 'mx does not preserve <=', _closed(Operation.MX, 'leq', False)),
    Fact('mx-violates-U', 'mx does not preserve U', _closed(Operation.MX, 'U', False)),
    Fact('mx-preserves-X', 'mx preserves X', _closed(Operation.MX, 'X', True)),
    Fact('mx-preserves-lt', 'mx preserves <', _closed(Operation.MX, 'lt', True)),
    Fact('pp-preserves-pp-not-min', 'pp preserves (x=y & y<z) | (x>y & y=z)',
         _closed(Operation.PP, 'pp_not_min', True)),
    Fact('min-violates-pp-not-min', 'min does not preserve (x=y & y<z) | (x>y & y=z)',
         _closed(Operation.MIN, 'pp_not_min', False)),
    Fact('mx-violates-pp-not-min', 'mx does not preserve (x=y & y<z) | (x>y & y=z)',
         _closed(Operation.MX, 'pp_not_min', False)),
    Fact('U-min-clause-form', 'U is defined by ' + U_MIN_CLAUSE_FORM, _u_min_clause_form),
    Fact('X-min-affine-form', 'X is the min-affine formula with T = ' + X_MIN_TUPLES, _x_min_affine_form),
    Fact('ordered-bell', 'orbit counts 1, 1, 3, 13, 75 for arity 0..4', _ordered_bell),
]


class FactSuite:
    """Runs the facts against a fixture table (replaceable for self-tests)."""

    def __init__(self, fixtures: Optional[Mapping[str, str]] = None):
        self.fixtures = dict(FIXTURES)
        if fixtures:
            self.fixtures.update(fixtures)
        self._relations: Dict[str, Tuple[Tuple[str, ...], TemporalRelation]] = {}
        self.stats = {'run': 0, 'passed': 0, 'failed': []}

    def _parsed(self, name: str) -> Tuple[Tuple[str, ...], TemporalRelation]:
        if name not in self._relations:
            formula = parse_formula(self.fixtures[name])
            self._relations[name] = (formula.variables, relation_of_formula(formula))
        return self._relations[name]

    def relation(self, name: str) -> TemporalRelation:
        return self._parsed(name)[1]

    def variables(self, name: str) -> Tuple[str, ...]:
        return self._parsed(name)[0]

    def run(self, name_filter: Optional[str] = None) -> pd.DataFrame:
        """
        Run every fact whose name contains `name_filter` (all when None).

        Returns:
            DataFrame with columns fact, status, detail
        """
        rows = []
        for fact in FACTS:
            if name_filter is not None and name_filter not in fact.name:
                continue
            passed, detail = fact.check(self)
            self.stats['run'] += 1
            if passed:
                self.stats['passed'] += 1
            else:
                self.stats['failed'].append(fact.name)
            logger.debug(f"{fact.name}: {'PASS' if passed else 'FAIL'} ({detail})")
            rows.append((fact.name, 'PASS' if passed else 'FAIL', detail))
        self._log_suite_stats()
        return pd.DataFrame(rows, columns=['fact', 'status', 'detail'])

    def _log_suite_stats(self):
        logger.info(f"Facts run: {self.stats['run']}, passed: {self.stats['passed']}")
        for name in self.stats['failed']:
            logger.warning(f"  - failed: {name}")


def run_fact_suite(name_filter: Optional[str] = None,
                    fixtures: Optional[Mapping[str, str]] = None) -> pd.DataFrame:
    """Convenience function wrapping FactSuite."""
    return FactSuite(fixtures).run(name_filter)


def all_passed(report: pd.DataFrame) -> bool:
    return bool((report['status'] == 'PASS').all()) if not report.empty else True
