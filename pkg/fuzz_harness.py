"""
Seeded random generators and differential fuzzing of the engines against
the brute-force oracles.

Every trial draws from its own numpy Generator seeded by
SeedSequence(seed, spawn_key=(index,)), which is exactly the index-th child
of SeedSequence(seed).spawn(...). A single trial can therefore be replayed
from (seed, index) alone, and reports do not depend on the worker count.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import repeat
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from csp_engine import ENGINES, PinnedOrder, brute_csp, solve_csp
from gf2_affine import BitTuple, BoolRelation, ones_mask, span
from instance_loader import CSPInstance, Constraint, QCSPInstance, Quantifier, parse_instance
from normal_forms import (GE, GT, MinAffineForm, MinClause, PPClause, default_names, min_affine_form,
                          min_clause_form, pp_clause_form, relation_of_normal_form)
from polymorphisms import Operation, preserves
from qcsp_engine import brute_qcsp, solve_qcsp
from solver_config import BRUTE_CSP_VAR_CAP, BRUTE_QCSP_VAR_CAP, DEFAULT_SEED, FUZZ_WORKERS
from temporal_model import TemporalRelation, all_weak_orders, dualize

logger = logging.getLogger(__name__)

MODES = ('csp', 'qcsp', 'normal-form', 'preserve')
FUZZ_ENGINES = ENGINES + ('auto',)

# (max variables, max constraints) the oracles can afford per mode
MODE_CAPS = {
    'csp': (min(6, BRUTE_CSP_VAR_CAP), 12),
    'qcsp': (min(6, BRUTE_QCSP_VAR_CAP), 8),
    'normal-form': (4, 1),
    'preserve': (4, 3),
}
LOCAL_ARITY = 3


@dataclass(frozen=True)
class FuzzConfig:
    seed: int = DEFAULT_SEED
    trials: int = 100
    max_vars: int = 6
    max_constraints: int = 12
    engine: str = 'min'
    mode: str = 'csp'
    start: int = 0
    workers: int = FUZZ_WORKERS

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown fuzz mode '{self.mode}', expected one of {', '.join(MODES)}")
        if self.engine not in FUZZ_ENGINES:
            raise ValueError(f"unknown engine '{self.engine}' for fuzzing")
        if self.seed < 0 or self.trials < 0 or self.start < 0:
            raise ValueError("seed, trials and start must be non-negative")
        if self.max_vars < 1:
            raise ValueError("max_vars must be at least 1")

    def clamped(self) -> 'FuzzConfig':
        """Copy with the caps reduced to what the mode's oracle can handle."""
        var_cap, constraint_cap = MODE_CAPS[self.mode]
        config = self
        if self.max_vars > var_cap:
            logger.warning(f"max_vars {self.max_vars} clamped to {var_cap} for mode {self.mode}")
            config = replace(config, max_vars=var_cap)
        if self.max_constraints > constraint_cap:
            logger.warning(f"max_constraints {self.max_constraints} clamped to {constraint_cap} "
                           f"for mode {self.mode}")
            config = replace(config, max_constraints=constraint_cap)
        return config


@dataclass(frozen=True)
class TrialResult:
    index: int
    agree: bool
    verdict: str
    expected: str
    detail: str = ''


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _pick(rng: np.random.Generator, items: Sequence):
    return items[int(rng.integers(len(items)))]


def _count(rng: np.random.Generator, low: int, high: int) -> int:
    """Uniform integer in [low, high]."""
    return int(rng.integers(low, high + 1))


# --- random normal forms and relations --------------------------------------

def random_min_clauses(rng: np.random.Generator, names: Sequence[str], count: int) -> List[MinClause]:
    clauses = []
    for _ in range(count):
        head = _pick(rng, names)
        bodies = [v for v in names if v != head]
        literals = tuple((_pick(rng, (GE, GT)), body) for body in bodies if rng.random() < 0.5)
        if literals or rng.random() < 0.05:
            clauses.append(MinClause(head, literals))
    return clauses


def random_pp_clauses(rng: np.random.Generator, names: Sequence[str], count: int) -> List[PPClause]:
    clauses = []
    for _ in range(count):
        head = _pick(rng, names)
        diseq, geq = [], []
        for body in names:
            if body == head:
                continue
            roll = rng.random()
            if roll < 0.3:
                diseq.append(body)
            elif roll < 0.6:
                geq.append(body)
        if diseq or geq:
            clauses.append(PPClause(head, tuple(diseq), tuple(geq)))
    return clauses


def random_near_affine(rng: np.random.Generator, width: int) -> BoolRelation:
    """1...1 + a random subspace, with 1...1 removed."""
    generators = [int(rng.integers(1 << width)) for _ in range(_count(rng, 0, width))]
    ones = ones_mask(width)
    return BoolRelation(width, frozenset(BitTuple(width, v ^ ones) for v in span(generators))).without_ones()


def random_min_affine_forms(rng: np.random.Generator, names: Sequence[str], count: int) -> List[MinAffineForm]:
    forms = []
    for _ in range(count):
        scope = tuple(v for v in names if rng.random() < 0.7) or (_pick(rng, names),)
        forms.append(MinAffineForm(scope, random_near_affine(rng, len(scope))))
    return forms


FORM_GENERATORS: Dict[str, Callable] = {
    'min': random_min_clauses,
    'pp': random_pp_clauses,
    'mx': random_min_affine_forms,
}


def random_closed_relation(rng: np.random.Generator, language: str, arity: int) -> TemporalRelation:
    """Relation of a random normal form; closed under the language's operation."""
    base = {'max': 'min', 'dual-mx': 'mx', 'dual-pp': 'pp'}.get(language, language)
    names = default_names(arity)
    forms = FORM_GENERATORS[base](rng, names, _count(rng, 1, 3))
    relation = relation_of_normal_form(forms, names)
    return dualize(relation) if base != language else relation


def random_relation(rng: np.random.Generator, arity: int) -> TemporalRelation:
    density = rng.random()
    return TemporalRelation(arity, tuple(w for w in all_weak_orders(arity) if rng.random() < density))


def random_constraints(rng: np.random.Generator, variables: Sequence[str], count: int,
                       language: str) -> List[Constraint]:
    constraints = []
    for k in range(count):
        arity = _count(rng, 1, min(LOCAL_ARITY, len(variables)))
        relation = random_closed_relation(rng, language, arity)
        if rng.random() < 0.2:
            args = tuple(_pick(rng, variables) for _ in range(arity))
        else:
            args = tuple(str(v) for v in rng.permutation(list(variables))[:arity])
        constraints.append(Constraint(relation, args, f"R{k}"))
    return constraints


def random_pin(rng: np.random.Generator, variables: Sequence[str]) -> Optional[PinnedOrder]:
    if rng.random() < 0.5:
        return None
    chosen = [v for v in variables if rng.random() < 0.5]
    if not chosen:
        return None
    return PinnedOrder.from_values({v: int(rng.integers(len(chosen))) for v in chosen})


def random_qcsp(rng: np.random.Generator, n_vars: int, n_constraints: int, language: str) -> QCSPInstance:
    variables = [f"v{i}" for i in range(n_vars)]
    prefix = tuple((_pick(rng, (Quantifier.FORALL, Quantifier.EXISTS)), v) for v in variables)
    return QCSPInstance(prefix, tuple(random_constraints(rng, variables, n_constraints, language)))


def chained_min_qcsp(blocks: int, n_constraints: int) -> QCSPInstance:
    """
    True instance 'forall y1 exists x1 ... forall yn exists xn' whose x's
    climb above every earlier value: x_i > y_i, x_i > x_(i-1), x_i >= y_(i-1),
    then x_i > y_(i-k) for k = 2, 3, ... until n_constraints atoms are used.
    """
    atoms = []
    for i in range(1, blocks + 1):
        atoms.append(f"x{i} > y{i}")
        if i > 1:
            atoms += [f"x{i} > x{i - 1}", f"x{i} >= y{i - 1}"]
    k = 2
    while len(atoms) < n_constraints and k < blocks:
        atoms += [f"x{i} > y{i - k}" for i in range(k + 1, blocks + 1)]
        k += 1
    prefix = ' '.join(f"forall y{i} exists x{i}" for i in range(1, blocks + 1))
    return parse_instance(f"qcsp {prefix} : " + ' & '.join(atoms[:n_constraints]))


# --- trials -----------------------------------------------------------------

def _language(rng: np.random.Generator, engine: str) -> str:
    return _pick(rng, ENGINES) if engine == 'auto' else engine


def _csp_trial(rng: np.random.Generator, config: FuzzConfig, index: int) -> TrialResult:
    variables = [f"v{i}" for i in range(_count(rng, 1, config.max_vars))]
    language = _language(rng, config.engine)
    constraints = random_constraints(rng, variables, _count(rng, 0, config.max_constraints), language)
    pin = random_pin(rng, variables)
    instance = CSPInstance.from_constraints(constraints, variables)

    _, solution = solve_csp(instance, config.engine, pin)
    oracle = brute_csp(variables, constraints, pin)
    verdict = 'SAT' if solution is not None else 'UNSAT'
    expected = 'SAT' if oracle is not None else 'UNSAT'
    detail = ''
    witness_ok = True
    if solution is not None:
        values = solution.values
        witness_ok = instance.holds(values) and (pin is None or pin.realized_by(values))
        if not witness_ok:
            detail = f"witness {solution} violates the instance"
    return TrialResult(index, verdict == expected and witness_ok, verdict, expected, detail)


def _qcsp_trial(rng: np.random.Generator, config: FuzzConfig, index: int) -> TrialResult:
    language = _language(rng, config.engine)
    q = random_qcsp(rng, _count(rng, 1, config.max_vars), _count(rng, 0, config.max_constraints), language)
    truth, trace = solve_qcsp(q, config.engine)
    expected = brute_qcsp(q)
    detail = '' if truth == expected else f"{q}: " + '; '.join(trace.lines())
    return TrialResult(index, truth == expected, str(truth).upper(), str(expected).upper(), detail)


NORMAL_FORM_CHECKS = (
    (Operation.MIN, min_clause_form),
    (Operation.PP, pp_clause_form),
    (Operation.MX, min_affine_form),
)


def _normal_form_trial(rng: np.random.Generator, config: FuzzConfig, index: int) -> TrialResult:
    arity = _count(rng, 1, config.max_vars)
    if rng.random() < 0.5:
        relation = random_relation(rng, arity)
    else:
        relation = random_closed_relation(rng, _pick(rng, ('min', 'pp', 'mx')), arity)
    names = default_names(arity)
    verdicts, expected, problems = [], [], []
    for op, synthesize in NORMAL_FORM_CHECKS:
        closed = preserves(op, relation).closed
        form = synthesize(relation, names)
        verdicts.append(f"{op.value}={'form' if form is not None else 'none'}")
        expected.append(f"{op.value}={'form' if closed else 'none'}")
        if form is not None and relation_of_normal_form(form, names) != relation:
            problems.append(f"{op.value} form does not define the relation")
    agree = verdicts == expected and not problems
    detail = '' if agree else f"relation {relation}: " + '; '.join(problems or verdicts)
    return TrialResult(index, agree, ','.join(verdicts), ','.join(expected), detail)


def _preserve_trial(rng: np.random.Generator, config: FuzzConfig, index: int) -> TrialResult:
    op = _pick(rng, list(Operation))
    relation = random_closed_relation(rng, op.value, _count(rng, 1, config.max_vars))
    closed = preserves(op, relation).closed
    mirrored = preserves(op.base if op.is_dual else _dual_of(op), dualize(relation)).closed
    agree = closed and mirrored
    detail = '' if agree else f"{op.value} on {relation}: closed={closed}, dual closed={mirrored}"
    return TrialResult(index, agree, 'CLOSED' if agree else 'OPEN', 'CLOSED', detail)


def _dual_of(op: Operation) -> Operation:
    return {Operation.MIN: Operation.MAX, Operation.MX: Operation.DUAL_MX, Operation.PP: Operation.DUAL_PP}[op]


TRIALS = {
    'csp': _csp_trial,
    'qcsp': _qcsp_trial,
    'normal-form': _normal_form_trial,
    'preserve': _preserve_trial,
}


def run_fuzz_trial(config: FuzzConfig, index: int) -> TrialResult:
    """Run one trial; deterministic given (config, index)."""
    return TRIALS[config.mode](trial_rng(config.seed, index), config, index)


@dataclass
class FuzzReport:
    config: FuzzConfig
    results: List[TrialResult] = field(default_factory=list)

    @property
    def agreed(self) -> int:
        return sum(1 for r in self.results if r.agree)

    @property
    def mismatches(self) -> List[TrialResult]:
        return [r for r in self.results if not r.agree]

    def summary_line(self) -> str:
        return f"{self.agreed}/{len(self.results)} agree"

    def to_frame(self) -> pd.DataFrame:
        columns = ['trial', 'agree', 'verdict', 'expected', 'detail']
        return pd.DataFrame([(r.index, r.agree, r.verdict, r.expected, r.detail) for r in self.results],
                            columns=columns)

    def verdict_counts(self) -> pd.DataFrame:
        frame = self.to_frame()
        if frame.empty:
            return pd.DataFrame(columns=['verdict', 'trials', 'agree'])
        grouped = frame.groupby('verdict').agg(trials=('trial', 'count'), agree=('agree', 'sum'))
        return grouped.reset_index()

    def replay_hint(self, result: TrialResult) -> str:
        c = self.config
        return (f"fuzz --mode {c.mode} --engine {c.engine} --seed {c.seed} --start {result.index} "
                f"--trials 1 --max-vars {c.max_vars} --max-constraints {c.max_constraints}")


class FuzzRunner:
    """Runs a batch of trials and collects statistics."""

    def __init__(self, config: FuzzConfig):
        self.config = config.clamped()
        self.stats = {
            'trials': 0,
            'agree': 0,
            'mismatches': [],
        }

    def run(self) -> FuzzReport:
        config = self.config
        indices = range(config.start, config.start + config.trials)
        logger.info(f"Fuzzing mode={config.mode} engine={config.engine} seed={config.seed} "
                    f"trials={config.trials} workers={config.workers}")
        if config.workers > 1 and config.trials > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as executor:
                results = list(executor.map(run_fuzz_trial, repeat(config), indices,
                                            chunksize=max(1, config.trials // (4 * config.workers))))
        else:
            results = [run_fuzz_trial(config, i) for i in indices]

        report = FuzzReport(config, results)
        self.stats['trials'] = len(results)
        self.stats['agree'] = report.agreed
        self.stats['mismatches'] = [r.index for r in report.mismatches]
        self._log_fuzz_stats()
        return report

    def _log_fuzz_stats(self):
        logger.info("=== FUZZ STATISTICS ===")
        logger.info(f"Trials run: {self.stats['trials']}")
        logger.info(f"Agreeing: {self.stats['agree']}")
        if self.stats['mismatches']:
            logger.warning(f"Mismatching trials: {self.stats['mismatches']}")


def run_fuzz(config: FuzzConfig) -> FuzzReport:
    """Convenience function wrapping FuzzRunner."""
    return FuzzRunner(config).run()
