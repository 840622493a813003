"""
Decision procedure for quantified temporal CSPs over min-, mx-, max- or
dual-mx-closed languages.

The prefix is first padded to the alternating shape
forall y1 exists x1 ... forall yn exists xn. Working from the innermost
level outwards, the universal y_i is replaced by an existential that must
lie above every earlier variable:

    Psi_n      = kernel
    Phi'_i     = Psi_i & x_j < y_i & y_j < y_i      (j < i)
    Psi_{i-1}  = Phi'_i

At each level Phi'_i must be satisfiable, and the earlier variables of its
witness must satisfy forall y_i exists x_i Psi_i. The latter is checked one
region of y_i at a time, each region being a single pinned CSP solve.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from csp_engine import LESS_THAN, CSPSolver, NativeCSP, PinnedOrder, select_engine
from instance_loader import CSPInstance, Constraint, QCSPInstance, Quantifier
from solver_config import BRUTE_QCSP_VAR_CAP
from solver_errors import OracleCapExceeded
from temporal_model import Rational

logger = logging.getLogger(__name__)

DUAL_BASE = {'max': 'min', 'dual-mx': 'mx'}


@dataclass
class LevelRecord:
    level: int
    constraint_count: int
    satisfiable: bool
    distinct_values: int = 0
    regions_checked: int = 0
    failed_region: Optional[int] = None

    @property
    def universal_ok(self) -> bool:
        return self.satisfiable and self.failed_region is None

    def line(self) -> str:
        sat = 'YES' if self.satisfiable else 'NO'
        if not self.satisfiable:
            forall = 'SKIPPED'
        elif self.failed_region is None:
            forall = 'OK'
        else:
            forall = f"FAIL[region {self.failed_region}]"
        return f"level {self.level}: sat={sat}, |w|={self.distinct_values}, forall={forall}"


@dataclass
class SolveTrace:
    """Per-level record of a QCSP run, innermost level first."""

    engine: str
    levels: List[LevelRecord] = field(default_factory=list)

    def lines(self) -> List[str]:
        return [record.line() for record in self.levels]

    def failure(self) -> Optional[LevelRecord]:
        for record in self.levels:
            if not record.universal_ok:
                return record
        return None


@dataclass(frozen=True)
class UniversalCheck:
    holds: bool
    regions: int
    failed_region: Optional[int] = None


def _fresh_name(base: str, taken: set) -> str:
    n = 1
    while f"{base}{n}" in taken:
        n += 1
    name = f"{base}{n}"
    taken.add(name)
    return name


def normalize_prefix(q: QCSPInstance) -> QCSPInstance:
    """Pad the prefix with fresh vacuous variables until it alternates forall/exists."""
    taken = set(q.variables)
    prefix = []
    expected = Quantifier.FORALL
    for quantifier, var in q.prefix:
        if quantifier != expected:
            prefix.append((expected, _fresh_name('_u' if expected == Quantifier.FORALL else '_e', taken)))
        prefix.append((quantifier, var))
        expected = Quantifier.EXISTS if quantifier == Quantifier.FORALL else Quantifier.FORALL
    if expected == Quantifier.EXISTS:
        prefix.append((Quantifier.EXISTS, _fresh_name('_e', taken)))
    return QCSPInstance(tuple(prefix), q.constraints)


def level_pairs(q: QCSPInstance) -> List[Tuple[str, str]]:
    """(y_i, x_i) for an alternating prefix."""
    names = q.variables
    for position, (quantifier, var) in enumerate(q.prefix):
        expected = Quantifier.FORALL if position % 2 == 0 else Quantifier.EXISTS
        if quantifier != expected:
            raise ValueError(f"prefix is not alternating at '{var}'")
    if len(names) % 2:
        raise ValueError("alternating prefix must end with an existential")
    return [(names[i], names[i + 1]) for i in range(0, len(names), 2)]


def dualize_instance(q: QCSPInstance) -> QCSPInstance:
    """Reverse the order: same prefix, every constraint dualized. Truth is unchanged."""
    return QCSPInstance(q.prefix, tuple(c.dualized() for c in q.constraints))


def eliminate_universal(phi: CSPInstance, y: str, free: Sequence[str]) -> CSPInstance:
    """phi & z < y for every z in `free`."""
    extra = tuple(Constraint(LESS_THAN, (z, y), f"{z} < {y}", comparison=True) for z in free)
    return CSPInstance(phi.variables, phi.constraints + extra)


def earlier_variables(pairs: Sequence[Tuple[str, str]], level: int) -> List[str]:
    """x_1..x_{i-1} followed by y_1..y_{i-1}, for 1-based level i."""
    return [x for _, x in pairs[:level - 1]] + [y for y, _ in pairs[:level - 1]]


def build_phi_prime(psi: CSPInstance, level: int, pairs: Sequence[Tuple[str, str]]) -> CSPInstance:
    """Psi_i plus x_j < y_i and y_j < y_i for every j < i."""
    if not 1 <= level <= len(pairs):
        raise ValueError(f"level {level} outside 1..{len(pairs)}")
    y, _ = pairs[level - 1]
    return eliminate_universal(psi, y, earlier_variables(pairs, level))


def region_representatives(w: Mapping[str, Rational], y: str) -> List[PinnedOrder]:
    """
    The 2d+1 order types of (w, y) where d is the number of distinct values
    of w: region 2j puts y strictly below the j-th value (2d above all),
    region 2j+1 puts y equal to it.
    """
    base = PinnedOrder.from_values(w).levels
    regions = []
    for r in range(2 * len(base) + 1):
        j, equal = divmod(r, 2)
        if equal:
            levels = base[:j] + (base[j] | {y},) + base[j + 1:]
        else:
            levels = base[:j] + (frozenset({y}),) + base[j:]
        regions.append(PinnedOrder(levels))
    return regions


class QCSPSolver:
    """Runs the level loop with one CSP engine, recording a SolveTrace."""

    def __init__(self, engine: str = 'auto'):
        self.engine = engine
        self.stats = {
            'levels': 0,
            'csp_solves': 0,
            'pinned_solves': 0,
        }

    def _check_universal(self, solver: CSPSolver, psi: NativeCSP,
                         w: Mapping[str, Rational], y: str) -> UniversalCheck:
        regions = region_representatives(w, y)
        for r, pin in enumerate(regions):
            self.stats['pinned_solves'] += 1
            if solver.solve_native(psi, pin) is None:
                logger.debug(f"universal check for {y} fails in region {r}: {pin}")
                return UniversalCheck(False, r + 1, r)
        return UniversalCheck(True, len(regions))

    def solve(self, q: QCSPInstance) -> Tuple[bool, SolveTrace]:
        """
        Decide the instance.

        Returns:
            (truth value, SolveTrace)

        Raises:
            LanguageNotSupported: when no engine preserves every relation
        """
        truth, trace = self._run_levels(q)
        self._log_solve_stats()
        return truth, trace

    def _run_levels(self, q: QCSPInstance) -> Tuple[bool, SolveTrace]:
        engine = self.engine
        if engine == 'auto':
            engine = select_engine(c.relation for c in q.constraints)
        trace = SolveTrace(engine)
        if engine in DUAL_BASE:
            # universals must go below the earlier variables in a max-closed
            # language, so the whole instance is solved in the negated order
            q = dualize_instance(q)
            engine = DUAL_BASE[engine]
        solver = CSPSolver(engine)

        normalized = normalize_prefix(q)
        pairs = level_pairs(normalized)
        logger.info(f"QCSP with {len(pairs)} levels, {len(q.constraints)} constraints, engine {engine}")

        psi = normalized.kernel()
        psi_native = solver.compile(psi)
        for level in range(len(pairs), 0, -1):
            self.stats['levels'] += 1
            y, _ = pairs[level - 1]
            earlier = earlier_variables(pairs, level)
            phi_prime = build_phi_prime(psi, level, pairs)
            extra = [f for z in earlier for f in solver.less_than(z, y)]
            phi_native = solver.extend(psi_native, extra)

            self.stats['csp_solves'] += 1
            witness = solver.solve_native(phi_native)
            record = LevelRecord(level, len(phi_prime.constraints), witness is not None)
            trace.levels.append(record)
            if witness is None:
                logger.info(f"level {level}: Phi' is unsatisfiable")
                return False, trace

            values = witness.values
            w = {var: values[var] for var in earlier}
            record.distinct_values = len(set(w.values()))
            check = self._check_universal(solver, psi_native, w, y)
            record.regions_checked = check.regions
            record.failed_region = check.failed_region
            logger.debug(record.line())
            if not check.holds:
                logger.info(f"level {level}: universal check fails in region {check.failed_region}")
                return False, trace

            psi, psi_native = phi_prime, phi_native
        return True, trace

    def _log_solve_stats(self):
        logger.info("=== QCSP STATISTICS ===")
        logger.info(f"Levels processed: {self.stats['levels']}")
        logger.info(f"CSP solves: {self.stats['csp_solves']}")
        logger.info(f"Pinned solves: {self.stats['pinned_solves']}")


def solve_qcsp(q: QCSPInstance, engine: str = 'auto') -> Tuple[bool, SolveTrace]:
    """Convenience function wrapping QCSPSolver."""
    return QCSPSolver(engine).solve(q)


def universal_check(w: Mapping[str, Rational], psi: CSPInstance, y: str, engine: str = 'min') -> bool:
    """True iff every region of y relative to w extends to a solution of psi."""
    solver = CSPSolver(engine)
    return QCSPSolver(engine)._check_universal(solver, solver.compile(psi), w, y).holds


# --- brute-force oracle ----------------------------------------------------

def _region_values(current: Sequence[Rational]) -> List[Rational]:
    """One representative value per region relative to the values so far."""
    if not current:
        return [Rational(0)]
    ordered = sorted(set(current))
    values = [ordered[0] - 1]
    for low, high in zip(ordered, ordered[1:]):
        values += [low, (low + high) / 2]
    values += [ordered[-1], ordered[-1] + 1]
    return values


def brute_qcsp(q: QCSPInstance) -> bool:
    """
    Game-tree evaluation over region representatives.

    Raises:
        OracleCapExceeded: above BRUTE_QCSP_VAR_CAP variables
    """
    if len(q.prefix) > BRUTE_QCSP_VAR_CAP:
        raise OracleCapExceeded(f"brute-force QCSP is capped at {BRUTE_QCSP_VAR_CAP} variables, "
                                f"got {len(q.prefix)}")
    prefix = q.prefix
    constraints = q.constraints

    def play(position: int, values: Dict[str, Rational]) -> bool:
        if position == len(prefix):
            return all(c.holds(values) for c in constraints)
        quantifier, var = prefix[position]
        outcomes = (play(position + 1, {**values, var: v}) for v in _region_values(list(values.values())))
        return any(outcomes) if quantifier == Quantifier.EXISTS else all(outcomes)

    return play(0, {})
