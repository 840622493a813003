"""
Command-line entry point for the temporal constraint toolkit.

    check-poly   decide whether an operation preserves a relation
    classify     polymorphism profile of a relation
    normalize    print a relation's normal form
    solve        decide a CSP or QCSP instance file
    fuzz         differential fuzzing against the brute-force oracles
    paper-facts  run the fixed fact suite

Exit codes: 0 success, 1 semantic negative (NOT CLOSED, UNSAT, FALSE,
mismatch, failed fact), 2 usage or input error.
"""

import argparse
import logging
import sys
from typing import Iterable, List, Optional, Sequence, Tuple

import pandas as pd

from csp_engine import ENGINES, brute_csp, solve_csp
from formula_parser import parse_formula, relation_of_formula
from fuzz_harness import MODES, FuzzConfig, run_fuzz
from instance_loader import CSPInstance, load_document, parse_instance
from normal_forms import NORMAL_FORMS, MinAffineForm, format_conjunction
from fact_suite import all_passed, run_fact_suite
from polymorphisms import Operation, classify, preserves
from qcsp_engine import brute_qcsp, solve_qcsp
from solver_config import DEFAULT_SEED, FUZZ_WORKERS, LOG_FILE
from solver_errors import InstanceError, TemporalSolverError
from temporal_model import TemporalRelation

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2


def setup_logging(log_file: Optional[str] = None, verbose: bool = False):
    """Set up logging configuration; stdout is left to command output."""
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def emit(records: Iterable[Tuple[str, object]], fmt: str):
    """Print key/value records: `key=value` lines, or `key: value` in text mode."""
    for key, value in records:
        print(f"{key}={value}" if fmt == 'structured' else f"{key}: {value}")


def emit_frame(frame: pd.DataFrame, fmt: str, prefix: str = 'row'):
    if fmt == 'structured':
        for _, row in frame.iterrows():
            print(' '.join(f"{col}={row[col]}" for col in frame.columns))
    elif frame.empty:
        print(f"(no {prefix}s)")
    else:
        print(frame.to_string(index=False))


def resolve_relation(args) -> Tuple[Tuple[str, ...], TemporalRelation, str]:
    """(variables, relation, label) from FILE NAME or --formula TEXT."""
    if args.formula is not None:
        formula = parse_formula(args.formula)
        return formula.variables, relation_of_formula(formula), args.formula
    if not args.file or not args.name:
        raise InstanceError("give FILE and NAME, or --formula")
    document = load_document(args.file)
    return document.relation_variables(args.name), document.relation(args.name), args.name


def cmd_check_poly(args) -> int:
    _, relation, label = resolve_relation(args)
    op = Operation(args.op)
    report = preserves(op, relation)
    logger.info(f"{op.value} on {label}: {'closed' if report.closed else 'not closed'}")
    if report.closed:
        if args.format == 'structured':
            emit([('relation', label), ('op', op.value), ('result', 'CLOSED')], 'structured')
        else:
            print('CLOSED')
        return EXIT_OK
    cx = report.counterexample
    t, t_prime = cx.pattern.witness_tuples()
    if args.format == 'structured':
        emit([('relation', label), ('op', op.value), ('result', 'NOT_CLOSED'),
              ('left', cx.left), ('right', cx.right), ('image', cx.image),
              ('t', ','.join(str(v) for v in t)), ('t_prime', ','.join(str(v) for v in t_prime))],
             'structured')
    else:
        print('NOT CLOSED')
        print(f"counterexample: {cx.describe()}")
    return EXIT_NEGATIVE


def cmd_classify(args) -> int:
    _, relation, label = resolve_relation(args)
    profile = classify(relation)
    frame = pd.DataFrame([(op.value, 'yes' if closed else 'no') for op, closed in profile.items()],
                         columns=['operation', 'preserves'])
    logger.info(f"classified {label}: {len(relation)} orbits")
    emit_frame(frame, args.format)
    return EXIT_OK


def cmd_normalize(args) -> int:
    variables, relation, label = resolve_relation(args)
    forms = NORMAL_FORMS[args.form](relation, variables)
    if forms is None:
        logger.info(f"{label} has no {args.form} normal form")
        if args.format == 'structured':
            emit([('relation', label), ('form', args.form), ('result', 'NOT_CLOSED')], 'structured')
        else:
            print('NOT CLOSED')
        return EXIT_NEGATIVE
    if args.format == 'structured':
        emit([('relation', label), ('form', args.form), ('result', 'OK'),
              ('formula', format_conjunction(forms))], 'structured')
        return EXIT_OK
    for form in forms:
        if isinstance(form, MinAffineForm):
            print(form.describe())
    print(format_conjunction(forms))
    return EXIT_OK


def _print_assignment(variables: Sequence[str], values, fmt: str):
    if fmt == 'structured':
        emit([(f"value.{v}", values[v]) for v in variables], 'structured')
    else:
        for v in variables:
            print(f"{v} = {values[v]}")


def cmd_solve(args) -> int:
    with open(args.file, encoding='utf-8') as f:
        instance = parse_instance(f.read())
    structured = args.format == 'structured'

    if isinstance(instance, CSPInstance):
        if args.engine == 'brute':
            engine, values = 'brute', brute_csp(instance.variables, instance.constraints)
        else:
            engine, solution = solve_csp(instance, args.engine)
            values = solution.values if solution is not None else None
        verdict = 'SAT' if values is not None else 'UNSAT'
        logger.info(f"CSP with {len(instance.variables)} variables: {verdict} (engine {engine})")
        if structured:
            emit([('engine', engine), ('result', verdict)], 'structured')
        else:
            print(verdict)
        if values is not None:
            _print_assignment(instance.variables, values, args.format)
        return EXIT_OK if values is not None else EXIT_NEGATIVE

    if args.engine == 'brute':
        engine, truth, trace = 'brute', brute_qcsp(instance), None
    else:
        truth, trace = solve_qcsp(instance, args.engine)
        engine = trace.engine
    verdict = 'TRUE' if truth else 'FALSE'
    logger.info(f"QCSP with {len(instance.variables)} variables: {verdict} (engine {engine})")
    if structured:
        emit([('engine', engine), ('result', verdict)], 'structured')
    else:
        print(verdict)
    if args.trace and trace is not None:
        for line in trace.lines():
            print(f"trace={line}" if structured else line)
    return EXIT_OK if truth else EXIT_NEGATIVE


def cmd_fuzz(args) -> int:
    engine = 'min' if args.engine is None else args.engine
    if engine == 'brute':
        raise InstanceError("fuzzing compares an engine with the oracle; --engine brute is not allowed")
    config = FuzzConfig(seed=args.seed, trials=args.trials, max_vars=args.max_vars,
                        max_constraints=args.max_constraints, engine=engine, mode=args.mode,
                        start=args.start, workers=args.workers)
    report = run_fuzz(config)
    if args.format == 'structured':
        c = report.config
        emit([('mode', c.mode), ('engine', c.engine), ('seed', c.seed), ('trials', len(report.results)),
              ('agree', report.agreed), ('mismatches', len(report.mismatches))], 'structured')
        for result in report.mismatches:
            emit([('mismatch', result.index), ('replay', report.replay_hint(result))], 'structured')
    else:
        emit_frame(report.verdict_counts(), 'text', prefix='trial')
        print(report.summary_line())
        for result in report.mismatches:
            print(f"mismatch in trial {result.index}: got {result.verdict}, oracle {result.expected}. "
                  f"{result.detail}")
            print(f"  replay: {report.replay_hint(result)}")
    return EXIT_OK if not report.mismatches else EXIT_NEGATIVE


def cmd_facts(args) -> int:
    report = run_fact_suite(args.filter)
    emit_frame(report, args.format, prefix='fact')
    passed = all_passed(report)
    if args.format != 'structured':
        print(f"{int((report['status'] == 'PASS').sum())}/{len(report)} facts pass")
    return EXIT_OK if passed else EXIT_NEGATIVE


def _global_options(parser: argparse.ArgumentParser, defaults: bool):
    """Global flags; sub-commands get copies without defaults so either position works."""
    default = (lambda value: value) if defaults else (lambda value: argparse.SUPPRESS)
    parser.add_argument('--engine', choices=list(ENGINES) + ['auto', 'brute'], default=default(None),
                        help='Solver engine (default: auto; min for fuzz)')
    parser.add_argument('--trace', action='store_true', default=default(False),
                        help='Print the per-level QCSP trace')
    parser.add_argument('--seed', type=int, default=default(DEFAULT_SEED),
                        help=f'Fuzz seed (default: {DEFAULT_SEED})')
    parser.add_argument('--format', choices=['text', 'structured'], default=default('text'),
                        help='Output format (default: text)')
    parser.add_argument('--log-file', default=default(LOG_FILE),
                        help='Also write the log to this file')
    parser.add_argument('-v', '--verbose', action='store_true', default=default(False),
                        help='Debug logging')


def _relation_arguments(parser: argparse.ArgumentParser):
    parser.add_argument('file', nargs='?', help='Instance file declaring the relation')
    parser.add_argument('name', nargs='?', help='Relation name')
    parser.add_argument('--formula', help='Relation given as a formula instead of FILE NAME')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Temporal CSP/QCSP toolkit over (Q, <)')
    _global_options(parser, defaults=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, defaults=False)
    sub = parser.add_subparsers(dest='command', required=True)

    check = sub.add_parser('check-poly', parents=[common], help='Check preservation by an operation')
    _relation_arguments(check)
    check.add_argument('--op', required=True, choices=[op.value for op in Operation])
    check.set_defaults(handler=cmd_check_poly)

    profile = sub.add_parser('classify', parents=[common], help='Polymorphism profile of a relation')
    _relation_arguments(profile)
    profile.set_defaults(handler=cmd_classify)

    normalize = sub.add_parser('normalize', parents=[common], help='Synthesize a normal form')
    _relation_arguments(normalize)
    normalize.add_argument('--form', required=True, choices=list(NORMAL_FORMS))
    normalize.set_defaults(handler=cmd_normalize)

    solve = sub.add_parser('solve', parents=[common], help='Solve a CSP or QCSP instance file')
    solve.add_argument('file', help='Instance file')
    solve.set_defaults(handler=cmd_solve)

    fuzz = sub.add_parser('fuzz', parents=[common], help='Differential fuzzing against the oracles')
    fuzz.add_argument('--mode', choices=MODES, default='csp')
    fuzz.add_argument('--trials', type=int, default=100)
    fuzz.add_argument('--start', type=int, default=0, help='Index of the first trial')
    fuzz.add_argument('--max-vars', type=int, default=6)
    fuzz.add_argument('--max-constraints', type=int, default=12)
    fuzz.add_argument('--workers', type=int, default=FUZZ_WORKERS)
    fuzz.set_defaults(handler=cmd_fuzz)

    facts = sub.add_parser('paper-facts', parents=[common], help='Run the fixed fact suite')
    facts.add_argument('--filter', help='Only facts whose name contains this text')
    facts.set_defaults(handler=cmd_facts)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main function with command line interface."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_file, args.verbose)
    if args.engine is None and args.command != 'fuzz':
        args.engine = 'auto'

    logger.info(f"Running command: {args.command}")
    try:
        return args.handler(args)
    except (TemporalSolverError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}")
        return EXIT_ERROR
    except OSError as e:
        logger.error(f"Could not read input: {e}")
        print(f"error: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
