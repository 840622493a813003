"""Tests for the layered min/mx solvers, engines and the brute-force oracle."""

import pytest

from csp_engine import (CSPSolver, MinCSP, MxCSP, PinnedOrder, brute_csp, is_valid_min_layer, layer_system,
                        max_free_set, normalize_clause, select_engine, solve_csp, solve_min_csp, solve_mx_csp)
from fuzz_harness import FuzzConfig, run_fuzz
from gf2_affine import BoolRelation
from instance_loader import parse_instance
from normal_forms import MinAffineForm, MinClause
from solver_errors import LanguageNotSupported, OracleCapExceeded

X_FORMULA = '(x = y & y < z) | (x = z & z < y) | (y = z & y < x)'
U_FORMULA = '(x = y & y < z) | (x = z & z < y) | (x = y & y = z)'
X_TUPLES = BoolRelation.from_strings(3, ['001', '010', '100'])
LT_TUPLES = BoolRelation.from_strings(2, ['01'])


@pytest.fixture
def tied_pair():
    """x = z below y, written as min-clauses."""
    return MinCSP(('x', 'y', 'z'), (
        MinClause('x', (('>=', 'z'),)),
        MinClause('z', (('>=', 'x'),)),
        MinClause('y', (('>', 'x'),)),
    ))


def pin(*levels):
    return PinnedOrder(tuple(frozenset(level) for level in levels))


def test_max_free_set(tied_pair):
    assert max_free_set(tied_pair.clauses, tied_pair.variables) == frozenset({'x', 'z'})
    assert max_free_set(tied_pair.clauses, {'y', 'z'}) == frozenset()


def test_valid_min_layers(tied_pair):
    assert is_valid_min_layer(tied_pair.clauses, frozenset({'x', 'z'}))
    assert is_valid_min_layer(tied_pair.clauses, frozenset())
    assert not is_valid_min_layer(tied_pair.clauses, frozenset({'x'}))
    assert not is_valid_min_layer(tied_pair.clauses, frozenset({'y'}))


def test_min_layers(tied_pair):
    solution = solve_min_csp(tied_pair)
    assert solution.layers == (frozenset({'x', 'z'}), frozenset({'y'}))
    assert tied_pair.holds(solution.values)


def test_min_pin_realized(tied_pair):
    solution = solve_min_csp(tied_pair, pin({'x'}, {'y'}))
    assert solution.layers == (frozenset({'x', 'z'}), frozenset({'y'}))
    assert pin({'x'}, {'y'}).realized_by(solution.values)


def test_min_pin_unsat(tied_pair):
    assert solve_min_csp(tied_pair, pin({'y'}, {'x'})) is None
    assert brute_csp(tied_pair.variables, tied_pair.clauses, pin({'y'}, {'x'})) is None


def test_min_pinned_body_frees_head_with_its_level():
    csp = MinCSP(('p', 'q', 'y'), (MinClause('y', (('>=', 'p'),)),))
    solution = solve_min_csp(csp, pin({'p'}, {'q'}))
    assert solution.layers == (frozenset({'p', 'y'}), frozenset({'q'}))
    assert csp.holds(solution.values)


def test_min_pinned_levels_in_turn():
    csp = MinCSP(('p', 'q', 'y'), (MinClause('y', (('>=', 'p'), ('>', 'q'))),))
    order = pin({'q'}, {'p'})
    solution = solve_min_csp(csp, order)
    assert solution.layers == (frozenset({'q'}), frozenset({'y'}), frozenset({'p'}))
    assert order.realized_by(solution.values)
    assert csp.holds(solution.values)


def test_clause_index_is_shared_across_solves(tied_pair):
    index = tied_pair.index
    assert solve_min_csp(tied_pair, pin({'x'}, {'y'})) is not None
    assert solve_min_csp(tied_pair, pin({'y'}, {'x'})) is None
    assert tied_pair.index is index
    assert solve_min_csp(tied_pair).layers == (frozenset({'x', 'z'}), frozenset({'y'}))


def test_min_false_clause_is_unsat():
    assert solve_min_csp(MinCSP(('x',), (MinClause('x'),))) is None


def test_min_csp_without_variables():
    assert solve_min_csp(MinCSP(())).layers == ()


def test_pin_on_unknown_variable():
    with pytest.raises(ValueError):
        solve_min_csp(MinCSP(('x',)), pin({'q'}))


def test_mx_layers_of_x():
    csp = MxCSP(('x', 'y', 'z'), (MinAffineForm(('x', 'y', 'z'), X_TUPLES),))
    solution = solve_mx_csp(csp)
    assert solution.layers == (frozenset({'x', 'y'}), frozenset({'z'}))
    assert csp.holds(solution.values)


def test_mx_with_strict_extras():
    csp = MxCSP(('x', 'y', 'z'), (
        MinAffineForm(('x', 'y', 'z'), X_TUPLES),
        MinAffineForm(('x', 'z'), LT_TUPLES),
        MinAffineForm(('y', 'z'), LT_TUPLES),
    ))
    assert solve_mx_csp(csp).layers == (frozenset({'x', 'y'}), frozenset({'z'}))


def test_layer_system_rows():
    x_form = MinAffineForm(('x', 'y', 'z'), X_TUPLES)
    assert layer_system([x_form], ['x', 'y', 'z']).row_bits() == [(1, 1, 1)]
    cycle = [MinAffineForm(('x', 'y'), LT_TUPLES), MinAffineForm(('y', 'x'), LT_TUPLES)]
    assert layer_system(cycle, ['x', 'y']).row_bits() == [(0, 1), (1, 0)]
    assert solve_mx_csp(MxCSP(('x', 'y'), tuple(cycle))) is None


def test_layer_system_pins():
    system = layer_system([], ['x', 'y'], [frozenset({'y'})], include_bottom=True)
    assert system.row_bits() == [(0, 1)]
    assert system.rhs == (1,)


def test_mx_pin_realized():
    csp = MxCSP(('x', 'y', 'z'), (MinAffineForm(('x', 'y', 'z'), X_TUPLES),))
    order = pin({'z'}, {'x'})
    solution = solve_mx_csp(csp, order)
    assert solution is not None
    assert order.realized_by(solution.values)
    assert csp.holds(solution.values)


def test_parsed_x_instance_with_mx_engine():
    instance = parse_instance(f"rel X(x,y,z) := {X_FORMULA}\ncsp X(a,b,c)")
    solution = CSPSolver('mx').solve(instance)
    assert solution.values == {'a': 0, 'b': 0, 'c': 1}


def test_repeated_arguments():
    instance = parse_instance(f"rel X(x,y,z) := {X_FORMULA}\ncsp X(a,a,b)")
    assert CSPSolver('mx').solve(instance).values == {'a': 0, 'b': 1}


def test_max_engine_reverses_layers():
    instance = parse_instance('csp a < b')
    solver = CSPSolver('max')
    solution = solver.solve(instance)
    assert solution.values == {'a': 0, 'b': 1}
    assert solver.stats['solves'] == 1


def test_dual_mx_engine():
    assert CSPSolver('dual-mx').solve(parse_instance('csp a < b')).values == {'a': 0, 'b': 1}


def test_dual_mx_engine_rejects_x():
    instance = parse_instance(f"rel X(x,y,z) := {X_FORMULA}\ncsp X(a,b,c) & a < b")
    with pytest.raises(LanguageNotSupported):
        CSPSolver('dual-mx').solve(instance)


def test_engine_rejects_unsupported_relation():
    instance = parse_instance('csp a != b')
    with pytest.raises(LanguageNotSupported):
        CSPSolver('min').solve(instance)


def test_unknown_engine():
    with pytest.raises(ValueError):
        CSPSolver('pp')


def test_select_engine():
    assert select_engine([parse_instance('csp a < b').constraints[0].relation]) == 'min'
    x_instance = parse_instance(f"rel X(x,y,z) := {X_FORMULA}\ncsp X(a,b,c)")
    assert select_engine([c.relation for c in x_instance.constraints]) == 'mx'
    with pytest.raises(LanguageNotSupported):
        select_engine([parse_instance('csp a != b').constraints[0].relation])


def test_solve_csp_auto():
    instance = parse_instance(f"rel U(x,y,z) := {U_FORMULA}\ncsp U(a,b,c) & b > c")
    engine, solution = solve_csp(instance)
    assert engine == 'min'
    assert instance.holds(solution.values)


def test_solve_csp_unsat():
    engine, solution = solve_csp(parse_instance('csp a < b & b < c & c < a'))
    assert engine == 'min'
    assert solution is None


def test_solvers_reuse_synthesized_forms():
    solver = CSPSolver('min')
    solver.solve(parse_instance('csp a < b & b < c & c < d'))
    assert len(solver._forms_cache) == 1
    assert solver.stats['compiled_constraints'] == 3


def test_normalize_clause():
    assert normalize_clause('x', [('>=', 'x')]) is None
    assert normalize_clause('x', [('>', 'x'), ('>', 'y')]) == MinClause('x', (('>', 'y'),))
    assert normalize_clause('x', [('>', 'y'), ('>=', 'y')]) == MinClause('x', (('>=', 'y'),))
    assert normalize_clause('x', [('>=', 'y'), ('>', 'y')]) == MinClause('x', (('>=', 'y'),))


def test_from_raw_drops_tautologies():
    csp = MinCSP.from_raw(('x', 'y'), [('x', [('>=', 'x')]), ('y', [('>', 'x')])])
    assert csp.clauses == (MinClause('y', (('>', 'x'),)),)


def test_pinned_order():
    order = PinnedOrder.from_values({'a': 2, 'b': 0, 'c': 2})
    assert str(order) == '{b} < {a,c}'
    assert order.variables() == frozenset({'a', 'b', 'c'})
    assert order.realized_by({'a': 5, 'b': 1, 'c': 5})
    assert not order.realized_by({'a': 5, 'b': 6, 'c': 5})
    assert not order.realized_by({'a': 5, 'b': 1, 'c': 4})
    assert str(order.reversed()) == '{a,c} < {b}'
    with pytest.raises(ValueError):
        pin({'a'}, {'a', 'b'})
    with pytest.raises(ValueError):
        PinnedOrder((frozenset(),))


def test_brute_csp_cap():
    names = [f"v{i}" for i in range(9)]
    with pytest.raises(OracleCapExceeded):
        brute_csp(names, [])


def test_brute_csp_finds_witness():
    instance = parse_instance('csp a < b & b <= c')
    values = brute_csp(instance.variables, instance.constraints)
    assert instance.holds(values)


@pytest.mark.parametrize('engine', ['min', 'mx', 'max', 'dual-mx', 'auto'])
def test_engines_agree_with_brute_force(engine):
    report = run_fuzz(FuzzConfig(seed=11, trials=40, engine=engine, max_vars=5, max_constraints=8))
    assert report.agreed == 40, [r.detail or (r.verdict, r.expected) for r in report.mismatches]


@pytest.mark.slow
@pytest.mark.parametrize('engine', ['min', 'mx'])
def test_engines_agree_with_brute_force_long(engine):
    report = run_fuzz(FuzzConfig(seed=2024, trials=1000, engine=engine))
    assert report.agreed == 1000
