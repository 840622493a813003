"""Tests for min-tuples, near-affine relations and GF(2) solving."""

from itertools import combinations, product

import pytest
from hypothesis import given, settings, strategies as st

from fuzz_harness import random_closed_relation, trial_rng
from gf2_affine import (BitTuple, BoolRelation, GF2System, is_near_affine, min_tuple,
                        near_affine_closure, parity_check, solve_gf2, span)
from normal_forms import min_tuple_set
from solver_errors import NotNearAffineError

X_TUPLES = BoolRelation.from_strings(3, ['001', '010', '100'])


def test_min_tuple():
    assert str(min_tuple([3, 1, 1])) == '100'
    assert str(min_tuple([2, 2])) == '00'
    with pytest.raises(ValueError):
        min_tuple([])


def test_bit_tuple_rejects_wide_mask():
    with pytest.raises(ValueError):
        BitTuple(2, 0b100)
    with pytest.raises(ValueError):
        BitTuple.from_bits([0, 2])


def test_bool_relation_printing_is_sorted():
    assert str(BoolRelation.from_strings(3, ['100', '001', '010'])) == '{001,010,100}'


def test_near_affine():
    assert is_near_affine(X_TUPLES).near_affine
    assert is_near_affine(BoolRelation(2)).near_affine


def test_not_near_affine_counterexample():
    check = is_near_affine(BoolRelation.from_strings(2, ['00', '01']))
    assert not check.near_affine
    assert [str(t) for t in check.counterexample] == ['00', '01', '10']


def test_parity_check_of_x_tuples():
    assert parity_check(X_TUPLES).row_bits() == [(1, 1, 1)]


def test_parity_check_of_single_tuple():
    assert parity_check(BoolRelation.from_strings(2, ['01'])).row_bits() == [(0, 1)]


def test_parity_check_of_empty_relation_forces_ones():
    assert parity_check(BoolRelation(2)).row_bits() == [(1, 0), (0, 1)]


def test_parity_check_rejects_non_near_affine():
    with pytest.raises(NotNearAffineError):
        parity_check(BoolRelation.from_strings(2, ['00', '01']))


def test_solve_gf2_particular_and_kernel():
    system = GF2System.from_bit_rows(3, [[1, 1, 0], [0, 1, 1]], [1, 0])
    solution = solve_gf2(system)
    assert solution.particular.bits == (1, 0, 0)
    assert [k.bits for k in solution.kernel] == [(1, 1, 1)]
    assert system.is_satisfied_by(solution.particular)
    assert system.is_satisfied_by(solution.particular ^ solution.kernel[0])


def test_solve_gf2_infeasible():
    assert solve_gf2(GF2System.from_bit_rows(1, [[1], [1]], [1, 0])) is None


def test_solve_gf2_forced_bits():
    system = GF2System.from_bit_rows(2, [[1, 1]])
    solution = solve_gf2(system, {0: 1})
    assert solution.particular.bits == (1, 1)
    assert solution.kernel == ()
    assert solve_gf2(system, {0: 1, 1: 0}) is None
    with pytest.raises(ValueError):
        solve_gf2(system, {2: 1})


def test_solve_gf2_without_rows():
    solution = solve_gf2(GF2System(2))
    assert solution.particular.bits == (0, 0)
    assert [k.bits for k in solution.kernel] == [(1, 0), (0, 1)]


def test_system_validation():
    with pytest.raises(ValueError):
        GF2System(2, (0b100,))
    with pytest.raises(ValueError):
        GF2System(2, (0b01,), (1, 0))


def test_span():
    assert sorted(span([0b01, 0b10])) == [0, 1, 2, 3]
    assert span([]) == [0]


relations_of_width_three = st.sets(st.sampled_from([''.join(bits) for bits in product('01', repeat=3)]))


@given(relations_of_width_three)
def test_closure_is_smallest_near_affine_superset(rows):
    relation = BoolRelation.from_strings(3, rows)
    closure = near_affine_closure(relation)
    assert is_near_affine(closure).near_affine
    assert relation.without_ones().members <= closure.members
    if is_near_affine(relation).near_affine:
        assert closure == relation.without_ones()


@given(relations_of_width_three)
def test_parity_check_describes_the_closure(rows):
    closure = near_affine_closure(BoolRelation.from_strings(3, rows))
    system = parity_check(closure)
    for bits in product((0, 1), repeat=3):
        c = BitTuple.from_bits(bits)
        expected = c.flipped() in closure or c.flipped().is_ones()
        assert system.is_satisfied_by(c) == expected


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_min_tuples_of_mx_closed_relations_are_near_affine(seed, arity):
    relation = random_closed_relation(trial_rng(seed, 0), 'mx', arity)
    for size in range(1, arity + 1):
        for scope in combinations(range(arity), size):
            assert is_near_affine(min_tuple_set(relation, scope)).near_affine, scope
