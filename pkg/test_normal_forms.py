"""Tests for normal-form synthesis and printing."""

from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from formula_parser import entails, parse_formula, relation_of_formula
from fuzz_harness import random_closed_relation, random_relation, trial_rng
from gf2_affine import BoolRelation
from normal_forms import (NORMAL_FORMS, MinAffineForm, MinClause, PPClause, default_names,
                          format_conjunction, max_affine_form, max_clause_form, min_affine_form,
                          min_clause_form, min_tuple_set, pp_clause_form, relation_of_normal_form)
from polymorphisms import Operation, preserves
from temporal_model import TemporalRelation, all_weak_orders

U_FORMULA = '(x = y & y < z) | (x = z & z < y) | (x = y & y = z)'
X_FORMULA = '(x = y & y < z) | (x = z & z < y) | (y = z & y < x)'
XY = ('x', 'y')
XYZ = ('x', 'y', 'z')

FORM_OPERATIONS = {
    'min': Operation.MIN,
    'pp': Operation.PP,
    'mxaffine': Operation.MX,
    'max': Operation.MAX,
    'dual-mxaffine': Operation.DUAL_MX,
}


def relation(text, variables=None):
    return relation_of_formula(parse_formula(text, variables), variables)


def test_u_min_clause_form():
    form = min_clause_form(relation(U_FORMULA), XYZ)
    assert format_conjunction(form) == '(x >= y | x >= z) & (y >= x) & (z >= x)'
    assert relation_of_normal_form(form, XYZ) == relation(U_FORMULA)


def test_every_clause_is_entailed():
    u_rel = relation(U_FORMULA)
    for clause in min_clause_form(u_rel, XYZ):
        assert entails(u_rel, parse_formula(str(clause), XYZ), XYZ)


def test_less_than_min_clause_form():
    assert format_conjunction(min_clause_form(relation('x < y'), XY)) == 'y > x'


def test_neq_has_no_min_form_but_a_pp_form():
    neq = relation('x != y')
    assert min_clause_form(neq, XY) is None
    assert format_conjunction(pp_clause_form(neq, XY)) == 'x != y'


def test_leq_pp_form():
    assert format_conjunction(pp_clause_form(relation('x <= y'), XY)) == 'y >= x'


def test_x_min_affine_form():
    forms = min_affine_form(relation(X_FORMULA), XYZ)
    assert len(forms) == 1
    assert forms[0].describe() == 'scope (x,y,z), T = {001,010,100}'
    assert relation_of_normal_form(forms, XYZ) == relation(X_FORMULA)


def test_less_than_min_affine_form():
    forms = min_affine_form(relation('x < y'), XY)
    assert [str(f.T) for f in forms] == ['{01}']
    assert str(forms[0]) == 'x < y'


def test_leq_has_no_min_affine_form():
    assert min_affine_form(relation('x <= y'), XY) is None


def test_max_forms_print_dual_operators():
    gt = relation('x > y')
    assert format_conjunction(max_clause_form(gt, XY)) == 'y < x'
    forms = max_affine_form(relation('x < y'), XY)
    assert forms[0].describe() == 'scope (x,y), T = {10} (max-tuple)'
    assert str(forms[0]) == 'y > x'


def test_full_relation_has_empty_form():
    assert min_clause_form(TemporalRelation.full(2), XY) == ()
    assert format_conjunction(()) == 'true'
    assert relation_of_normal_form((), XY).is_full()


def test_empty_unary_relation_is_false():
    empty = TemporalRelation.empty(1)
    assert format_conjunction(min_clause_form(empty, ('x',))) == 'false'
    assert format_conjunction(pp_clause_form(empty, ('x',))) == 'false'
    forms = min_affine_form(empty, ('x',))
    assert relation_of_normal_form(forms, ('x',)).is_empty()


def test_empty_affine_form_defines_nothing():
    form = MinAffineForm(XY, BoolRelation(2))
    assert str(form) == 'false'
    assert relation_of_normal_form([form], XY).is_empty()


def test_default_names():
    assert default_names(3) == ('x1', 'x2', 'x3')
    form = min_clause_form(relation('x < y'))
    assert format_conjunction(form) == 'x2 > x1'


def test_names_must_match_arity():
    with pytest.raises(ValueError):
        min_clause_form(relation('x < y'), XYZ)
    with pytest.raises(ValueError):
        min_clause_form(relation('x < y'), ('x', 'x'))


def test_form_validation():
    with pytest.raises(ValueError):
        MinClause('x', (('<', 'y'),))
    with pytest.raises(ValueError):
        MinClause('x', (('>=', 'x'),))
    with pytest.raises(ValueError):
        PPClause('x', ('x',))
    with pytest.raises(ValueError):
        MinAffineForm(XYZ, BoolRelation.from_strings(2, ['01']))
    with pytest.raises(ValueError):
        MinAffineForm(XY, BoolRelation.from_strings(2, ['00', '01']))


def test_min_tuple_set():
    assert str(min_tuple_set(relation(X_FORMULA), (0, 1, 2))) == '{001,010,100}'
    assert str(min_tuple_set(relation(X_FORMULA), (1, 2))) == '{00,01,10}'


@pytest.mark.parametrize('name', sorted(NORMAL_FORMS))
def test_forms_reparse(name):
    for text in ('x < y', 'x <= y', 'x != y', 'x = y', 'x < y | y < x'):
        r = relation(text, XY)
        form = NORMAL_FORMS[name](r, XY)
        if form is None:
            continue
        assert relation(format_conjunction(form), XY) == r


@pytest.mark.parametrize('name', sorted(NORMAL_FORMS))
def test_arity_two_forms_exist_exactly_for_closed_relations(name):
    orbits = all_weak_orders(2)
    for size in range(len(orbits) + 1):
        for chosen in combinations(orbits, size):
            r = TemporalRelation(2, chosen)
            form = NORMAL_FORMS[name](r, XY)
            assert (form is not None) == preserves(FORM_OPERATIONS[name], r).closed
            if form is not None:
                assert relation_of_normal_form(form, XY) == r


@settings(max_examples=60, deadline=None)
@given(st.sets(st.integers(0, 12)), st.sampled_from(sorted(NORMAL_FORMS)))
def test_arity_three_forms_define_the_relation(indices, name):
    orbits = all_weak_orders(3)
    r = TemporalRelation(3, tuple(orbits[i] for i in indices))
    form = NORMAL_FORMS[name](r, XYZ)
    assert (form is not None) == preserves(FORM_OPERATIONS[name], r).closed
    if form is not None:
        assert relation_of_normal_form(form, XYZ) == r
        assert relation(format_conjunction(form), XYZ) == r


@pytest.mark.slow
@pytest.mark.parametrize('name', sorted(NORMAL_FORMS))
def test_arity_three_sweep(name):
    orbits = all_weak_orders(3)
    for mask in range(1 << len(orbits)):
        r = TemporalRelation(3, tuple(w for i, w in enumerate(orbits) if mask >> i & 1))
        form = NORMAL_FORMS[name](r, XYZ)
        assert (form is not None) == preserves(FORM_OPERATIONS[name], r).closed
        if form is not None:
            assert relation_of_normal_form(form, XYZ) == r


@pytest.mark.slow
def test_arity_four_sweep():
    names = default_names(4)
    languages = ('min', 'pp', 'mx', 'max', 'dual-mx', None)
    for index in range(200):
        rng = trial_rng(404, index)
        language = languages[index % len(languages)]
        r = random_relation(rng, 4) if language is None else random_closed_relation(rng, language, 4)
        for name, synthesize in sorted(NORMAL_FORMS.items()):
            form = synthesize(r, names)
            assert (form is not None) == preserves(FORM_OPERATIONS[name], r).closed, (index, name)
            if form is not None:
                assert relation_of_normal_form(form, names) == r, (index, name)
