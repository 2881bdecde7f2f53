import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlplan.optimizer import _orderings
from dlplan.plan import (
    EvaluationPlan,
    Ordering,
    PlanError,
    all_arguments,
    format_plan,
    indexable_arguments,
    make_planner_input,
    parse_plan,
    plan_wellformed,
)
from dlplan.preference import Strategy
from dlplan.program import parse_program

from conftest import EXAMPLE1, EXAMPLE1_FIXED, ORIGINAL, schema_of

W1 = Strategy.parse("w1")


def test_indexable_example(ex1):
    assert indexable_arguments(ex1) == schema_of(ex1, "a[2]", "b[1]", "c[1]", "d[1]", "e[2]")


def test_indexable_needs_a_join():
    assert indexable_arguments(parse_program("p(X) :- e(X).")) == set()


def test_indexable_constant():
    prog = parse_program("p :- q(1).")
    assert indexable_arguments(prog) == schema_of(prog, "q[1]")


def test_indexable_repeated_variable_in_one_atom():
    prog = parse_program("p(X) :- q(X,X).")
    assert indexable_arguments(prog) == schema_of(prog, "q[2]")


def test_indexable_subset_of_universe(ex1):
    assert indexable_arguments(ex1) <= all_arguments(ex1)


@pytest.mark.parametrize("extra", ["p(X) :- e(X,Y), f(Y).", "g(Z) :- a(Z,Z)."])
def test_indexable_monotone_under_union(extra):
    base = parse_program(EXAMPLE1)
    union = parse_program(EXAMPLE1 + extra)
    small = {(p.name, i) for p, i in indexable_arguments(base)}
    big = {(p.name, i) for p, i in indexable_arguments(union)}
    assert small <= big


def test_example_ordering_wellformed(ex1, S):
    inp = make_planner_input(ex1, W1, fixed_positions=EXAMPLE1_FIXED)
    ok, problems = plan_wellformed(EvaluationPlan(S, (Ordering(0, ORIGINAL),)), inp)
    assert ok and problems == []


def test_duplicate_position(ex1, S):
    inp = make_planner_input(ex1, W1)
    ok, problems = plan_wellformed(EvaluationPlan(S, (Ordering(0, (1, 1, 2, 3, 4)),)), inp)
    assert not ok
    assert any("duplicate position" in p for p in problems)


def test_schema_must_fix_I(ex1):
    inp = make_planner_input(ex1, W1, fixed_indices=schema_of(ex1, "a[2]"))
    plan = EvaluationPlan(schema_of(ex1, "c[1]"), (Ordering(0, ORIGINAL),))
    ok, problems = plan_wellformed(plan, inp)
    assert not ok
    assert any("schema does not fix I" in p for p in problems)


def test_fixed_position_violation(ex1, S):
    inp = make_planner_input(ex1, W1, fixed_positions=EXAMPLE1_FIXED)
    ok, problems = plan_wellformed(EvaluationPlan(S, (Ordering(0, (1, 2, 3, 4, 5)),)), inp)
    assert not ok and "fixed position 1" in problems[0]


def test_out_of_range_and_missing(ex1):
    inp = make_planner_input(ex1, W1)
    ok, problems = plan_wellformed(EvaluationPlan(frozenset(), (Ordering(0, (1, 2, 3, 4, 9)),)), inp)
    assert not ok and "out of range" in problems[0]
    ok, problems = plan_wellformed(EvaluationPlan(frozenset()), inp)
    assert not ok and "no ordering" in problems[0]


def test_planner_input_validation(ex1):
    with pytest.raises(PlanError):
        make_planner_input(ex1, W1, fixed_positions={0: {0: 1, 1: 1}})
    with pytest.raises(PlanError):
        make_planner_input(ex1, W1, fixed_positions={3: {0: 1}})
    with pytest.raises(PlanError):
        make_planner_input(parse_program("p(X) :- q(X)."), W1, keys=schema_of(ex1, "a[1]"))
    with pytest.raises(PlanError):
        make_planner_input(ex1, W1, index_costs={(ex1.predicates["a"], 1): -1})


def test_default_costs():
    prog = parse_program("h(X) :- e(X,Y), h(Y). e(1,2). e(2,3).")
    inp = make_planner_input(prog, W1, default_idb_cost=7)
    assert inp.cost((prog.predicates["e"], 1)) == 2
    assert inp.cost((prog.predicates["h"], 1)) == 7


def test_plan_file_round_trip(ex1, S):
    plan = EvaluationPlan(S, (Ordering(0, ORIGINAL),))
    text = format_plan(plan, ["a comment"])
    assert text.splitlines()[:2] == ["# a comment", "schema a/2 2"]
    assert "order 0 1 1" in text.splitlines()
    assert parse_plan(text, ex1) == plan


@pytest.mark.parametrize("text", ["schema z/1 1", "order 0 9 1", "order 4 0 1", "bogus", "order 0 0 1\norder 0 0 2"])
def test_plan_file_errors(ex1, text):
    with pytest.raises(PlanError):
        parse_plan(text, ex1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.data())
def test_ordering_count_matches_factorial(n, data):
    """Orderings extending a partial assignment number (n - |F|)!."""
    body = ", ".join(f"p{k}(X)" for k in range(n))
    rule = parse_program(f"h(X) :- {body}.").rules[0]
    atoms = data.draw(st.lists(st.integers(0, n - 1), unique=True, max_size=n))
    spots = data.draw(st.permutations(range(1, n + 1)))
    fixed = dict(zip(atoms, spots))
    orderings = list(_orderings(rule, fixed))
    assert len(orderings) == math.factorial(n - len(fixed))
    assert len(set(orderings)) == len(orderings)
    brute = [p for p in itertools.permutations(range(1, n + 1)) if all(p[a] == q for a, q in fixed.items())]
    assert sorted(o.positions for o in orderings) == sorted(brute)
