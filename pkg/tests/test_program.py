import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlplan.program import (
    ArityError,
    Constant,
    DatalogSyntaxError,
    Predicate,
    StratificationError,
    UnsafeRuleError,
    Variable,
    parse_facts,
    parse_program,
    recursive_predicates,
    strata,
    validate_for_planning,
)

from conftest import EXAMPLE1, TWO_RULES
from oracles import reaches_itself


def test_two_rule_program_ids_and_predicates():
    prog = parse_program("h1(X) :- a(X,Y), b(Y).  h2(Y) :- a(Y,X).")
    assert [r.id for r in prog.rules] == [0, 1]
    assert set(map(str, prog.predicates.values())) == {"h1/1", "h2/1", "a/2", "b/1"}
    assert prog.rules[0].text == "h1(X):-a(X,Y),b(Y)."


def test_fact_only_program():
    prog = parse_program("p(1).")
    assert prog.rules == ()
    assert len(prog.facts) == 1
    assert prog.is_edb(prog.predicates["p"])
    assert validate_for_planning(prog) == []


def test_self_loop_is_recursive():
    prog = parse_program("q(X) :- e(X,Y), q(Y).  q(X) :- s(X).")
    assert recursive_predicates(prog) == {Predicate("q", 1)}


def test_two_cycle_is_recursive():
    prog = parse_program("p(X) :- q(X). q(X) :- p(X).")
    assert recursive_predicates(prog) == {Predicate("p", 1), Predicate("q", 1)}


def test_example_rule_not_recursive():
    prog = parse_program(EXAMPLE1)
    assert recursive_predicates(prog) == frozenset()
    (rule,) = validate_for_planning(prog)
    assert len(rule.body) == 5


def test_both_rules_eligible():
    assert [r.id for r in validate_for_planning(parse_program(TWO_RULES))] == [0, 1]


def test_syntax_error_position():
    with pytest.raises(DatalogSyntaxError) as err:
        parse_program("p(X) :- q(X).\nr(X) :- q(X.\n")
    assert (err.value.line, err.value.column) == (2, 12)


def test_arity_clash():
    with pytest.raises(ArityError):
        parse_program("p(X) :- q(X). p(X,Y) :- q(X), q(Y).")


@pytest.mark.parametrize("text,var", [
    ("p(X,Y) :- q(X).", "Y"),
    ("p(X).", "X"),
])
def test_unsafe_rule_names_variable(text, var):
    with pytest.raises(UnsafeRuleError) as err:
        parse_program(text)
    assert err.value.variable == var


def test_negation_rejected_in_planner_profile():
    with pytest.raises(DatalogSyntaxError):
        parse_program("p(X) :- q(X), not r(X).")
    prog = parse_program("p(X) :- q(X), not r(X).", allow_negation=True)
    assert validate_for_planning(prog) == []
    assert [a.text for a in prog.rules[0].negative] == ["r(X)"]


def test_unsafe_negated_variable():
    with pytest.raises(UnsafeRuleError):
        parse_program("p(X) :- q(X), not r(X,Y).", allow_negation=True)


def test_terms_and_comments():
    prog = parse_program('% comment\np(X, "a b", 3, c) :- q(X). % trailing\nq(-1).')
    head = prog.rules[0].head
    assert head.terms == (Variable("X"), Constant('"a b"'), Constant(3), Constant("c"))
    assert prog.facts[0].values() == (-1,)


def test_anonymous_variables_are_distinct():
    rule = parse_program("p(X) :- q(X,_), r(_).").rules[0]
    a, b = rule.body[0].terms[1], rule.body[1].terms[0]
    assert isinstance(a, Variable) and a != b


def test_constraint_without_head_rejected():
    with pytest.raises(DatalogSyntaxError):
        parse_program(":- q(X).")


def test_parse_facts_rejects_rules():
    with pytest.raises(Exception):
        parse_facts("p(X) :- q(X).")
    assert [f.text for f in parse_facts("e(1,2). e(2,3).")] == ["e(1,2)", "e(2,3)"]


def test_strata_order_and_error():
    prog = parse_program("p(X) :- q(X), not r(X). r(X) :- s(X). q(X) :- s(X).", allow_negation=True)
    order = [[r.head.predicate.name for r in s] for s in strata(prog)]
    assert order.index(["r"]) < order.index(["p"])
    bad = parse_program("p(X) :- q(X), not p(X).", allow_negation=True)
    with pytest.raises(StratificationError):
        strata(bad)


# --------------------------------------------------------------------------
# properties

names = st.sampled_from(["a", "b", "c", "d", "e"])
var_names = st.sampled_from(["X", "Y", "Z", "W"])


@st.composite
def programs(draw):
    arity = {n: draw(st.integers(1, 3)) for n in ["a", "b", "c", "d", "e"]}
    lines = []
    for _ in range(draw(st.integers(1, 4))):
        body = []
        for _ in range(draw(st.integers(1, 3))):
            n = draw(names)
            terms = [draw(st.one_of(var_names, st.integers(0, 3).map(str))) for _ in range(arity[n])]
            body.append(f"{n}({','.join(terms)})")
        body_vars = sorted({t for b in body for t in b[2:-1].split(",") if t[0].isupper()})
        head = draw(names)
        hterms = [draw(st.sampled_from(body_vars)) if body_vars else "0" for _ in range(arity[head])]
        lines.append(f"{head}({','.join(hterms)}) :- {', '.join(body)}.")
    return "\n".join(lines)


@settings(max_examples=200, deadline=None)
@given(programs())
def test_round_trip(text):
    prog = parse_program(text)
    again = parse_program(prog.to_text())
    assert again.rules == prog.rules
    assert again.predicates == prog.predicates
    for r in prog.rules:
        for a in r.body:
            assert parse_program(f"x :- {a.text}.").rules[0].body[0] == a


@settings(max_examples=200, deadline=None)
@given(programs())
def test_recursive_set_matches_reachability(text):
    prog = parse_program(text)
    expected = {p for p in prog.predicates.values() if reaches_itself(prog, p)}
    assert recursive_predicates(prog) == expected
