import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlplan.engine import IndexedRelation, default_policy_plan, evaluate, source_order_grouped
from dlplan.optimizer import optimize
from dlplan.plan import EvaluationPlan, Ordering, PlanError, make_planner_input
from dlplan.preference import Strategy
from dlplan.program import Predicate, parse_facts, parse_program

from conftest import EXAMPLE1, TC, TWO_RULES, schema_of
from generators import random_program_text
from oracles import naive_model

SIGMA2 = Strategy.preset("sigma2")


def test_indexed_relation():
    rel = IndexedRelation(Predicate("e", 2), [1])
    for t in [(1, 2), (1, 3), (2, 3), (1, 2)]:
        rel.add(t)
    assert len(rel) == 3 and (1, 3) in rel
    assert rel.lookup(1, 1, 0, 3) == [(1, 2), (1, 3)]
    assert rel.lookup(1, 1, 1, 3) == [(1, 3)]
    rel.add_index(2)
    assert rel.lookup(2, 3, 0, 3) == [(1, 3), (2, 3)]
    assert rel.index_entries() == 6
    assert rel.distinct(1) == 2


def test_transitive_closure():
    prog = parse_program(TC + "e(1,2). e(2,3). e(3,4).")
    result = evaluate(prog)
    assert len(result.relation(prog.predicates["t"])) == 6
    assert result.model == naive_model(prog)


def test_fact_only_program():
    prog = parse_program("p(1). p(2). q(a).")
    result = evaluate(prog)
    assert result.atoms() == set(prog.facts)
    assert result.metrics.join_iterations == 0


def test_two_rule_program():
    prog = parse_program(TWO_RULES + "a(1,2). b(2).")
    result = evaluate(prog)
    assert result.relation(prog.predicates["h1"]) == {(1,)}
    assert result.relation(prog.predicates["h2"]) == {(1,)}


def test_baseline_configuration(ex1):
    base = default_policy_plan(ex1)
    assert base.ordering(0) == source_order_grouped(ex1.rules[0])
    assert base.ordering(0).sequence == (0, 2, 4, 1, 3)
    assert base.schema == schema_of(ex1, "c[1]", "d[1]", "e[2]")
    assert default_policy_plan(parse_program("p(X) :- e(X). q(X) :- f(X,Y).")).schema == frozenset()


def test_plan_controls_indices(ex1, S):
    facts = parse_facts("a(1,2). b(3,4). c(2). d(3). e(5,2). e(6,7).")
    plan = EvaluationPlan(S - schema_of(ex1, "a[2]"), (Ordering(0, (3, 1, 4, 2, 5)),))
    result = evaluate(ex1, plan, facts)
    assert result.metrics.indices == ["c[1]", "d[1]", "e[2]"]
    assert result.metrics.index_entries == 1 + 1 + 2
    assert result.relation(ex1.predicates["h"]) == {(1, 2, 4)}
    # an index in the schema that is never indexBound is not built
    wide = EvaluationPlan(S | schema_of(ex1, "a[1]"), plan.orderings)
    assert evaluate(ex1, wide, facts).metrics.indices_created == 3


def test_plan_mismatch(ex1):
    with pytest.raises(PlanError):
        evaluate(ex1, EvaluationPlan(frozenset(), (Ordering(3, (1,)),)))
    with pytest.raises(PlanError):
        evaluate(ex1, EvaluationPlan(frozenset(), (Ordering(0, (1, 2)),)))


def test_stratified_negation():
    prog = parse_program(
        "reach(X,Y) :- e(X,Y). reach(X,Y) :- e(X,Z), reach(Z,Y).\n"
        "node(X) :- e(X,Y). node(Y) :- e(X,Y).\n"
        "unreach(X,Y) :- node(X), node(Y), not reach(X,Y).\n"
        "e(1,2). e(2,3).",
        allow_negation=True,
    )
    result = evaluate(prog)
    assert result.relation(prog.predicates["unreach"]) == {
        (1, 1), (2, 1), (2, 2), (3, 1), (3, 2), (3, 3)
    }


def test_constants_and_repeated_variables():
    prog = parse_program("s(X) :- e(X,X). c(Y) :- e(1,Y). k :- e(2,3). e(1,1). e(1,2). e(2,3).")
    m = evaluate(prog).model
    assert m[prog.predicates["s"]] == {(1,)}
    assert m[prog.predicates["c"]] == {(1,), (2,)}
    assert m[prog.predicates["k"]] == {()}
    assert m == naive_model(prog)


def test_semi_naive_derives_less_than_naive():
    facts = [f"e({i},{i + 1})." for i in range(12)]
    prog = parse_program(TC + " ".join(facts))
    semi = evaluate(prog)
    naive = evaluate(prog, semi_naive=False)
    assert semi.model == naive.model
    assert semi.metrics.derived_tuples < naive.metrics.derived_tuples


def test_metric_consistency():
    prog = parse_program(EXAMPLE1 + "a(1,2). b(3,4). c(2). d(3). e(5,2).")
    result = evaluate(prog)
    rels = {p: len(ts) for p, ts in result.model.items()}
    expected = sum(rels.get(prog.predicates[n.split("[")[0]], 0) for n in result.metrics.indices)
    assert result.metrics.index_entries == expected


# --------------------------------------------------------------------------
# differential checks against the naive oracle

def _random_facts(prog, rng, n=25):
    lines = []
    for p in sorted(prog.predicates.values()):
        if p in prog.idb and rng.random() < 0.7:
            continue
        for _ in range(rng.randint(0, n)):
            lines.append(f"{p.name}({','.join(str(rng.randint(0, 3)) for _ in range(p.arity))}).")
    return parse_facts("\n".join(lines))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_models_agree_with_naive_oracle(seed):
    rng = random.Random(seed)
    prog = parse_program(random_program_text(rng, max_rules=4, max_body=3, max_preds=5))
    facts = _random_facts(prog, rng)
    expected = naive_model(prog, facts)
    assert evaluate(prog, None, facts).model == expected
    assert evaluate(prog, None, facts, semi_naive=False).model == expected
    inp = make_planner_input(prog, SIGMA2)
    plan = optimize(inp)
    result = evaluate(prog, plan, facts)
    assert result.model == expected
    used = {(p.name, i) for p, i in plan.schema}
    assert all((n.split("[")[0], int(n[:-1].split("[")[1])) in used for n in result.metrics.indices)
    assert result.metrics.indices_created <= len(plan.schema)
