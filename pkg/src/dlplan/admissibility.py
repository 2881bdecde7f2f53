"""Rule hypergraphs, bound arguments and admissibility of body orderings."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

from .plan import Arg, EvaluationPlan, Ordering
from .program import Constant, Program, Rule, Term, validate_for_planning


@dataclass(frozen=True)
class RuleHypergraph:
    rule_id: int
    vertices: frozenset[Term]
    edges: tuple[frozenset[Term], ...]


@dataclass(frozen=True)
class Violation:
    position: int
    atom: str
    reason: str

    def __str__(self) -> str:
        return f"position {self.position} ({self.atom}): {self.reason}"


@dataclass(frozen=True)
class Verdict:
    ok: bool
    violations: tuple[Violation, ...] = ()

    def __bool__(self) -> bool:
        return self.ok

    @property
    def first(self) -> Optional[Violation]:
        return min(self.violations, key=lambda v: v.position) if self.violations else None


def hypergraph(rule: Rule) -> RuleHypergraph:
    edges = tuple(frozenset(a.terms) for a in rule.body)
    return RuleHypergraph(rule.id, frozenset().union(*edges), edges)


@lru_cache(maxsize=4096)
def components(rule: Rule) -> tuple[frozenset[int], ...]:
    """Connected components of the rule hypergraph, as sets of body atom indices.

    Constants are vertices too, so atoms sharing only a constant are connected.
    Components are listed by their smallest atom index.
    """
    parent = list(range(len(rule.body)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    owner: dict[Term, int] = {}
    for k, atom in enumerate(rule.body):
        for t in atom.terms:
            if t in owner:
                a, b = find(owner[t]), find(k)
                if a != b:
                    parent[max(a, b)] = min(a, b)
            else:
                owner[t] = k
    groups: dict[int, set[int]] = {}
    for k in range(len(rule.body)):
        groups.setdefault(find(k), set()).add(k)
    return tuple(frozenset(g) for _, g in sorted(groups.items()))


def _earlier_terms(rule: Rule, ordering: Ordering, position: int) -> set[Term]:
    seen: set[Term] = set()
    for k, p in enumerate(ordering.positions):
        if p < position:
            seen.update(rule.body[k].terms)
    return seen


def _bound_at(rule: Rule, atom: int, seen: set[Term]) -> set[int]:
    return {
        i
        for i, t in enumerate(rule.body[atom].terms, start=1)
        if isinstance(t, Constant) or t in seen
    }


def bound_arguments(rule: Rule, ordering: Ordering, atom: int) -> set[int]:
    """1-based argument positions of body atom ``atom`` that are bound at its position."""
    seen = _earlier_terms(rule, ordering, ordering.positions[atom])
    return _bound_at(rule, atom, seen)


def index_bound_arguments(rule: Rule, ordering: Ordering, schema: Iterable[Arg], atom: int) -> set[int]:
    pred = rule.body[atom].predicate
    indexed = {i for p, i in schema if p == pred}
    return bound_arguments(rule, ordering, atom) & indexed


def components_separated(rule: Rule, ordering: Ordering) -> tuple[bool, Optional[Violation]]:
    spans = []
    for comp in components(rule):
        ps = [ordering.positions[k] for k in comp]
        spans.append((min(ps), max(ps), comp))
    for j, k in sorted((p, k) for k, p in enumerate(ordering.positions)):
        for lo, hi, comp in spans:
            if k not in comp and lo < j < hi:
                return False, Violation(j, rule.body[k].text, "interleaves another connected component")
    return True, None


def component_well_ordered(
    rule: Rule, ordering: Ordering, schema: Iterable[Arg], component: Iterable[int]
) -> tuple[bool, Optional[Violation]]:
    schema = frozenset(schema)
    comp = sorted(component, key=lambda k: ordering.positions[k])
    for idx, k in enumerate(comp[1:], start=1):
        j = ordering.positions[k]
        seen = _earlier_terms(rule, ordering, j)
        bound = _bound_at(rule, k, seen)
        atom = rule.body[k]
        if not any((atom.predicate, i) in schema for i in bound):
            return False, Violation(j, atom.text, "no indexBound argument")
        if len(bound) == atom.predicate.arity:
            continue
        for later in comp[idx + 1:]:
            if len(_bound_at(rule, later, seen)) == rule.body[later].predicate.arity:
                return False, Violation(
                    j, atom.text, f"not fully bound while {rule.body[later].text} would be fully bound here"
                )
    return True, None


def is_admissible(rule: Rule, ordering: Ordering, schema: Iterable[Arg]) -> Verdict:
    """Separation of components plus well-ordering of each component."""
    schema = frozenset(schema)
    violations = []
    ok, v = components_separated(rule, ordering)
    if not ok:
        violations.append(v)
    for comp in components(rule):
        ok, v = component_well_ordered(rule, ordering, schema, comp)
        if not ok:
            violations.append(v)
    violations.sort(key=lambda v: v.position)
    return Verdict(not violations, tuple(violations))


def check_plan(program: Program, plan: EvaluationPlan) -> dict[int, Verdict]:
    """Per-rule admissibility verdicts for a plan."""
    orderings = plan.ordering_map()
    out = {}
    for rule in validate_for_planning(program):
        o = orderings.get(rule.id)
        if o is None:
            out[rule.id] = Verdict(False, (Violation(0, rule.text, "no ordering in plan"),))
        else:
            out[rule.id] = is_admissible(rule, o, plan.schema)
    return out
