"""Optimal evaluation plans: branch-and-bound search and an exhaustive oracle.

Rules interact only through the shared indexing schema. For a fixed schema the
ordering costs (w2, w4) are sums of per-rule terms, so each rule's best
ordering is found independently and the search proper runs over schemas.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .admissibility import components, is_admissible
from .plan import (
    Arg,
    EvaluationPlan,
    Ordering,
    PlanError,
    PlannerInput,
    indexable_arguments,
    sorted_args,
)
from .preference import (
    ORDERING_COSTS,
    CostVector,
    cost_vector,
    max_arity,
    rule_boundness_cost,
    rule_recursion_cost,
)
from .program import Constant, Rule, recursive_predicates

DEFAULT_ORACLE_BUDGET = 10**7


class Unsatisfiable(PlanError):
    def __init__(self, rule: Rule):
        super().__init__(f"UNSATISFIABLE: rule {rule.id} ({rule.text}) has no admissible ordering")
        self.rule = rule


class BudgetExceeded(PlanError):
    pass


def _schema_key(schema) -> tuple:
    return tuple((p.name, p.arity, i) for p, i in sorted_args(schema))


@dataclass
class _Summary:
    """Feasible orderings of one rule under one schema, condensed."""

    minima: dict[str, int]
    best_costs: tuple[int, ...]
    best_positions: tuple[int, ...]


class _RuleSpace:
    """Backtracking enumerator of admissible orderings for one rule."""

    def __init__(self, rule: Rule, fixed: dict[int, int], recursive, arity_bound: int, ord_keys):
        self.rule = rule
        self.n = len(rule.body)
        self.ord_keys = ord_keys
        self.arity_bound = arity_bound
        var_ids: dict = {}
        self.terms: list[tuple[int, ...]] = []   # -1 marks a constant
        self.masks: list[int] = []
        self.arg_keys: list[tuple[Arg, ...]] = []
        for atom in rule.body:
            ids = []
            for t in atom.terms:
                if isinstance(t, Constant):
                    ids.append(-1)
                else:
                    ids.append(var_ids.setdefault(t, len(var_ids)))
            self.terms.append(tuple(ids))
            self.masks.append(sum(1 << v for v in set(ids) if v >= 0))
            self.arg_keys.append(tuple((atom.predicate, i) for i in range(1, atom.predicate.arity + 1)))
        self.recursive = [a.predicate in recursive for a in rule.body]
        comps = components(rule)
        self.comp_of = [0] * self.n
        for c, members in enumerate(comps):
            for k in members:
                self.comp_of[k] = c
        self.comp_members = [sorted(m) for m in comps]
        self.fixed_at = {p: k for k, p in fixed.items()}
        self.fixed_atoms = set(fixed)
        self.relevant = frozenset(a for keys in self.arg_keys for a in keys)
        self._cache: dict[frozenset, Optional[_Summary]] = {}

    def summary(self, schema: frozenset) -> Optional[_Summary]:
        key = schema & self.relevant
        if key not in self._cache:
            self._cache[key] = self._search(key)
        return self._cache[key]

    def _search(self, schema: frozenset) -> Optional[_Summary]:
        n = self.n
        positions = [0] * n
        placed = [False] * n
        left = [len(m) for m in self.comp_members]
        minima = {"w2": math.inf, "w4": math.inf}
        best: list = [None]
        ord_keys = self.ord_keys
        N = self.arity_bound

        def visit(j: int, mask: int, comp: int, w2: int, w4: int) -> None:
            if j > n:
                minima["w2"] = min(minima["w2"], w2)
                minima["w4"] = min(minima["w4"], w4)
                vals = {"w2": w2, "w4": w4}
                cand = (tuple(vals[w] for w in ord_keys), tuple(positions))
                if best[0] is None or cand < best[0]:
                    best[0] = cand
                return
            starting = comp < 0 or left[comp] == 0
            if starting:
                pool = [k for k in range(n) if not placed[k]]
            else:
                pool = [k for k in self.comp_members[comp] if not placed[k]]
            forced = self.fixed_at.get(j)
            for k in pool:
                if forced is not None:
                    if k != forced:
                        continue
                elif k in self.fixed_atoms:
                    continue
                terms = self.terms[k]
                bound = [i for i, v in enumerate(terms) if v < 0 or (mask >> v) & 1]
                c = self.comp_of[k]
                if not starting:
                    keys = self.arg_keys[k]
                    if not any(keys[i] in schema for i in bound):
                        continue
                    if len(bound) < len(terms):
                        blocked = False
                        for g in self.comp_members[c]:
                            if g != k and not placed[g] and not (self.masks[g] & ~mask):
                                blocked = True
                                break
                        if blocked:
                            continue
                unbound = len(terms) - len(bound)
                positions[k] = j
                placed[k] = True
                left[c] -= 1
                visit(
                    j + 1,
                    mask | self.masks[k],
                    c,
                    w2 + (j if self.recursive[k] else 0),
                    w4 + (N - unbound) * j,
                )
                left[c] += 1
                placed[k] = False
                positions[k] = 0

        visit(1, 0, -1, 0, 0)
        if best[0] is None:
            return None
        return _Summary({w: int(v) for w, v in minima.items()}, best[0][0], best[0][1])


class _Context:
    def __init__(self, inp: PlannerInput):
        self.inp = inp
        self.rules = inp.rules
        self.seq = inp.strategy.sequence
        self.ord_keys = tuple(w for w in self.seq if w in ORDERING_COSTS)
        recursive = recursive_predicates(inp.program)
        bound = max_arity(self.rules)
        self.spaces = [
            _RuleSpace(r, dict(inp.assignment(r.id).fixed), recursive, bound, self.ord_keys) for r in self.rules
        ]
        self.base = frozenset(inp.fixed_indices)
        self.candidates = sorted_args(indexable_arguments(inp.program) - self.base)

    def schema_costs(self, schema) -> dict[str, int]:
        return {"w1": sum(self.inp.cost(a) for a in schema), "w3": len(schema - self.inp.keys)}

    def require_feasible(self) -> None:
        top = self.base | frozenset(self.candidates)
        for space in self.spaces:
            if space.summary(top) is None:
                raise Unsatisfiable(space.rule)


def optimize(inp: PlannerInput) -> EvaluationPlan:
    """An optimal plan for ``inp`` under its strategy.

    Ties between cost-equivalent plans go to the smallest schema, then the
    lexicographically smallest sorted schema, then the smallest per-rule
    position sequences in rule-id order. Raises :class:`Unsatisfiable` when
    some rule has no admissible ordering even with every indexable argument
    indexed.
    """
    ctx = _Context(inp)
    ctx.require_feasible()
    cands = sorted(ctx.candidates, key=lambda a: (-inp.cost(a), a[0].name, a[0].arity, a[1]))
    incumbent: list = [None]   # (key, schema, positions per rule)

    def lower_bound(chosen: frozenset, maximal: frozenset):
        sums = {"w2": 0, "w4": 0}
        for space in ctx.spaces:
            s = space.summary(maximal)
            if s is None:
                return None
            for w in ORDERING_COSTS:
                sums[w] += s.minima[w]
        sums.update(ctx.schema_costs(chosen))
        return tuple(sums[w] for w in ctx.seq) + (len(chosen),)

    def leaf(schema: frozenset) -> None:
        totals = dict.fromkeys(ctx.ord_keys, 0)
        positions = []
        for space in ctx.spaces:
            s = space.summary(schema)
            for w, v in zip(ctx.ord_keys, s.best_costs):
                totals[w] += v
            positions.append(s.best_positions)
        totals.update(ctx.schema_costs(schema))
        key = (tuple(totals[w] for w in ctx.seq) + (len(schema),), _schema_key(schema), tuple(positions))
        if incumbent[0] is None or key < incumbent[0][0]:
            incumbent[0] = (key, schema, positions)

    def descend(idx: int, chosen: frozenset) -> None:
        maximal = chosen | frozenset(cands[idx:])
        lb = lower_bound(chosen, maximal)
        if lb is None:
            return
        if incumbent[0] is not None and lb > incumbent[0][0][0]:
            return
        if idx == len(cands):
            leaf(chosen)
            return
        descend(idx + 1, chosen)
        descend(idx + 1, chosen | {cands[idx]})

    descend(0, ctx.base)
    _, schema, positions = incumbent[0]
    orderings = tuple(Ordering(r.id, p) for r, p in zip(ctx.rules, positions))
    return EvaluationPlan(schema, orderings)


# --------------------------------------------------------------------------
# exhaustive oracle

@dataclass
class OracleResult:
    """Every optimal plan, stored as optimal schemas times per-rule optimal orderings."""

    cost: CostVector
    choices: dict[frozenset, list[list[Ordering]]] = field(default_factory=dict)

    def plans(self) -> Iterator[EvaluationPlan]:
        for schema, per_rule in self.choices.items():
            for combo in itertools.product(*per_rule):
                yield EvaluationPlan(schema, combo)

    def count(self) -> int:
        return sum(math.prod(len(c) for c in per_rule) for per_rule in self.choices.values())

    def __contains__(self, plan: EvaluationPlan) -> bool:
        per_rule = self.choices.get(frozenset(plan.schema))
        if per_rule is None:
            return False
        return all(o in opts for o, opts in zip(plan.orderings, per_rule)) and len(plan.orderings) == len(per_rule)

    def canonical(self) -> EvaluationPlan:
        """The optimal plan selected by the optimizer's tie-breaking rule."""
        schema = min(self.choices, key=lambda s: (len(s), _schema_key(s)))
        return EvaluationPlan(schema, tuple(min(opts, key=lambda o: o.positions) for opts in self.choices[schema]))


def oracle_work(inp: PlannerInput) -> int:
    """Admissibility checks the oracle performs: schemas times summed per-rule orderings."""
    free = indexable_arguments(inp.program) - inp.fixed_indices
    per_schema = sum(math.factorial(len(r.body) - len(inp.assignment(r.id).fixed)) for r in inp.rules)
    return 2 ** len(free) * max(per_schema, 1)


def _orderings(rule: Rule, fixed: dict[int, int]) -> Iterator[Ordering]:
    n = len(rule.body)
    free_atoms = [k for k in range(n) if k not in fixed]
    free_pos = [p for p in range(1, n + 1) if p not in fixed.values()]
    for perm in itertools.permutations(free_pos):
        positions = dict(fixed)
        positions.update(zip(free_atoms, perm))
        yield Ordering(rule.id, tuple(positions[k] for k in range(n)))


def oracle_optimize(inp: PlannerInput, budget: int = DEFAULT_ORACLE_BUDGET) -> OracleResult:
    """All optimal plans by literal enumeration of schemas and orderings.

    Each candidate ordering is filtered with :func:`is_admissible` and plans
    are scored with :func:`cost_vector`. Refuses inputs whose enumeration
    exceeds ``budget`` admissibility checks.
    """
    work = oracle_work(inp)
    if work > budget:
        raise BudgetExceeded(f"oracle would perform {work} checks, budget is {budget}")
    rules = inp.rules
    recursive = recursive_predicates(inp.program)
    bound = max_arity(rules)
    ord_keys = [w for w in inp.strategy.sequence if w in ORDERING_COSTS]
    free = sorted_args(indexable_arguments(inp.program) - inp.fixed_indices)
    all_orderings = {r.id: list(_orderings(r, dict(inp.assignment(r.id).fixed))) for r in rules}

    def rule_optima(rule: Rule, schema: frozenset) -> list[Ordering]:
        scored = []
        for o in all_orderings[rule.id]:
            if is_admissible(rule, o, schema):
                vals = {"w2": rule_recursion_cost(rule, o, recursive), "w4": rule_boundness_cost(rule, o, bound)}
                scored.append((tuple(vals[w] for w in ord_keys), o))
        if not scored:
            return []
        low = min(c for c, _ in scored)
        return [o for c, o in scored if c == low]

    best: Optional[CostVector] = None
    choices: dict[frozenset, list[list[Ordering]]] = {}
    for mask in range(2 ** len(free)):
        schema = frozenset(inp.fixed_indices) | {a for b, a in enumerate(free) if (mask >> b) & 1}
        per_rule = []
        for rule in rules:
            opts = rule_optima(rule, schema)
            if not opts:
                break
            per_rule.append(opts)
        else:
            plan = EvaluationPlan(schema, tuple(opts[0] for opts in per_rule))
            cv = cost_vector(plan, inp)
            if best is None or cv.values < best.values:
                best, choices = cv, {schema: per_rule}
            elif cv.values == best.values:
                choices[schema] = per_rule
    if best is None:
        for rule in rules:
            if not rule_optima(rule, frozenset(inp.fixed_indices) | set(free)):
                raise Unsatisfiable(rule)
    return OracleResult(best, choices)
