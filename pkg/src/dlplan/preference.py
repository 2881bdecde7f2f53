"""Plan cost functions and their lexicographic combination into strategies."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from .plan import EvaluationPlan, Ordering, PlannerInput, PlanError
from .program import Constant, Predicate, Program, Rule, recursive_predicates, validate_for_planning

COST_FUNCTIONS = ("w1", "w2", "w3", "w4")
SCHEMA_COSTS = frozenset({"w1", "w3"})
ORDERING_COSTS = frozenset({"w2", "w4"})

PRESETS = {
    "sigma1": ("w2", "w4"),
    "sigma2": ("w1", "w2", "w3", "w4"),
}


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class Strategy:
    sequence: tuple[str, ...]

    def __post_init__(self):
        seq = tuple(self.sequence)
        object.__setattr__(self, "sequence", seq)
        if not seq:
            raise StrategyError("a strategy needs at least one cost function")
        unknown = [w for w in seq if w not in COST_FUNCTIONS]
        if unknown:
            raise StrategyError(f"unknown cost function(s): {', '.join(unknown)}")
        if len(set(seq)) != len(seq):
            raise StrategyError("cost functions in a strategy must be distinct")

    @classmethod
    def parse(cls, text: str) -> Strategy:
        """``"w1,w3,w2"`` or a preset name such as ``"sigma2"``."""
        text = text.strip()
        if text in PRESETS:
            return cls(PRESETS[text])
        return cls(tuple(w.strip() for w in text.split(",") if w.strip()))

    @classmethod
    def preset(cls, name: str) -> Strategy:
        try:
            return cls(PRESETS[name])
        except KeyError:
            raise StrategyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None

    def priorities(self) -> list[tuple[int, int]]:
        """(function number, priority level) pairs; the first function gets the highest level."""
        k = len(self.sequence)
        return [(int(w[1]), k - j) for j, w in enumerate(self.sequence)]

    def __str__(self) -> str:
        return ",".join(self.sequence)


@dataclass(frozen=True)
class CostVector:
    strategy: Strategy
    values: tuple[int, ...]

    def __post_init__(self):
        if len(self.values) != len(self.strategy.sequence):
            raise StrategyError("cost vector length does not match its strategy")

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.strategy.sequence, self.values))

    def __str__(self) -> str:
        return " ".join(f"{w}={v}" for w, v in zip(self.strategy.sequence, self.values))


class Preference(enum.Enum):
    PREFERABLE = "preferable"
    EQUIVALENT = "equivalent"
    DISPREFERRED = "dispreferred"


def compare(a: CostVector, b: CostVector) -> Preference:
    """Lexicographic comparison of ``a`` against ``b``."""
    if a.strategy != b.strategy:
        raise StrategyError(f"cannot compare costs under {a.strategy} and {b.strategy}")
    if a.values < b.values:
        return Preference.PREFERABLE
    if a.values > b.values:
        return Preference.DISPREFERRED
    return Preference.EQUIVALENT


# --------------------------------------------------------------------------
# cost functions

def max_arity(rules: Iterable[Rule]) -> int:
    return max((a.predicate.arity for r in rules for a in (r.head,) + r.body), default=0)


def rule_recursion_cost(rule: Rule, ordering: Ordering, recursive: frozenset[Predicate]) -> int:
    return sum(p for atom, p in zip(rule.body, ordering.positions) if atom.predicate in recursive)


def rule_boundness_cost(rule: Rule, ordering: Ordering, arity_bound: int) -> int:
    """Sum of (arity_bound - unbound arguments) * position over the body."""
    total = 0
    seen: set = set()
    for k in ordering.sequence:
        atom = rule.body[k]
        unbound = sum(1 for t in atom.terms if not (isinstance(t, Constant) or t in seen))
        total += (arity_bound - unbound) * ordering.positions[k]
        seen.update(atom.terms)
    return total


def w1(plan: EvaluationPlan, inp: PlannerInput) -> int:
    """Total cost of the indices in the schema."""
    return sum(inp.cost(a) for a in plan.schema)


def w2(plan: EvaluationPlan, program: Program) -> int:
    """Sum of the positions of body atoms over recursive predicates."""
    recursive = recursive_predicates(program)
    orderings = plan.ordering_map()
    return sum(rule_recursion_cost(r, orderings[r.id], recursive) for r in validate_for_planning(program))


def w3(plan: EvaluationPlan, inp: PlannerInput) -> int:
    """Number of schema entries that are not keys."""
    return len(plan.schema - inp.keys)


def w4(plan: EvaluationPlan, program: Program) -> int:
    rules = validate_for_planning(program)
    n = max_arity(rules)
    orderings = plan.ordering_map()
    return sum(rule_boundness_cost(r, orderings[r.id], n) for r in rules)


def evaluate_function(name: str, plan: EvaluationPlan, inp: PlannerInput) -> int:
    if name == "w1":
        return w1(plan, inp)
    if name == "w2":
        return w2(plan, inp.program)
    if name == "w3":
        return w3(plan, inp)
    if name == "w4":
        return w4(plan, inp.program)
    raise StrategyError(f"unknown cost function {name!r}")


def cost_vector(plan: EvaluationPlan, inp: PlannerInput) -> CostVector:
    try:
        values = tuple(evaluate_function(w, plan, inp) for w in inp.strategy.sequence)
    except KeyError as exc:
        raise PlanError(f"plan has no ordering for rule {exc.args[0]}") from None
    return CostVector(inp.strategy, values)
