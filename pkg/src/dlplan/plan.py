"""Orderings, indexing schemas, planner inputs and evaluation plans."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Optional

from .program import Constant, DatalogError, Predicate, Program, Rule, Variable, validate_for_planning

if TYPE_CHECKING:
    from .preference import Strategy

# An argument p[i]: predicate plus 1-based argument position.
Arg = tuple[Predicate, int]

DEFAULT_IDB_COST = 1000


class PlanError(DatalogError):
    """A plan, plan file or planner input is malformed."""


def arg_str(arg: Arg) -> str:
    return f"{arg[0].name}[{arg[1]}]"


def sorted_args(args: Iterable[Arg]) -> list[Arg]:
    return sorted(args, key=lambda a: (a[0].name, a[0].arity, a[1]))


@dataclass(frozen=True)
class PositionAssignment:
    """Fixed positions for some body atoms of one rule (atom index -> 1-based position)."""

    rule_id: int
    fixed: Mapping[int, int] = field(default_factory=dict)

    def problems(self, rule: Rule) -> list[str]:
        out = []
        n = len(rule.body)
        seen: dict[int, int] = {}
        for atom, p in sorted(self.fixed.items()):
            if not 0 <= atom < n:
                out.append(f"rule {rule.id}: fixed atom index {atom} outside the body")
            if not 1 <= p <= n:
                out.append(f"rule {rule.id}: fixed position {p} out of range 1..{n}")
            if p in seen:
                out.append(f"rule {rule.id}: fixed position {p} assigned twice")
            seen[p] = atom
        return out


@dataclass(frozen=True)
class Ordering:
    """A body ordering: ``positions[k]`` is the 1-based position of body atom ``k``."""

    rule_id: int
    positions: tuple[int, ...]

    @classmethod
    def from_sequence(cls, rule_id: int, sequence: Iterable[int]) -> Ordering:
        """Build from the atom indices listed in evaluation order."""
        seq = list(sequence)
        positions = [0] * len(seq)
        for p, atom in enumerate(seq, start=1):
            positions[atom] = p
        return cls(rule_id, tuple(positions))

    @classmethod
    def identity(cls, rule: Rule) -> Ordering:
        return cls(rule.id, tuple(range(1, len(rule.body) + 1)))

    @property
    def sequence(self) -> tuple[int, ...]:
        """Atom indices in evaluation order."""
        return tuple(k for _, k in sorted((p, k) for k, p in enumerate(self.positions)))

    def problems(self, rule: Rule, assignment: Optional[PositionAssignment] = None) -> list[str]:
        n = len(rule.body)
        out = []
        if len(self.positions) != n:
            return [f"rule {rule.id}: ordering covers {len(self.positions)} atoms, body has {n}"]
        seen = set()
        for k, p in enumerate(self.positions):
            if not 1 <= p <= n:
                out.append(f"rule {rule.id}: position {p} of {rule.body[k].text} out of range 1..{n}")
            elif p in seen:
                out.append(f"rule {rule.id}: duplicate position {p}")
            seen.add(p)
        if assignment is not None:
            for atom, p in sorted(assignment.fixed.items()):
                if atom < n and self.positions[atom] != p:
                    out.append(
                        f"rule {rule.id}: {rule.body[atom].text} must be at fixed position {p}, "
                        f"found {self.positions[atom]}"
                    )
        return out


@dataclass(frozen=True)
class EvaluationPlan:
    schema: frozenset[Arg]
    orderings: tuple[Ordering, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "schema", frozenset(self.schema))
        object.__setattr__(self, "orderings", tuple(sorted(self.orderings, key=lambda o: o.rule_id)))

    def ordering(self, rule_id: int) -> Ordering:
        for o in self.orderings:
            if o.rule_id == rule_id:
                return o
        raise PlanError(f"plan has no ordering for rule {rule_id}")

    def ordering_map(self) -> dict[int, Ordering]:
        return {o.rule_id: o for o in self.orderings}


def all_arguments(program: Program) -> set[Arg]:
    """The universe U of indexable-in-principle arguments p[i]."""
    return {(p, i) for p in program.predicates.values() for i in range(1, p.arity + 1)}


def rule_indexable(rule: Rule) -> set[Arg]:
    """Arguments of ``rule``'s body that can ever take part in a join or selection.

    That is a constant, or a variable that also occurs in another body atom
    or at an earlier argument of the same atom.
    """
    out = set()
    for k, atom in enumerate(rule.body):
        others: set[Variable] = set()
        for j, a in enumerate(rule.body):
            if j != k:
                others |= a.variables()
        for i, t in enumerate(atom.terms, start=1):
            if isinstance(t, Constant) or t in others or t in atom.terms[: i - 1]:
                out.add((atom.predicate, i))
    return out


def indexable_arguments(program: Program) -> set[Arg]:
    """Union over planned rules of the join- or constant-carrying body arguments."""
    out: set[Arg] = set()
    for rule in validate_for_planning(program):
        out |= rule_indexable(rule)
    return out


@dataclass(frozen=True)
class PlannerInput:
    program: Program
    strategy: "Strategy"
    position_assignments: Mapping[int, PositionAssignment] = field(default_factory=dict)
    fixed_indices: frozenset[Arg] = frozenset()
    keys: frozenset[Arg] = frozenset()
    index_costs: Mapping[Arg, int] = field(default_factory=dict)

    @property
    def rules(self) -> list[Rule]:
        return validate_for_planning(self.program)

    def assignment(self, rule_id: int) -> PositionAssignment:
        return self.position_assignments.get(rule_id) or PositionAssignment(rule_id, {})

    def cost(self, arg: Arg) -> int:
        try:
            return self.index_costs[arg]
        except KeyError:
            raise PlanError(f"no index cost for {arg_str(arg)}") from None


def make_planner_input(
    program: Program,
    strategy: "Strategy",
    *,
    fixed_positions: Optional[Mapping[int, Mapping[int, int]]] = None,
    fixed_indices: Iterable[Arg] = (),
    keys: Iterable[Arg] = (),
    index_costs: Optional[Mapping[Arg, int]] = None,
    default_idb_cost: int = DEFAULT_IDB_COST,
) -> PlannerInput:
    """Validate planner constraints and complete the index cost table.

    Missing costs default to the number of facts of an EDB predicate and to
    ``default_idb_cost`` for IDB predicates.
    """
    universe = all_arguments(program)
    rules = {r.id: r for r in validate_for_planning(program)}
    fixed_indices = frozenset(fixed_indices)
    keys = frozenset(keys)
    for what, args in (("fixed index", fixed_indices), ("key", keys)):
        for a in sorted_args(args):
            if a not in universe:
                raise PlanError(f"{what} {arg_str(a)} does not name an argument of the program")

    assignments = {}
    for rid, fixed in (fixed_positions or {}).items():
        if rid not in rules:
            raise PlanError(f"fixed position for unknown rule {rid}")
        pa = PositionAssignment(rid, dict(fixed))
        problems = pa.problems(rules[rid])
        if problems:
            raise PlanError("; ".join(problems))
        assignments[rid] = pa

    sizes: dict[Predicate, int] = {}
    for f in program.facts:
        sizes[f.predicate] = sizes.get(f.predicate, 0) + 1
    costs: dict[Arg, int] = {}
    for a in universe:
        p = a[0]
        costs[a] = default_idb_cost if p in program.idb else sizes.get(p, 0)
    for a, c in (index_costs or {}).items():
        if a not in universe:
            raise PlanError(f"index cost given for unknown argument {arg_str(a)}")
        if c < 0:
            raise PlanError(f"negative index cost for {arg_str(a)}")
        costs[a] = int(c)
    return PlannerInput(program, strategy, assignments, fixed_indices, keys, costs)


def plan_wellformed(plan: EvaluationPlan, inp: PlannerInput) -> tuple[bool, list[str]]:
    """Check bijectivity, fixed positions and that the schema fixes I.

    Admissibility is not part of this check.
    """
    problems = []
    universe = all_arguments(inp.program)
    for a in sorted_args(plan.schema - universe):
        problems.append(f"schema entry {arg_str(a)} is not an argument of the program")
    missing = inp.fixed_indices - plan.schema
    if missing:
        problems.append("schema does not fix I: missing " + ", ".join(arg_str(a) for a in sorted_args(missing)))
    orderings = plan.ordering_map()
    rules = inp.rules
    for rule in rules:
        o = orderings.get(rule.id)
        if o is None:
            problems.append(f"rule {rule.id}: no ordering")
            continue
        problems += o.problems(rule, inp.assignment(rule.id))
    extra = set(orderings) - {r.id for r in rules}
    for rid in sorted(extra):
        problems.append(f"ordering for unknown rule {rid}")
    return not problems, problems


# --------------------------------------------------------------------------
# plan file

def format_plan(plan: EvaluationPlan, comments: Iterable[str] = ()) -> str:
    """Render the line-oriented plan file (deterministic order)."""
    lines = [f"# {c}" for c in comments]
    for p, i in sorted_args(plan.schema):
        lines.append(f"schema {p} {i}")
    for o in plan.orderings:
        for p, k in sorted((p, k) for k, p in enumerate(o.positions)):
            lines.append(f"order {o.rule_id} {k} {p}")
    return "\n".join(lines) + "\n"


def parse_plan(text: str, program: Program) -> EvaluationPlan:
    """Read a plan file written by :func:`format_plan`.

    Only syntax and name resolution are checked; use :func:`plan_wellformed`
    for the structural invariants.
    """
    schema: set[Arg] = set()
    positions: dict[int, dict[int, int]] = {}
    rules = {r.id: r for r in program.rules}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "schema" and len(parts) == 3:
                name, _, arity = parts[1].rpartition("/")
                pred = program.predicates.get(name)
                if pred is None or pred.arity != int(arity):
                    raise PlanError(f"line {lineno}: unknown predicate {parts[1]}")
                schema.add((pred, int(parts[2])))
            elif parts[0] == "order" and len(parts) == 4:
                rid, atom, pos = (int(x) for x in parts[1:])
                if rid not in rules:
                    raise PlanError(f"line {lineno}: unknown rule {rid}")
                if not 0 <= atom < len(rules[rid].body):
                    raise PlanError(f"line {lineno}: rule {rid} has no body atom {atom}")
                slot = positions.setdefault(rid, {})
                if atom in slot:
                    raise PlanError(f"line {lineno}: atom {atom} of rule {rid} ordered twice")
                slot[atom] = pos
            else:
                raise PlanError(f"line {lineno}: cannot parse {raw!r}")
        except ValueError:
            raise PlanError(f"line {lineno}: cannot parse {raw!r}") from None
    orderings = []
    for rid, slot in sorted(positions.items()):
        n = len(rules[rid].body)
        if set(slot) != set(range(n)):
            raise PlanError(f"rule {rid}: ordering does not cover every body atom")
        orderings.append(Ordering(rid, tuple(slot[k] for k in range(n))))
    return EvaluationPlan(frozenset(schema), tuple(orderings))
