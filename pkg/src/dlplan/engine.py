"""Semi-naive bottom-up evaluation driven by an evaluation plan.

Bodies are joined strictly in plan order. A body atom is fetched through a
hash index only when one of its arguments is indexBound at its position;
otherwise the relation (or the relevant delta slice) is scanned. Indices exist
exactly for the (predicate, argument) pairs the plan actually uses.
"""

from __future__ import annotations

import time
from bisect import bisect_left
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

from .admissibility import components
from .plan import Arg, EvaluationPlan, Ordering, PlanError, sorted_args
from .program import Atom, Constant, Predicate, Program, Rule, strata, validate_for_planning


class IndexedRelation:
    """Deduplicated, insertion-ordered tuple store with per-argument hash indices.

    Tuple ids are insertion positions, so every index bucket is sorted and a
    slice ``[lo, hi)`` of the store (the delta of a round, say) can be cut out
    of a bucket with two bisections.
    """

    def __init__(self, predicate: Predicate, indexed: Iterable[int] = ()):
        self.predicate = predicate
        self.tuples: list[tuple] = []
        self.members: dict[tuple, int] = {}
        self.indices: dict[int, dict[object, list[int]]] = {}
        for i in indexed:
            self.add_index(i)

    def __len__(self) -> int:
        return len(self.tuples)

    def __contains__(self, t: tuple) -> bool:
        return t in self.members

    def add_index(self, arg: int) -> None:
        """Create the index on 1-based argument ``arg`` (no-op if present)."""
        if arg in self.indices:
            return
        idx: dict[object, list[int]] = {}
        col = arg - 1
        for tid, t in enumerate(self.tuples):
            idx.setdefault(t[col], []).append(tid)
        self.indices[arg] = idx

    def add(self, t: tuple) -> bool:
        if t in self.members:
            return False
        tid = len(self.tuples)
        self.members[t] = tid
        self.tuples.append(t)
        for arg, idx in self.indices.items():
            bucket = idx.get(t[arg - 1])
            if bucket is None:
                idx[t[arg - 1]] = [tid]
            else:
                bucket.append(tid)
        return True

    def distinct(self, arg: int) -> int:
        return len(self.indices[arg])

    def lookup(self, arg: int, value, lo: int, hi: int) -> list[tuple]:
        bucket = self.indices[arg].get(value)
        if not bucket:
            return []
        a = bisect_left(bucket, lo) if lo else 0
        b = len(bucket) if hi >= len(self.tuples) else bisect_left(bucket, hi, a)
        tuples = self.tuples
        return [tuples[t] for t in bucket[a:b]]

    def scan(self, lo: int, hi: int) -> list[tuple]:
        return self.tuples[lo:hi]

    def index_entries(self) -> int:
        return len(self.tuples) * len(self.indices)


@dataclass
class EvaluationMetrics:
    index_entries: int = 0
    indices_created: int = 0
    join_iterations: int = 0
    derived_tuples: int = 0
    rounds: int = 0
    stored_tuples: int = 0
    wall_time: float = 0.0
    indices: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class EvaluationResult:
    model: dict[Predicate, set[tuple]]
    metrics: EvaluationMetrics

    def atoms(self) -> set[Atom]:
        return {Atom(p, tuple(Constant(v) for v in t)) for p, ts in self.model.items() for t in ts}

    def relation(self, pred: Predicate) -> set[tuple]:
        return self.model.get(pred, set())


# --------------------------------------------------------------------------
# rule compilation

class _Step:
    """One body atom in join order."""

    __slots__ = ("pred", "arity", "recursive", "probe", "checks", "consts", "dups", "binds", "atom")

    def __init__(self, atom: Atom, slots: dict, indexed: set[Arg], recursive: bool):
        self.atom = atom
        self.pred = atom.predicate
        self.arity = atom.predicate.arity
        self.recursive = recursive
        self.probe: list[tuple[int, object, bool]] = []   # (arg, slot-or-const, is_const)
        self.checks: list[tuple[int, int]] = []            # (col, slot)
        self.consts: list[tuple[int, object]] = []         # (col, value)
        self.dups: list[tuple[int, int]] = []              # (col, earlier col)
        self.binds: list[int] = []                         # cols copied into new slots
        local: dict = {}
        for col, t in enumerate(atom.terms):
            arg = col + 1
            if isinstance(t, Constant):
                self.consts.append((col, t.value))
                if (self.pred, arg) in indexed:
                    self.probe.append((arg, t.value, True))
            elif t in slots:
                self.checks.append((col, slots[t]))
                if (self.pred, arg) in indexed:
                    self.probe.append((arg, slots[t], False))
            elif t in local:
                self.dups.append((col, local[t]))
            else:
                local[t] = col
                self.binds.append(col)
        for t, col in local.items():
            slots[t] = len(slots)


class _CompiledRule:
    def __init__(self, rule: Rule, sequence: tuple[int, ...], indexed: set[Arg], recursive: frozenset):
        self.rule = rule
        slots: dict = {}
        self.steps = []
        for k in sequence:
            atom = rule.body[k]
            self.steps.append(_Step(atom, slots, indexed, atom.predicate in recursive))
        self.negative = [self._template(a, slots) for a in rule.negative]
        self.head = self._template(rule.head, slots)
        self.head_pred = rule.head.predicate
        self.has_recursive = any(s.recursive for s in self.steps)

    @staticmethod
    def _template(atom: Atom, slots: dict):
        return atom.predicate, tuple((True, t.value) if isinstance(t, Constant) else (False, slots[t]) for t in atom.terms)


def _index_usage(rule: Rule, ordering: Ordering, schema: frozenset) -> set[Arg]:
    """Schema entries that are indexBound somewhere in this rule under ``ordering``."""
    used = set()
    seen: set = set()
    for k in ordering.sequence:
        atom = rule.body[k]
        for i, t in enumerate(atom.terms, start=1):
            if (isinstance(t, Constant) or t in seen) and (atom.predicate, i) in schema:
                used.add((atom.predicate, i))
        seen.update(atom.terms)
    return used


def source_order_grouped(rule: Rule) -> Ordering:
    """Source order with each connected component made contiguous."""
    comps = sorted(components(rule), key=min)
    return Ordering.from_sequence(rule.id, [k for c in comps for k in sorted(c)])


def _bound_arguments_of(rule: Rule, ordering: Ordering) -> set[Arg]:
    out = set()
    seen: set = set()
    for k in ordering.sequence:
        atom = rule.body[k]
        for i, t in enumerate(atom.terms, start=1):
            if isinstance(t, Constant) or t in seen:
                out.add((atom.predicate, i))
        seen.update(atom.terms)
    return out


def default_policy_plan(program: Program, facts: Iterable[Atom] = ()) -> EvaluationPlan:
    """Baseline configuration without a planner.

    Each rule keeps its source order with components regrouped, and every
    argument that is bound at its position gets an index. The choice is made
    rule by rule; nothing is coordinated across rules.
    """
    schema: set[Arg] = set()
    orderings = []
    for rule in validate_for_planning(program):
        o = source_order_grouped(rule)
        orderings.append(o)
        schema |= _bound_arguments_of(rule, o)
    return EvaluationPlan(frozenset(schema), tuple(orderings))


# --------------------------------------------------------------------------
# evaluation

class _Evaluator:
    def __init__(self, program: Program, plan: EvaluationPlan, facts: Iterable[Atom]):
        self.program = program
        self.metrics = EvaluationMetrics()
        orderings = plan.ordering_map()
        known = {r.id: r for r in program.rules}
        for rid, o in orderings.items():
            if rid not in known:
                raise PlanError(f"plan orders unknown rule {rid}")
            if len(o.positions) != len(known[rid].body):
                raise PlanError(f"plan ordering for rule {rid} does not match its body")

        self.orders: dict[int, Ordering] = {}
        schema = set(plan.schema)
        used: set[Arg] = set()
        for rule in program.rules:
            o = orderings.get(rule.id)
            if o is None:
                # rules outside the plan (e.g. with negation) get the baseline treatment
                o = source_order_grouped(rule)
                schema |= _bound_arguments_of(rule, o)
            self.orders[rule.id] = o
            used |= _index_usage(rule, o, frozenset(schema))
        self.indexed = used

        self.relations: dict[Predicate, IndexedRelation] = {}
        for p in program.predicates.values():
            self._relation(p)
        for f in list(program.facts) + list(facts):
            self._relation(f.predicate).add(f.values())
        for p, i in sorted_args(used):
            self.relations[p].add_index(i)
        self.metrics.indices_created = len(used)
        self.metrics.indices = [f"{p.name}[{i}]" for p, i in sorted_args(used)]

    def _relation(self, p: Predicate) -> IndexedRelation:
        rel = self.relations.get(p)
        if rel is None:
            rel = self.relations[p] = IndexedRelation(p)
        return rel

    def run(self, semi_naive: bool = True) -> EvaluationResult:
        start = time.perf_counter()
        for stratum in strata(self.program):
            self._stratum(stratum, semi_naive)
        m = self.metrics
        m.wall_time = time.perf_counter() - start
        m.index_entries = sum(r.index_entries() for r in self.relations.values())
        m.stored_tuples = sum(len(r) for r in self.relations.values())
        model = {p: set(r.tuples) for p, r in self.relations.items() if r.tuples}
        return EvaluationResult(model, m)

    def _stratum(self, rules: list[Rule], semi_naive: bool) -> None:
        heads = frozenset(r.head.predicate for r in rules)
        compiled = [_CompiledRule(r, self.orders[r.id].sequence, self.indexed, heads) for r in rules]
        recursive = any(c.has_recursive for c in compiled)
        snapshot = {p: len(self.relations[p]) for p in heads}
        self.metrics.rounds += 1
        for c in compiled:
            self._fire(c, None, snapshot, snapshot)
        if not recursive:
            return
        while True:
            current = {p: len(self.relations[p]) for p in heads}
            if current == snapshot:
                return
            self.metrics.rounds += 1
            for c in compiled:
                if not semi_naive:
                    self._fire(c, None, current, current)
                elif c.has_recursive:
                    for k, step in enumerate(c.steps):
                        if step.recursive:
                            self._fire(c, k, snapshot, current)
            snapshot = current

    def _fire(self, c: _CompiledRule, delta: Optional[int], old: dict, new: dict) -> None:
        """Evaluate one rule. With ``delta=k`` the k-th step reads only the last
        round's new tuples, recursive steps before it read the old state and
        those after it the new state."""
        rows: list[tuple] = [()]
        metrics = self.metrics
        seen_delta = False
        for k, step in enumerate(c.steps):
            rel = self.relations[step.pred]
            if step.recursive:
                if delta is None:
                    lo, hi = 0, new[step.pred]
                elif k == delta:
                    lo, hi = old[step.pred], new[step.pred]
                    seen_delta = True
                elif seen_delta:
                    lo, hi = 0, new[step.pred]
                else:
                    lo, hi = 0, old[step.pred]
            else:
                lo, hi = 0, len(rel)
            if lo >= hi:
                return
            rows = self._join(rows, step, rel, lo, hi)
            if not rows:
                return
        for pred, template in c.negative:
            target = self.relations[pred]
            rows = [row for row in rows if tuple(v if const else row[v] for const, v in template) not in target]
        head_rel = self.relations[c.head_pred]
        _, template = c.head
        metrics.derived_tuples += len(rows)
        for row in rows:
            head_rel.add(tuple(v if const else row[v] for const, v in template))

    def _join(self, rows: list[tuple], step: _Step, rel: IndexedRelation, lo: int, hi: int) -> list[tuple]:
        probe = None
        if step.probe:
            # most selective usable index; ties go to the lowest argument
            probe = max(step.probe, key=lambda p: (rel.distinct(p[0]), -p[0]))
        checks, consts, dups, binds = step.checks, step.consts, step.dups, step.binds
        out = []
        examined = 0
        if probe is not None:
            arg, src, is_const = probe
            col = arg - 1
            checks = [c for c in checks if c[0] != col]
            consts = [c for c in consts if c[0] != col]
            if is_const:
                candidates = rel.lookup(arg, src, lo, hi)
        else:
            candidates = rel.scan(lo, hi)
        for row in rows:
            if probe is not None and not is_const:
                candidates = rel.lookup(arg, row[src], lo, hi)
            examined += len(candidates)
            for t in candidates:
                if checks and any(t[col] != row[s] for col, s in checks):
                    continue
                if consts and any(t[col] != v for col, v in consts):
                    continue
                if dups and any(t[col] != t[e] for col, e in dups):
                    continue
                out.append(row + tuple(t[col] for col in binds) if binds else row)
        self.metrics.join_iterations += examined
        return out


def evaluate(
    program: Program,
    plan: Optional[EvaluationPlan] = None,
    facts: Iterable[Atom] = (),
    semi_naive: bool = True,
) -> EvaluationResult:
    """Compute the minimal model of ``program`` over its facts plus ``facts``.

    Without a plan the baseline from :func:`default_policy_plan` is used.
    Negated atoms are evaluated last in their body as membership tests,
    stratum by stratum.
    """
    if plan is None:
        plan = default_policy_plan(program)
    return _Evaluator(program, plan, facts).run(semi_naive)
