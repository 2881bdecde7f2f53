"""Exchange with ASP solvers and Datalog engines.

* ``emit_asp_facts`` writes the planner input as ASP facts (rule/3,
  headAtom/3, bodyAtom/3, sameVariable/5, constant/3, relation/2, index/3,
  fixedPosition/3, fixedIndex/2, key/2, priorityCostFunction/2).
* ``parse_plan_answer`` reads the setIndex/2 and pos/3 atoms of an answer set.
* ``emit_annotations`` writes the program back with ``%@order`` and
  ``%@index`` comment directives.
"""

from __future__ import annotations

import re
from typing import Iterable, Optional

from .plan import Arg, EvaluationPlan, Ordering, PlanError, PlannerInput, plan_wellformed, sorted_args
from .preference import Strategy
from .program import Constant, DatalogError, Program, Rule, Variable, parse_program, validate_for_planning


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def rule_facts(rule: Rule) -> list[str]:
    rid = rule.id
    lines = [f"rule({rid},{_q(rule.text)},{len(rule.body)})."]
    lines.append(f"headAtom({rid},{_q(rule.head.text)},{_q(str(rule.head.predicate))}).")
    for atom in rule.body:
        lines.append(f"bodyAtom({rid},{_q(atom.text)},{_q(str(atom.predicate))}).")
    atoms = (rule.head,) + rule.body
    for x in range(len(atoms)):
        for y in range(x + 1, len(atoms)):
            a, b = atoms[x], atoms[y]
            for i, s in enumerate(a.terms, start=1):
                if not isinstance(s, Variable):
                    continue
                for j, t in enumerate(b.terms, start=1):
                    if s == t:
                        lines.append(f"sameVariable({rid},{_q(a.text)},{i},{_q(b.text)},{j}).")
    for atom in atoms:
        for i, t in enumerate(atom.terms, start=1):
            if isinstance(t, Constant):
                lines.append(f"constant({rid},{_q(atom.text)},{i}).")
    return lines


def emit_asp_facts(inp: PlannerInput) -> str:
    program = inp.program
    lines: list[str] = []
    for rule in validate_for_planning(program):
        lines += rule_facts(rule)
    for p in sorted(program.predicates.values()):
        lines.append(f"relation({_q(str(p))},{p.arity}).")
    for p, i in sorted_args(inp.index_costs):
        lines.append(f"index({_q(str(p))},{i},{inp.index_costs[(p, i)]}).")
    rules = {r.id: r for r in program.rules}
    for rid in sorted(inp.position_assignments):
        for atom, pos in sorted(inp.position_assignments[rid].fixed.items(), key=lambda kv: kv[1]):
            lines.append(f"fixedPosition({rid},{_q(rules[rid].body[atom].text)},{pos}).")
    for p, i in sorted_args(inp.fixed_indices):
        lines.append(f"fixedIndex({_q(str(p))},{i}).")
    for p, i in sorted_args(inp.keys):
        lines.append(f"key({_q(str(p))},{i}).")
    for n, level in inp.strategy.priorities():
        lines.append(f"priorityCostFunction({n},{level}).")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# answer sets

_ANSWER_ATOM = re.compile(r'([A-Za-z_]\w*)\(((?:"(?:[^"\\]|\\.)*"|[^()"])*)\)')
_ARG = re.compile(r'\s*("(?:[^"\\]|\\.)*"|[^,]+)\s*(?:,|$)')


def _unquote(s: str) -> str:
    if len(s) < 2 or s[0] != '"' or s[-1] != '"':
        raise PlanError(f"expected a quoted string, found {s}")
    return re.sub(r"\\(.)", r"\1", s[1:-1])


def _split_args(text: str) -> list[str]:
    out = []
    pos = 0
    while pos < len(text):
        m = _ARG.match(text, pos)
        if m is None or m.end() == pos:
            raise PlanError(f"malformed arguments: {text}")
        out.append(m.group(1).strip())
        pos = m.end()
    return out


def _resolve_predicate(program: Program, text: str):
    name, _, arity = text.rpartition("/")
    pred = program.predicates.get(name)
    if pred is None or str(pred.arity) != arity:
        raise PlanError(f"unknown predicate {text}")
    return pred


def parse_plan_answer(text: str, program: Program) -> EvaluationPlan:
    """Build a plan from ``setIndex(P,I)`` and ``pos(Atom,Rule,Pos)`` atoms."""
    rules = {r.id: r for r in validate_for_planning(program)}
    schema: set[Arg] = set()
    placed: dict[int, dict[int, int]] = {rid: {} for rid in rules}
    pos = 0
    for m in _ANSWER_ATOM.finditer(text):
        gap = text[pos:m.start()]
        if gap.strip():
            raise PlanError(f"malformed atom near {gap.strip()!r}")
        pos = m.end()
        name, args = m.group(1), _split_args(m.group(2))
        try:
            if name == "setIndex" and len(args) == 2:
                pred = _resolve_predicate(program, _unquote(args[0]))
                i = int(args[1])
                if not 1 <= i <= pred.arity:
                    raise PlanError(f"setIndex argument {i} out of range for {pred}")
                schema.add((pred, i))
            elif name == "pos" and len(args) == 3:
                atom_text, rid, p = _unquote(args[0]), int(args[1]), int(args[2])
                if rid not in rules:
                    raise PlanError(f"pos atom names unknown rule {rid}")
                slot = placed[rid]
                body = rules[rid].body
                free = [k for k, a in enumerate(body) if a.text == atom_text and k not in slot]
                if not free:
                    if any(a.text == atom_text for a in body):
                        raise PlanError(f"rule {rid}: {atom_text} placed more than once")
                    raise PlanError(f"rule {rid} has no body atom {atom_text}")
                slot[free[0]] = p
            else:
                raise PlanError(f"unexpected atom {m.group(0)}")
        except ValueError:
            raise PlanError(f"malformed atom {m.group(0)}") from None
    if text[pos:].strip():
        raise PlanError(f"malformed atom near {text[pos:].strip()!r}")
    orderings = []
    for rid, rule in rules.items():
        slot = placed[rid]
        n = len(rule.body)
        if not slot:
            continue
        if len(slot) != n or sorted(slot.values()) != list(range(1, n + 1)):
            raise PlanError(f"rule {rid}: pos atoms do not form a bijection onto 1..{n}")
        orderings.append(Ordering(rid, tuple(slot[k] for k in range(n))))
    plan = EvaluationPlan(frozenset(schema), tuple(orderings))
    missing = [rid for rid in rules if not placed[rid]]
    if missing:
        raise PlanError(f"answer has no pos atoms for rule(s) {', '.join(map(str, missing))}")
    return plan


def format_plan_answer(plan: EvaluationPlan, program: Program) -> str:
    """Render a plan as the setIndex/pos atoms a solver would report."""
    rules = {r.id: r for r in program.rules}
    parts = [f"setIndex({_q(str(p))},{i})" for p, i in sorted_args(plan.schema)]
    for o in plan.orderings:
        body = rules[o.rule_id].body
        for k in o.sequence:
            parts.append(f"pos({_q(body[k].text)},{o.rule_id},{o.positions[k]})")
    return " ".join(parts)


# --------------------------------------------------------------------------
# annotations

def emit_annotations(program: Program, plan: EvaluationPlan) -> str:
    """The program source with an ordering directive before each planned rule
    and one index directive per schema entry at the top."""
    header = ["% evaluation plan annotations"]
    header += [f"%@index({p},{i})." for p, i in sorted_args(plan.schema)]
    src = program.source or program.to_text()
    orderings = plan.ordering_map()
    inserts = []
    for rule in program.rules:
        o = orderings.get(rule.id)
        if o is None:
            continue
        atoms = ",".join(rule.body[k].text for k in o.sequence)
        directive = f"%@order({rule.id},[{atoms}])."
        start = rule.span[0] if program.source else None
        inserts.append((start, rule.id, directive))
    if not program.source:
        # synthesised text: rules follow the facts, one per line
        lines = src.splitlines()
        offset = len(program.facts)
        for _, rid, directive in sorted(inserts, key=lambda t: t[1], reverse=True):
            lines.insert(offset + rid, directive)
        return "\n".join(header + lines) + "\n"
    out = src
    for start, _, directive in sorted(inserts, key=lambda t: t[0], reverse=True):
        line_start = out.rfind("\n", 0, start) + 1
        if out[line_start:start].strip():
            out = out[:start] + "\n" + directive + "\n" + out[start:]
        else:
            out = out[:line_start] + out[line_start:start] + directive + "\n" + out[start:]
    if out and not out.endswith("\n"):
        out += "\n"
    return "\n".join(header) + "\n" + out


# --------------------------------------------------------------------------
# constraint files

def read_constraints(text: str, program: Program) -> dict:
    """Planner constraints given as facts in the same vocabulary as the emitter.

    Recognised: fixedPosition/3, fixedIndex/2, key/2, index/3,
    priorityCostFunction/2; relation/2 is accepted and ignored.
    """
    try:
        facts = parse_program(text).facts
    except DatalogError as exc:
        raise PlanError(f"constraint file: {exc}") from None
    rules = {r.id: r for r in program.rules}
    out: dict = {"fixed_positions": {}, "fixed_indices": set(), "keys": set(), "index_costs": {}, "priorities": []}

    def arg_of(pred_term, i_term) -> Arg:
        pred = _resolve_predicate(program, _unquote(str(pred_term.value)))
        i = i_term.value
        if not isinstance(i, int) or not 1 <= i <= pred.arity:
            raise PlanError(f"argument {i} out of range for {pred}")
        return (pred, i)

    for f in facts:
        name, t = f.predicate.name, f.terms
        if name == "fixedPosition" and len(t) == 3:
            rid, atom_text, p = t[0].value, _unquote(str(t[1].value)), t[2].value
            if rid not in rules:
                raise PlanError(f"fixedPosition names unknown rule {rid}")
            slot = out["fixed_positions"].setdefault(rid, {})
            ks = [k for k, a in enumerate(rules[rid].body) if a.text == atom_text and k not in slot]
            if not ks:
                raise PlanError(f"fixedPosition: rule {rid} has no (unfixed) body atom {atom_text}")
            slot[ks[0]] = p
        elif name == "fixedIndex" and len(t) == 2:
            out["fixed_indices"].add(arg_of(t[0], t[1]))
        elif name == "key" and len(t) == 2:
            out["keys"].add(arg_of(t[0], t[1]))
        elif name == "index" and len(t) == 3:
            out["index_costs"][arg_of(t[0], t[1])] = t[2].value
        elif name == "priorityCostFunction" and len(t) == 2:
            out["priorities"].append((t[0].value, t[1].value))
        elif name == "relation" and len(t) == 2:
            continue
        else:
            raise PlanError(f"constraint file: unexpected fact {f.text}")
    return out


def strategy_from_priorities(priorities: Iterable[tuple[int, int]]) -> Optional[Strategy]:
    """Invert priorityCostFunction facts: higher level comes first."""
    pairs = sorted(priorities, key=lambda np: -np[1])
    if not pairs:
        return None
    return Strategy(tuple(f"w{n}" for n, _ in pairs))


def validated_answer(text: str, inp: PlannerInput) -> EvaluationPlan:
    plan = parse_plan_answer(text, inp.program)
    ok, problems = plan_wellformed(plan, inp)
    if not ok:
        raise PlanError("; ".join(problems))
    return plan
