"""Datalog program model: terms, atoms, rules, the parser and predicate metadata."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

import networkx as nx


class DatalogError(Exception):
    """Base class for every error raised while reading or checking a program."""


class DatalogSyntaxError(DatalogError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class ArityError(DatalogError):
    pass


class UnsafeRuleError(DatalogError):
    def __init__(self, rule_text: str, variable: str):
        super().__init__(f"unsafe rule {rule_text}: variable {variable} does not occur in the positive body")
        self.variable = variable


class StratificationError(DatalogError):
    pass


@dataclass(frozen=True, order=True)
class Predicate:
    name: str
    arity: int

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Constant:
    # ints for integers, str for symbols; quoted strings keep their quotes so
    # that the symbol a and the string "a" stay distinct values.
    value: Union[int, str]

    def __str__(self) -> str:
        return str(self.value)


Term = Union[Variable, Constant]


@dataclass(frozen=True)
class Atom:
    predicate: Predicate
    terms: tuple[Term, ...]

    def __post_init__(self):
        if len(self.terms) != self.predicate.arity:
            raise ArityError(f"{self.predicate} applied to {len(self.terms)} terms")

    @property
    def text(self) -> str:
        """Whitespace-free surface form, e.g. ``a(X,Y)``."""
        if not self.terms:
            return self.predicate.name
        return f"{self.predicate.name}({','.join(str(t) for t in self.terms)})"

    def variables(self) -> set[Variable]:
        return {t for t in self.terms if isinstance(t, Variable)}

    def is_ground(self) -> bool:
        return all(isinstance(t, Constant) for t in self.terms)

    def values(self) -> tuple:
        """The constant values of a ground atom, as a tuple."""
        return tuple(t.value for t in self.terms)

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class Rule:
    id: int
    head: Atom
    body: tuple[Atom, ...]
    negative: tuple[Atom, ...] = ()
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)

    @property
    def text(self) -> str:
        lits = [a.text for a in self.body] + ["not " + a.text for a in self.negative]
        return f"{self.head.text}:-{','.join(lits)}."

    def variables(self) -> set[Variable]:
        out = set(self.head.variables())
        for a in self.body + self.negative:
            out |= a.variables()
        return out

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class Program:
    rules: tuple[Rule, ...]
    facts: tuple[Atom, ...]
    predicates: dict[str, Predicate]
    idb: frozenset[Predicate]
    source: str = field(default="", compare=False, repr=False)

    @property
    def edb(self) -> frozenset[Predicate]:
        return frozenset(p for p in self.predicates.values() if p not in self.idb)

    def is_edb(self, pred: Predicate) -> bool:
        return pred not in self.idb

    @property
    def recursive(self) -> frozenset[Predicate]:
        return recursive_predicates(self)

    def facts_by_predicate(self) -> dict[Predicate, list[tuple]]:
        out: dict[Predicate, list[tuple]] = {}
        for f in self.facts:
            out.setdefault(f.predicate, []).append(f.values())
        return out

    def with_facts(self, facts: Iterable[Atom]) -> Program:
        """A copy of this program extended by extra database facts."""
        facts = tuple(facts)
        preds = dict(self.predicates)
        for f in facts:
            _register(preds, f.predicate)
        return Program(self.rules, self.facts + facts, preds, self.idb, self.source)

    def to_text(self) -> str:
        lines = [f.text + "." for f in self.facts]
        lines += [r.text for r in self.rules]
        return "\n".join(lines) + ("\n" if lines else "")


# --------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<if>:-)
  | (?P<lpar>\()
  | (?P<rpar>\))
  | (?P<comma>,)
  | (?P<dot>\.)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<int>-?\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_']*)
  | (?P<ident>[a-z][A-Za-z0-9_']*)
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    offset: int
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DatalogSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, m.group(), pos, line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", pos, line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, allow_negation: bool):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.allow_negation = allow_negation
        self.predicates: dict[str, Predicate] = {}
        self._anon = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            found = tok.text or "end of input"
            raise DatalogSyntaxError(f"expected {what}, found {found!r}", tok.line, tok.column)
        return tok

    def term(self) -> Term:
        tok = self.next()
        if tok.kind == "var":
            if tok.text == "_":
                self._anon += 1
                return Variable(f"_{self._anon}")
            return Variable(tok.text)
        if tok.kind == "int":
            return Constant(int(tok.text))
        if tok.kind in ("ident", "string"):
            return Constant(tok.text)
        raise DatalogSyntaxError(f"expected a term, found {tok.text or 'end of input'!r}", tok.line, tok.column)

    def atom(self) -> Atom:
        tok = self.expect("ident", "a predicate name")
        terms: list[Term] = []
        if self.peek().kind == "lpar":
            self.next()
            if self.peek().kind != "rpar":
                terms.append(self.term())
                while self.peek().kind == "comma":
                    self.next()
                    terms.append(self.term())
            self.expect("rpar", "')'")
        pred = Predicate(tok.text, len(terms))
        known = self.predicates.get(pred.name)
        if known is not None and known.arity != pred.arity:
            raise ArityError(
                f"{tok.line}:{tok.column}: predicate {pred.name} used with arity {pred.arity} "
                f"and {known.arity}"
            )
        self.predicates[pred.name] = pred
        return Atom(pred, tuple(terms))

    def statements(self) -> Iterator[tuple[Atom, list[Atom], list[Atom], tuple[int, int]]]:
        while self.peek().kind != "eof":
            start = self.peek()
            if start.kind == "if":
                raise DatalogSyntaxError("constraints (rules without head) are not Datalog", start.line, start.column)
            head = self.atom()
            body: list[Atom] = []
            negative: list[Atom] = []
            if self.peek().kind == "if":
                self.next()
                while True:
                    tok = self.peek()
                    if tok.kind == "ident" and tok.text == "not" and self.tokens[self.i + 1].kind == "ident":
                        self.next()
                        if not self.allow_negation:
                            raise DatalogSyntaxError(
                                "negative literals are not supported by the planner", tok.line, tok.column
                            )
                        negative.append(self.atom())
                    else:
                        body.append(self.atom())
                    if self.peek().kind == "comma":
                        self.next()
                        continue
                    break
                if not body:
                    raise DatalogSyntaxError("rule body has no positive atom", start.line, start.column)
            end = self.expect("dot", "'.'")
            yield head, body, negative, (start.offset, end.offset + 1)


def parse_program(text: str, allow_negation: bool = False) -> Program:
    """Parse Datalog source into a :class:`Program`.

    Rules get dense ids in source order starting at 0. Ground statements with
    no body are facts. With ``allow_negation=False`` (the planner profile) any
    ``not`` literal is a syntax error.
    """
    parser = _Parser(text, allow_negation)
    rules: list[Rule] = []
    facts: list[Atom] = []
    for head, body, negative, span in parser.statements():
        if not body:
            if not head.is_ground():
                var = sorted(v.name for v in head.variables())[0]
                raise UnsafeRuleError(head.text + ".", var)
            facts.append(head)
            continue
        rule = Rule(len(rules), head, tuple(body), tuple(negative), span)
        _check_safety(rule)
        rules.append(rule)
    idb = frozenset(r.head.predicate for r in rules)
    return Program(tuple(rules), tuple(facts), parser.predicates, idb, text)


def parse_facts(text: str) -> list[Atom]:
    """Parse a database file; every statement must be a ground fact."""
    prog = parse_program(text)
    if prog.rules:
        r = prog.rules[0]
        raise DatalogError(f"database file contains a rule: {r.text}")
    return list(prog.facts)


def _check_safety(rule: Rule) -> None:
    positive: set[Variable] = set()
    for a in rule.body:
        positive |= a.variables()
    # report in order of appearance for a stable message
    for atom in (rule.head,) + rule.negative:
        for t in atom.terms:
            if isinstance(t, Variable) and t not in positive:
                raise UnsafeRuleError(rule.text, t.name)


def _register(preds: dict[str, Predicate], pred: Predicate) -> None:
    known = preds.get(pred.name)
    if known is not None and known.arity != pred.arity:
        raise ArityError(f"predicate {pred.name} used with arity {pred.arity} and {known.arity}")
    preds[pred.name] = pred


def make_program(rules: Iterable[Rule], facts: Iterable[Atom] = ()) -> Program:
    """Assemble a program from already-built rules (ids are reassigned densely)."""
    preds: dict[str, Predicate] = {}
    out = []
    for i, r in enumerate(rules):
        for a in (r.head,) + r.body + r.negative:
            _register(preds, a.predicate)
        out.append(Rule(i, r.head, r.body, r.negative))
        _check_safety(out[-1])
    facts = tuple(facts)
    for f in facts:
        _register(preds, f.predicate)
    return Program(tuple(out), facts, preds, frozenset(r.head.predicate for r in out))


# --------------------------------------------------------------------------
# planning profile and recursion analysis

def validate_for_planning(program: Program) -> list[Rule]:
    """Rules the planner works on: every rule with a non-empty positive body."""
    return [r for r in program.rules if r.body and not r.negative]


def dependency_graph(program: Program) -> nx.DiGraph:
    """Edge q -> p whenever q occurs in the body of a rule defining p.

    Edges carry ``negative=True`` when some occurrence is under ``not``.
    """
    g = nx.DiGraph()
    g.add_nodes_from(program.predicates.values())
    for r in program.rules:
        p = r.head.predicate
        for a in r.body:
            if not g.has_edge(a.predicate, p):
                g.add_edge(a.predicate, p, negative=False)
        for a in r.negative:
            g.add_edge(a.predicate, p, negative=True)
    return g


def recursive_predicates(program: Program) -> frozenset[Predicate]:
    """Predicates lying on a directed cycle of the dependency graph (self-loops included)."""
    g = dependency_graph(program)
    out: set[Predicate] = set()
    for scc in nx.strongly_connected_components(g):
        if len(scc) > 1:
            out |= scc
        else:
            (p,) = scc
            if g.has_edge(p, p):
                out.add(p)
    return frozenset(out)


def strata(program: Program) -> list[list[Rule]]:
    """Group rules into evaluation strata in dependency order.

    Each stratum holds the rules of one strongly connected component of the
    dependency graph. Raises :class:`StratificationError` when a negative edge
    closes a cycle.
    """
    g = dependency_graph(program)
    cond = nx.condensation(g)
    members = cond.graph["mapping"]
    for q, p, data in g.edges(data=True):
        if data["negative"] and members[q] == members[p]:
            raise StratificationError(f"{q} is negated inside the recursive component of {p}")
    by_component: dict[int, list[Rule]] = {}
    for r in program.rules:
        by_component.setdefault(members[r.head.predicate], []).append(r)
    order = nx.lexicographical_topological_sort(cond, key=lambda c: min(cond.nodes[c]["members"]))
    return [by_component[c] for c in order if c in by_component]
