"""Desk-scale benchmarks: planner-driven versus baseline evaluation.

Each suite generates a program and a synthetic database of roughly ``size``
facts. Index costs for the planner come from a small sample database of the
same shape, evaluated once so that intensional relations get size estimates
too, then scaled up to the target size.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .engine import default_policy_plan, evaluate
from .optimizer import optimize
from .plan import make_planner_input
from .preference import Strategy
from .program import Atom, Constant, Predicate, Program, parse_program
from .stats import derive_planner_inputs, stats_for

MAX_SIZE = 2_000_000
DEFAULT_SAMPLE = 1000
DEFAULT_SEED = 20190909


class BenchError(ValueError):
    pass


def _facts(pred: Predicate, rows) -> list[Atom]:
    return [Atom(pred, tuple(Constant(int(v)) for v in row)) for row in rows]


STAR_JOIN = """
q1(X,A) :- f(X,K1,K2,K3), d1(K1,A).
q2(X,B) :- d2(K2,B), f(X,K1,K2,K3).
q3(X,C) :- f(X,K1,K2,K3), d3(K3,C), d2(K2,B).
q4(X) :- f(X,K1,K2,K3), d1(K1,0).
"""


def star_join(size: int, rng: np.random.Generator) -> tuple[Program, list[Atom]]:
    prog = parse_program(STAR_JOIN)
    P = prog.predicates
    dim = size // 10
    n_fact = size - 3 * dim
    facts = []
    if dim:
        keys = np.arange(dim)
        for name in ("d1", "d2", "d3"):
            facts += _facts(P[name], zip(keys, rng.integers(0, 10, dim)))
        cols = [rng.integers(0, dim, n_fact) for _ in range(3)]
        facts += _facts(P["f"], zip(np.arange(n_fact), *cols))
    else:
        facts += _facts(P["f"], ((i, 0, 0, 0) for i in range(n_fact)))
    return prog, facts


CHAIN_JOIN = """
p1(X,W) :- e1(X,Y), e2(Y,Z), e3(Z,W).
p2(X,W) :- e3(Z,W), e2(Y,Z), e1(X,Y).
p3(X,Z) :- e2(Y,Z), e1(X,Y).
"""


def chain_join(size: int, rng: np.random.Generator) -> tuple[Program, list[Atom]]:
    prog = parse_program(CHAIN_JOIN)
    P = prog.predicates
    per = size // 3
    facts = []
    dom = max(per, 1)
    for name in ("e1", "e2", "e3"):
        facts += _facts(P[name], zip(rng.integers(0, dom, per), rng.integers(0, dom, per)))
    facts += _facts(P["e1"], ((0, 0),) * (size - 3 * per))
    return prog, facts


TRANSITIVE_CLOSURE = """
t(X,Y) :- e(X,Y).
t(X,Y) :- e(X,Z), t(Z,Y).
"""


def transitive_closure(size: int, rng: np.random.Generator) -> tuple[Program, list[Atom]]:
    """A forest of short paths keeps the closure linear in the edge count."""
    prog = parse_program(TRANSITIVE_CLOSURE)
    edges = []
    node = 0
    while len(edges) < size:
        length = int(rng.integers(2, 9))
        for _ in range(min(length, size - len(edges))):
            edges.append((node, node + 1))
            node += 1
        node += 1
    return prog, _facts(prog.predicates["e"], edges)


LUBM_MICRO = """
% a small university ontology, already in Datalog form
student(X) :- takesCourse(X,C), course(C).
faculty(X) :- teacherOf(X,C).
member(X,D) :- worksFor(X,D).
member(X,D) :- memberOf(X,D).
suborg(X,Y) :- subOrganizationOf(X,Y).
suborg(X,Z) :- subOrganizationOf(X,Y), suborg(Y,Z).
chair(X) :- headOf(X,D), worksFor(X,D).
taughtBy(S,P) :- takesCourse(S,C), teacherOf(P,C).
univMember(X,U) :- member(X,D), suborg(D,U).
advisedByTeacher(S,P) :- advisor(S,P), taughtBy(S,P), faculty(P).
"""


def lubm_micro(size: int, rng: np.random.Generator) -> tuple[Program, list[Atom]]:
    prog = parse_program(LUBM_MICRO)
    P = prog.predicates
    # entity counts chosen so the EDB totals about `size` facts
    unit = size / 0.66
    n_univ = max(1, int(unit / 20000)) if size else 0
    n_dept = int(unit / 500)
    n_group = int(unit / 250)
    n_fac = int(unit / 50)
    n_stud = int(unit / 10)
    n_course = int(unit / 20)
    base_dept = 1_000_000
    base_group = 2_000_000
    base_fac = 3_000_000
    base_stud = 4_000_000
    base_course = 5_000_000
    facts: list[Atom] = []
    if not (n_dept and n_fac and n_stud and n_course):
        return prog, facts[:0]
    depts = base_dept + np.arange(n_dept)
    facts += _facts(P["subOrganizationOf"], zip(depts, rng.integers(0, n_univ, n_dept)))
    groups = base_group + np.arange(n_group)
    facts += _facts(P["subOrganizationOf"], zip(groups, base_dept + rng.integers(0, n_dept, n_group)))
    fac = base_fac + np.arange(n_fac)
    fac_dept = base_dept + rng.integers(0, n_dept, n_fac)
    facts += _facts(P["worksFor"], zip(fac, fac_dept))
    heads = rng.choice(n_fac, size=min(n_dept, n_fac), replace=False)
    facts += _facts(P["headOf"], ((fac[h], fac_dept[h]) for h in heads))
    courses = base_course + np.arange(n_course)
    facts += _facts(P["course"], ((c,) for c in courses))
    facts += _facts(P["teacherOf"], zip(base_fac + rng.integers(0, n_fac, n_course), courses))
    stud = base_stud + np.arange(n_stud)
    facts += _facts(P["memberOf"], zip(stud, base_dept + rng.integers(0, n_dept, n_stud)))
    taken = set()
    for s, c in zip(np.repeat(stud, 3), base_course + rng.integers(0, n_course, 3 * n_stud)):
        taken.add((int(s), int(c)))
    facts += _facts(P["takesCourse"], sorted(taken))
    advised = stud[: n_stud // 2]
    facts += _facts(P["advisor"], zip(advised, base_fac + rng.integers(0, n_fac, len(advised))))
    return prog, facts


SUITES: dict[str, Callable[[int, np.random.Generator], tuple[Program, list[Atom]]]] = {
    "star-join": star_join,
    "chain-join": chain_join,
    "transitive-closure": transitive_closure,
    "lubm-micro": lubm_micro,
}


def rng_for(seed: int, suite: str, size: int, stream: int = 0) -> np.random.Generator:
    """Independent PCG64 stream per (suite, size, stream) cell."""
    suite_id = sorted(SUITES).index(suite)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, suite_id, size, stream])))


def generate(suite: str, size: int, seed: int = DEFAULT_SEED, stream: int = 0) -> tuple[Program, list[Atom]]:
    if suite not in SUITES:
        raise BenchError(f"unknown suite {suite!r}; choose from {', '.join(sorted(SUITES))}")
    if not 0 <= size <= MAX_SIZE:
        raise BenchError(f"size {size} outside the generator budget 0..{MAX_SIZE}")
    return SUITES[suite](size, rng_for(seed, suite, size, stream))


def estimated_input(suite: str, size: int, seed: int, strategy: Strategy, sample_size: int = DEFAULT_SAMPLE):
    """Planner input whose index costs are scaled statistics of a sample run."""
    sample = min(size, sample_size)
    program, sample_facts = generate(suite, sample, seed, stream=1)
    stats = {}
    if sample_facts:
        model = evaluate(program, None, sample_facts).model
        stats = {p: stats_for(p, ts) for p, ts in model.items()}
    scale = Fraction(size, sample) if sample else Fraction(1)
    costs, keys = derive_planner_inputs(stats, scale)
    return make_planner_input(program, strategy, keys=keys, index_costs=costs)


@dataclass
class BenchRow:
    suite: str
    size: int
    facts: int
    model_size: int
    plan_index_entries: int
    baseline_index_entries: int
    plan_indices: int
    baseline_indices: int
    plan_time: float
    baseline_time: float
    planning_time: float
    plan_schema: list[str] = field(default_factory=list)
    baseline_schema: list[str] = field(default_factory=list)

    @property
    def saved_entries(self) -> int:
        return self.baseline_index_entries - self.plan_index_entries

    @property
    def memory_ratio(self) -> float:
        if not self.baseline_index_entries:
            return 1.0
        return self.plan_index_entries / self.baseline_index_entries

    @property
    def time_ratio(self) -> float:
        if not self.baseline_time:
            return 1.0
        return self.plan_time / self.baseline_time

    def deterministic(self) -> dict:
        d = asdict(self)
        for k in ("plan_time", "baseline_time", "planning_time"):
            d.pop(k)
        return d


@dataclass
class BenchReport:
    seed: int
    strategy: str
    rows: list[BenchRow]

    def format(self, timing: bool = True) -> str:
        head = f"# seed={self.seed} strategy={self.strategy}"
        cols = ["suite", "size", "facts", "model", "idx_plan", "idx_base", "entries_plan", "entries_base",
                "saved_mem%"]
        if timing:
            cols += ["time_plan", "time_base", "saved_time%", "plan_s"]
        lines = [head, "\t".join(cols)]
        for r in self.rows:
            saved = 100.0 * (1 - r.memory_ratio)
            vals = [r.suite, str(r.size), str(r.facts), str(r.model_size), str(r.plan_indices),
                    str(r.baseline_indices), str(r.plan_index_entries), str(r.baseline_index_entries),
                    f"{saved:.1f}"]
            if timing:
                vals += [f"{r.plan_time:.3f}", f"{r.baseline_time:.3f}", f"{100.0 * (1 - r.time_ratio):.1f}",
                         f"{r.planning_time:.3f}"]
            lines.append("\t".join(vals))
        return "\n".join(lines) + "\n"


def run_cell(suite: str, size: int, seed: int = DEFAULT_SEED, strategy: Optional[Strategy] = None,
             sample_size: int = DEFAULT_SAMPLE) -> BenchRow:
    strategy = strategy or Strategy.preset("sigma2")
    program, facts = generate(suite, size, seed)
    t0 = time.perf_counter()
    inp = estimated_input(suite, size, seed, strategy, sample_size)
    plan = optimize(inp)
    planning = time.perf_counter() - t0
    planned = evaluate(program, plan, facts)
    baseline = evaluate(program, default_policy_plan(program), facts)
    if planned.model != baseline.model:
        raise BenchError(f"{suite}/{size}: planned and baseline models differ")
    return BenchRow(
        suite=suite,
        size=size,
        facts=len(facts),
        model_size=sum(len(ts) for ts in planned.model.values()),
        plan_index_entries=planned.metrics.index_entries,
        baseline_index_entries=baseline.metrics.index_entries,
        plan_indices=planned.metrics.indices_created,
        baseline_indices=baseline.metrics.indices_created,
        plan_time=planned.metrics.wall_time,
        baseline_time=baseline.metrics.wall_time,
        planning_time=planning,
        plan_schema=planned.metrics.indices,
        baseline_schema=baseline.metrics.indices,
    )


def bench(suites: list[str], sizes: list[int], seed: int = DEFAULT_SEED, strategy: Optional[Strategy] = None,
          sample_size: int = DEFAULT_SAMPLE) -> BenchReport:
    strategy = strategy or Strategy.preset("sigma2")
    for s in suites:
        if s not in SUITES:
            raise BenchError(f"unknown suite {s!r}; choose from {', '.join(sorted(SUITES))}")
    rows = [run_cell(s, n, seed, strategy, sample_size) for s in suites for n in sizes]
    return BenchReport(seed, str(strategy), rows)
