"""Seeded random planner inputs for differential testing."""

from __future__ import annotations

import random

from dlplan.optimizer import oracle_work
from dlplan.plan import all_arguments, make_planner_input
from dlplan.preference import COST_FUNCTIONS, Strategy
from dlplan.program import parse_program

VARS = "XYZUVW"


def random_program_text(rng: random.Random, max_rules=4, max_body=5, max_preds=8) -> str:
    n_preds = rng.randint(2, max_preds)
    names = [f"p{k}" for k in range(n_preds)]
    arity = {n: rng.randint(1, 3) for n in names}
    lines = []
    for _ in range(rng.randint(1, max_rules)):
        body = []
        for _ in range(rng.randint(1, max_body)):
            n = rng.choice(names)
            terms = [rng.choice(VARS[:4]) if rng.random() < 0.85 else str(rng.randint(0, 2))
                     for _ in range(arity[n])]
            body.append(f"{n}({','.join(terms)})")
        variables = sorted({t for b in body for t in b[b.index("(") + 1:-1].split(",") if t.isupper()})
        head = rng.choice(names)
        head_terms = [rng.choice(variables) if variables else "0" for _ in range(arity[head])]
        lines.append(f"{head}({','.join(head_terms)}) :- {', '.join(body)}.")
    return "\n".join(lines) + "\n"


def random_input(rng: random.Random, work_limit: int = 60_000, **shape):
    """A random planner input whose exhaustive enumeration stays below ``work_limit``.

    Draws are repeated until the limit holds, so the accepted inputs are
    those the oracle can certify quickly.
    """
    while True:
        prog = parse_program(random_program_text(rng, **shape))
        args = sorted(all_arguments(prog), key=lambda a: (a[0].name, a[1]))
        costs = {a: rng.randint(0, 20) for a in args}
        keys = [a for a in args if rng.random() < 0.3]
        fixed = [a for a in args if rng.random() < 0.08]
        k = rng.randint(1, 4)
        strategy = Strategy(tuple(rng.sample(COST_FUNCTIONS, k)))
        positions = {}
        for r in prog.rules:
            if len(r.body) > 1 and rng.random() < 0.2:
                positions[r.id] = {rng.randrange(len(r.body)): rng.randint(1, len(r.body))}
        inp = make_planner_input(prog, strategy, fixed_positions=positions, fixed_indices=fixed,
                                 keys=keys, index_costs=costs)
        if oracle_work(inp) <= work_limit:
            return inp
