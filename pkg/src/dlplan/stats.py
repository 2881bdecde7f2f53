"""Relation statistics from a sample database and the planner inputs derived from them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union

from .plan import Arg
from .program import Atom, Predicate


@dataclass(frozen=True)
class RelationStats:
    predicate: Predicate
    tuples: int
    distinct: tuple[int, ...]

    @property
    def known(self) -> bool:
        return self.tuples > 0

    @property
    def selectivity(self) -> Optional[tuple[Fraction, ...]]:
        """Distinct values over tuple count, per argument; ``None`` for an empty relation."""
        if not self.tuples:
            return None
        return tuple(Fraction(d, self.tuples) for d in self.distinct)


def collect_stats(facts: Iterable[Atom]) -> dict[Predicate, RelationStats]:
    rows: dict[Predicate, set[tuple]] = {}
    for f in facts:
        rows.setdefault(f.predicate, set()).add(f.values())
    return {p: stats_for(p, ts) for p, ts in rows.items()}


def stats_for(pred: Predicate, tuples: Iterable[tuple]) -> RelationStats:
    tuples = set(tuples)
    distinct = tuple(len({t[i] for t in tuples}) for i in range(pred.arity))
    return RelationStats(pred, len(tuples), distinct)


def round_half_up(x: Union[Fraction, int, float]) -> int:
    return math.floor(Fraction(x) + Fraction(1, 2))


def derive_planner_inputs(
    stats: dict[Predicate, RelationStats], scale: Union[Fraction, int, float, str] = 1
) -> tuple[dict[Arg, int], set[Arg]]:
    """Index costs and key candidates.

    Every index holds one entry per tuple, so c(p,i) is the scaled tuple count
    for each argument of p. An argument whose values are all distinct in a
    non-empty sample is taken to be a key.
    """
    scale = Fraction(scale)
    if scale <= 0:
        raise ValueError("scale factor must be positive")
    costs: dict[Arg, int] = {}
    keys: set[Arg] = set()
    for p, st in stats.items():
        c = round_half_up(st.tuples * scale)
        for i in range(1, p.arity + 1):
            costs[(p, i)] = c
            if st.tuples and st.distinct[i - 1] == st.tuples:
                keys.add((p, i))
    return costs, keys


def format_stats_facts(costs: dict[Arg, int], keys: set[Arg]) -> list[str]:
    order = lambda a: (a[0].name, a[0].arity, a[1])  # noqa: E731
    lines = [f'index("{p}",{i},{costs[(p, i)]}).' for p, i in sorted(costs, key=order)]
    lines += [f'key("{p}",{i}).' for p, i in sorted(keys, key=order)]
    return lines


def format_report(stats: dict[Predicate, RelationStats]) -> list[str]:
    lines = []
    for p in sorted(stats):
        st = stats[p]
        if not st.known:
            lines.append(f"{p}: empty, statistics unknown")
            continue
        sel = ", ".join(f"{float(s):.3f}" for s in st.selectivity)
        lines.append(f"{p}: {st.tuples} tuples, distinct {list(st.distinct)}, selectivity [{sel}]")
    return lines
