"""Command line entry point: ``dlplan <subcommand> ...``.

Exit status: 0 on success, 1 on domain failures (unsatisfiable planning
problem, inadmissible plan), 2 on usage, input and I/O errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .admissibility import check_plan
from .bench import DEFAULT_SAMPLE, DEFAULT_SEED, BenchError, bench
from .engine import default_policy_plan, evaluate
from .interop import emit_annotations, emit_asp_facts, read_constraints, strategy_from_priorities
from .optimizer import DEFAULT_ORACLE_BUDGET, BudgetExceeded, Unsatisfiable, optimize, oracle_optimize
from .plan import DEFAULT_IDB_COST, PlanError, format_plan, make_planner_input, parse_plan, plan_wellformed
from .preference import Strategy, StrategyError, cost_vector
from .program import DatalogError, Program, parse_facts, parse_program
from .stats import collect_stats, derive_planner_inputs, format_report, format_stats_facts

log = logging.getLogger("dlplan")

DEFAULTS = {
    "strategy": "sigma2",
    "budget": DEFAULT_ORACLE_BUDGET,
    "default_idb_cost": DEFAULT_IDB_COST,
    "seed": DEFAULT_SEED,
    "scale": "1",
    "sample_size": DEFAULT_SAMPLE,
}


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


def read_config(path: Optional[str]) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    if not path:
        return {}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def setting(args: argparse.Namespace, name: str, convert=str):
    value = getattr(args, name, None)
    if value is None:
        value = args.config_values.get(name, DEFAULTS.get(name))
    return convert(value) if value is not None else None


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(args: argparse.Namespace, text: str) -> None:
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot write {args.out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def load_program(args: argparse.Namespace, allow_negation: bool = False) -> Program:
    program = parse_program(_read(args.program), allow_negation=allow_negation)
    for path in getattr(args, "facts", None) or []:
        program = program.with_facts(parse_facts(_read(path)))
    return program


def _strategy(args: argparse.Namespace, constraints: Optional[dict] = None) -> Strategy:
    if getattr(args, "preset", None):
        return Strategy.preset(args.preset)
    if getattr(args, "strategy", None):
        return Strategy.parse(args.strategy)
    if constraints and constraints["priorities"]:
        return strategy_from_priorities(constraints["priorities"])
    return Strategy.parse(setting(args, "strategy"))


def build_input(args: argparse.Namespace, program: Program):
    constraints = read_constraints(_read(args.constraints), program) if args.constraints else None
    costs, keys = {}, set()
    if program.facts:
        costs, keys = derive_planner_inputs(collect_stats(program.facts), setting(args, "scale"))
    if constraints:
        costs.update(constraints["index_costs"])
        if constraints["keys"]:
            keys = constraints["keys"]
    return make_planner_input(
        program,
        _strategy(args, constraints),
        fixed_positions=constraints["fixed_positions"] if constraints else None,
        fixed_indices=constraints["fixed_indices"] if constraints else (),
        keys=keys,
        index_costs=costs,
        default_idb_cost=setting(args, "default_idb_cost", int),
    )


# --------------------------------------------------------------------------
# subcommands

def cmd_plan(args: argparse.Namespace) -> int:
    program = load_program(args)
    inp = build_input(args, program)
    if args.oracle:
        plan = oracle_optimize(inp, setting(args, "budget", int)).canonical()
    else:
        plan = optimize(inp)
    cv = cost_vector(plan, inp)
    _write(args, format_plan(plan, [f"strategy {inp.strategy}", f"cost {cv}"]))
    log.info("plan cost %s", cv)
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    program = load_program(args)
    inp = build_input(args, program)
    result = oracle_optimize(inp, setting(args, "budget", int))
    plan = result.canonical()
    comments = [f"strategy {inp.strategy}", f"cost {result.cost}", f"optimal plans {result.count()}"]
    _write(args, format_plan(plan, comments))
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    program = load_program(args)
    plan = parse_plan(_read(args.plan), program)
    failed = False
    if args.constraints:
        inp = build_input(args, program)
        ok, problems = plan_wellformed(plan, inp)
        for p in problems:
            print(f"malformed: {p}")
        failed |= not ok
    for rid, verdict in sorted(check_plan(program, plan).items()):
        if verdict:
            print(f"rule {rid}: admissible")
        else:
            failed = True
            print(f"rule {rid}: NOT admissible")
            for v in verdict.violations:
                print(f"  {v}")
    return 1 if failed else 0


def cmd_run(args: argparse.Namespace) -> int:
    program = load_program(args, allow_negation=True)
    if args.plan:
        plan = parse_plan(_read(args.plan), program)
    else:
        plan = default_policy_plan(program)
    result = evaluate(program, plan)
    out = []
    for q in args.query or []:
        name, _, arity = q.rpartition("/")
        pred = program.predicates.get(name)
        if pred is None or str(pred.arity) != arity:
            raise UsageError(f"unknown predicate {q}")
        for t in sorted(result.relation(pred), key=repr):
            out.append(f"{name}({','.join(map(str, t))})." if t else f"{name}.")
    metrics = result.metrics.as_dict()
    if args.metrics == "json":
        out.append(json.dumps(metrics, sort_keys=True))
    elif args.metrics == "text":
        out += [f"{k}: {v}" for k, v in metrics.items()]
    _write(args, "\n".join(out) + ("\n" if out else ""))
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    facts = parse_facts(_read(args.facts_file))
    stats = collect_stats(facts)
    costs, keys = derive_planner_inputs(stats, setting(args, "scale"))
    lines = [f"% {line}" for line in format_report(stats)] + format_stats_facts(costs, keys)
    _write(args, "\n".join(lines) + "\n")
    return 0


def cmd_emit_facts(args: argparse.Namespace) -> int:
    program = load_program(args)
    _write(args, emit_asp_facts(build_input(args, program)))
    return 0


def cmd_annotate(args: argparse.Namespace) -> int:
    program = load_program(args)
    plan = parse_plan(_read(args.plan), program)
    _write(args, emit_annotations(program, plan))
    return 0


def _size(text: str) -> int:
    """Fact counts may use exponent notation: ``1e4``."""
    try:
        value = float(text)
    except ValueError:
        value = -1.0
    if value < 0 or value != int(value):
        raise UsageError(f"invalid size {text!r}")
    return int(value)


def cmd_bench(args: argparse.Namespace) -> int:
    sizes = [_size(s) for s in args.sizes.split(",") if s]
    suites = [s for s in args.suite.split(",") if s]
    strategy = Strategy.parse(setting(args, "strategy"))
    report = bench(suites, sizes, setting(args, "seed", int), strategy, setting(args, "sample_size", int))
    _write(args, report.format(timing=not args.no_timing))
    return 0


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand; SUPPRESS keeps
    # a subparser from resetting a value given before it
    def global_flags(target: argparse.ArgumentParser, default) -> None:
        target.add_argument("--out", default=default, help="write results to this file instead of standard output")
        target.add_argument("--quiet", action="store_true", default=default or False,
                            help="suppress informational messages")
        target.add_argument("--seed", type=int, default=default, help="random seed (bench)")
        target.add_argument("--config", default=default, help="key=value configuration file")

    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, argparse.SUPPRESS)

    planner = argparse.ArgumentParser(add_help=False)
    planner.add_argument("program", help="Datalog program file")
    planner.add_argument("--facts", action="append", help="database facts file (repeatable)")
    planner.add_argument("--constraints", help="fixedPosition/fixedIndex/key/index facts")
    group = planner.add_mutually_exclusive_group()
    group.add_argument("--strategy", help="comma list of cost functions, e.g. w1,w3,w2")
    group.add_argument("--preset", choices=["sigma1", "sigma2"])
    planner.add_argument("--scale", help="scale factor applied to sample tuple counts")
    planner.add_argument("--default-idb-cost", dest="default_idb_cost", type=int)

    parser = argparse.ArgumentParser(prog="dlplan", description="Datalog evaluation planner")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    global_flags(parser, None)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("plan", parents=[common, planner], help="compute an optimal evaluation plan")
    p.add_argument("--oracle", action="store_true", help="use exhaustive enumeration")
    p.add_argument("--budget", type=int, help="admissibility checks the oracle may perform")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("oracle", parents=[common, planner], help="enumerate all optimal plans")
    p.add_argument("--budget", type=int)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("check", parents=[common], help="check a plan for admissibility")
    p.add_argument("program")
    p.add_argument("plan")
    p.add_argument("--facts", action="append")
    p.add_argument("--constraints", help="also check fixed positions and indices")
    p.add_argument("--strategy")
    p.add_argument("--scale")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", parents=[common], help="evaluate a program")
    p.add_argument("program")
    p.add_argument("--facts", action="append")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--plan", help="plan file to follow")
    mode.add_argument("--baseline", action="store_true", help="use the per-rule baseline (default)")
    p.add_argument("--query", action="append", help="print relation p/arity (repeatable)")
    p.add_argument("--metrics", choices=["json", "text"])
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("stats", parents=[common], help="derive index costs and keys from a database")
    p.add_argument("facts_file")
    p.add_argument("--scale")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("emit-facts", parents=[common, planner], help="write the planner input as ASP facts")
    p.set_defaults(func=cmd_emit_facts)

    p = sub.add_parser("annotate", parents=[common], help="annotate a program with a plan")
    p.add_argument("program")
    p.add_argument("plan")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("bench", parents=[common], help="compare planner and baseline on synthetic suites")
    p.add_argument("--suite", default="star-join", help="comma list of suites")
    p.add_argument("--sizes", default="1e4", help="comma list of fact counts, e.g. 1e4,1e5")
    p.add_argument("--strategy")
    p.add_argument("--sample-size", dest="sample_size", type=int)
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock columns")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s",
                        stream=sys.stderr)
    try:
        args.config_values = read_config(args.config)
        return args.func(args)
    except (Unsatisfiable, DomainError) as exc:
        print(f"dlplan: {exc}", file=sys.stderr)
        return 1
    except (UsageError, BudgetExceeded, BenchError, StrategyError, PlanError, DatalogError, ValueError) as exc:
        print(f"dlplan: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
