"""Evaluation plans for Datalog: an indexing schema plus one body ordering per rule."""

__version__ = "0.1.0"

from .admissibility import is_admissible
from .engine import default_policy_plan, evaluate
from .optimizer import Unsatisfiable, optimize, oracle_optimize
from .plan import EvaluationPlan, Ordering, make_planner_input
from .preference import Strategy, compare, cost_vector
from .program import parse_facts, parse_program

__all__ = [
    "EvaluationPlan", "Ordering", "Strategy", "Unsatisfiable", "compare", "cost_vector",
    "default_policy_plan", "evaluate", "is_admissible", "make_planner_input", "optimize",
    "oracle_optimize", "parse_facts", "parse_program",
]
