"""Intention-based tie-breaking for best-first width search, with verification labs."""

from .pddl import load_task, parse, ground
from .search import SearchConfig, SearchResult, Status, Variant, search
from .task import PlanningTask, applicable, apply, validate_plan

__all__ = [
    "PlanningTask",
    "SearchConfig",
    "SearchResult",
    "Status",
    "Variant",
    "applicable",
    "apply",
    "ground",
    "load_task",
    "parse",
    "search",
    "validate_plan",
]

__version__ = "0.1.0"
