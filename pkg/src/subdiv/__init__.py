"""Interval branch-and-bound with subdomain-splitting lower bounds."""

from .dag import DagBuilder, Problem, eval_interval, eval_interval_all, eval_real
from .interval import (
    DivisionDomainViolation,
    DomainViolation,
    Interval,
    IntervalBox,
    IntervalError,
)
from .parser import ParseError, parse_file, parse_problem

__version__ = "0.1.0"

__all__ = [
    "DagBuilder",
    "DivisionDomainViolation",
    "DomainViolation",
    "Interval",
    "IntervalBox",
    "IntervalError",
    "ParseError",
    "Problem",
    "eval_interval",
    "eval_interval_all",
    "eval_real",
    "parse_file",
    "parse_problem",
]
