"""Nonsmooth Morse analysis of continuous selections on constraint manifolds."""

import json as _json

from ._core import (
    ConsistencyError,
    DomainError,
    Expression,
    GeometryError,
    Scenario,
    ValidationError,
    analyze_json,
    check_derivatives,
    fibers,
    load_scenario,
    min_norm_in_hull,
    parse_scenario,
)
from ._core import report_schema as _report_schema

__all__ = [
    "ConsistencyError",
    "DomainError",
    "Expression",
    "GeometryError",
    "Scenario",
    "ValidationError",
    "analyze",
    "analyze_json",
    "check_derivatives",
    "fibers",
    "load_scenario",
    "min_norm_in_hull",
    "parse_scenario",
    "report_schema",
]


def _scenario(source):
    return source if isinstance(source, Scenario) else load_scenario(str(source))


def analyze(source, seed=None, threads=None):
    """Analyze a scenario (object or file path) and return the report as a dict."""
    return _json.loads(analyze_json(_scenario(source), seed=seed, threads=threads))


def report_schema():
    """JSON Schema of the report as a dict."""
    return _json.loads(_report_schema())
