"""Aggregating crowd answers with rule-based methods and learned method/answer prediction."""

from .aggregators import METHODS, STANDARD_METHODS, AggregationResult, MethodId, run_methods
from .case_model import DecisionCase, Response, make_case, validate_case
from .errors import CrowdAggError

__version__ = "0.1.0"

__all__ = [
    "AggregationResult",
    "CrowdAggError",
    "DecisionCase",
    "METHODS",
    "MethodId",
    "Response",
    "STANDARD_METHODS",
    "make_case",
    "run_methods",
    "validate_case",
]
