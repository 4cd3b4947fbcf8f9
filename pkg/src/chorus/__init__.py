"""Choreographies with procedures, their projection to message-passing
processes, and twin simulators for running either side."""

from .chor_engine import (
    ChorError, explore_choreography, run_choreography, states_equivalent,
)
from .checker import Diagnostic, check_connections
from .corpus import (
    Instance, decode_result, encode_instance, oracle, outputs_match,
    random_instance,
)
from .epp import ProjectionError, check_projectable, merge_behaviours, project
from .parser import ParseError, parse_choreography, parse_processes
from .pp_engine import explore_processes, run_processes
from .printer import render_choreography, render_processes
from .values import UNDEF, parse_value, render_value

__version__ = "0.1.0"

__all__ = [
    "ChorError",
    "Diagnostic",
    "Instance",
    "ParseError",
    "ProjectionError",
    "UNDEF",
    "check_connections",
    "check_projectable",
    "decode_result",
    "encode_instance",
    "explore_choreography",
    "explore_processes",
    "merge_behaviours",
    "oracle",
    "outputs_match",
    "parse_choreography",
    "parse_processes",
    "parse_value",
    "project",
    "random_instance",
    "render_choreography",
    "render_processes",
    "render_value",
    "run_choreography",
    "run_processes",
    "states_equivalent",
    "__version__",
]
