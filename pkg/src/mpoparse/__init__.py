"""Pipelined packet-parser generator.

Load a parser graph, compile it into a level-by-level pipeline plan,
simulate the plan at bus-word granularity, and emit module-per-object C++.
"""

__version__ = "0.1.0"

from .errors import MpoParseError, SpecError, ValidationError  # noqa: E402
from .graph import ParserGraph, load_spec, load_spec_file, validate  # noqa: E402
from .planner import PipelinePlan, plan  # noqa: E402
from .reference import reference_parse  # noqa: E402
from .simulator import ParseResult, run_batch, run_packet  # noqa: E402
from .traffic import generate_traffic  # noqa: E402
from .codegen import SourceBundle, emit  # noqa: E402

__all__ = [
    "MpoParseError", "SpecError", "ValidationError",
    "ParserGraph", "load_spec", "load_spec_file", "validate",
    "PipelinePlan", "plan",
    "ParseResult", "run_packet", "run_batch", "reference_parse",
    "generate_traffic",
    "SourceBundle", "emit",
]
