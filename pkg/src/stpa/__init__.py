"""STAMP/STPA safety analysis: model, DSL, analysis engine and reports."""

from stpa.dsl import ParseDiagnostic, ParseError, parse, print_model
from stpa.engine import (
    AsilDomainError,
    CausalPrompt,
    Finding,
    Severity,
    Status,
    Trace,
    TraceNode,
    UcaCandidate,
    compute_asil,
    derive_constraint,
    enumerate_candidates,
    step2_prompts,
    trace,
    validate,
)
from stpa.model import (
    Asil,
    ControlLoop,
    NotFoundError,
    Rating,
    SafetyModel,
    SourceSpan,
    derive_control_loops,
    resolve,
)
from stpa.reports import ReportBundle, build_bundle, emit_csv_matrix, emit_json, emit_markdown

__version__ = "0.1.0"

__all__ = [
    "Asil",
    "AsilDomainError",
    "CausalPrompt",
    "ControlLoop",
    "Finding",
    "NotFoundError",
    "ParseDiagnostic",
    "ParseError",
    "Rating",
    "ReportBundle",
    "SafetyModel",
    "Severity",
    "SourceSpan",
    "Status",
    "Trace",
    "TraceNode",
    "UcaCandidate",
    "build_bundle",
    "compute_asil",
    "derive_constraint",
    "derive_control_loops",
    "emit_csv_matrix",
    "emit_json",
    "emit_markdown",
    "enumerate_candidates",
    "parse",
    "print_model",
    "resolve",
    "step2_prompts",
    "trace",
    "validate",
]
