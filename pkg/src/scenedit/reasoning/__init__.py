"""Query decomposition, sufficiency assessment, scene refinement, resolution."""

from .chain import (assess_sufficiency, decompose_query, generate_spatial_program,
                    interpret_spatial, refine_semantic, resolve_edit, run_chain,
                    DEFAULT_CAP, DEFAULT_TAU, SEGMENT_THRESHOLDS)
from .dsl import SpatialProgram, evaluate_expression
from .types import EditPlan, EditStep, InfoNeed, NeedKind, OpKind, TaskPlan, trace_lines

__all__ = [
    "assess_sufficiency", "decompose_query", "generate_spatial_program",
    "interpret_spatial", "refine_semantic", "resolve_edit", "run_chain",
    "DEFAULT_CAP", "DEFAULT_TAU", "SEGMENT_THRESHOLDS",
    "SpatialProgram", "evaluate_expression",
    "EditPlan", "EditStep", "InfoNeed", "NeedKind", "OpKind", "TaskPlan",
    "trace_lines",
]
