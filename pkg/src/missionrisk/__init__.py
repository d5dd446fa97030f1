"""Mission-centric cyber risk management for space systems.

The package models a mission as typed units wired together by control and
data flows, applies a technique catalog's base risk scores through analyst
tailoring and a 5x5 risk matrix, and selects the security controls that
mitigate every technique above the declared tolerance threshold.
"""

__version__ = "0.1.0"

from .catalog import (AdversaryTier, Catalog, Countermeasure, Criticality,
                      Framework, RiskBand, RiskMatrix, Score, SecurityControl,
                      Technique, TechniqueId, countermeasures_for,
                      default_matrix, load_catalog, lookup_base_score,
                      parse_catalog, resolve_controls)
from .errors import (CycleError, DuplicateUnit, IntegrityError, InvalidChoice,
                     KindMismatch, LevelError, MissingScore, MissionRiskError,
                     MixedGranularity, NoCountermeasures, RangeError,
                     SchemaError, UnassignedCriticality, UnknownCountermeasure,
                     UnknownTechnique, UnknownUnit)
from .engine import (Assessment, AssessmentResult, Diagnostic, Finding,
                     MitigationChoice, MitigationStrategy, ScoredTechnique,
                     Selection, Tailoring, applicable_techniques,
                     criticality_of, filter_intolerable, load_assessment,
                     parse_assessment, run_assessment, select_mitigations,
                     tailor, validate_inputs)
from .mission import (AttackChain, AttackFlow, ChainStep, Flow, FlowGraph,
                      FlowKind, Level, MissionGraph, MissionSpec, OverlayReport,
                      Segment, Unit, build_mission, load_mission, make_flow,
                      overlay_chain, parse_mission, project, sources_and_sinks,
                      union_flows)
from .reporting import emit_report, export_dot, render_matrix, report_document

__all__ = [
    "AdversaryTier", "Assessment", "AssessmentResult", "AttackChain",
    "AttackFlow", "Catalog", "ChainStep", "Countermeasure", "Criticality",
    "CycleError", "Diagnostic", "DuplicateUnit", "Finding", "Flow",
    "FlowGraph", "FlowKind", "Framework", "IntegrityError", "InvalidChoice",
    "KindMismatch", "Level", "LevelError", "MissingScore", "MissionGraph",
    "MissionRiskError", "MissionSpec", "MitigationChoice",
    "MitigationStrategy", "MixedGranularity", "NoCountermeasures",
    "OverlayReport", "RangeError", "RiskBand", "RiskMatrix", "SchemaError",
    "Score", "ScoredTechnique", "SecurityControl", "Segment", "Selection",
    "Tailoring", "Technique", "TechniqueId", "UnassignedCriticality",
    "UnknownCountermeasure", "UnknownTechnique", "UnknownUnit", "Unit",
    "applicable_techniques",
    "build_mission", "countermeasures_for", "criticality_of", "default_matrix",
    "emit_report", "export_dot", "filter_intolerable", "load_assessment",
    "load_catalog", "load_mission", "lookup_base_score", "make_flow",
    "overlay_chain", "parse_assessment", "parse_catalog", "parse_mission",
    "project", "render_matrix", "report_document", "resolve_controls",
    "run_assessment", "select_mitigations", "sources_and_sinks", "tailor",
    "union_flows", "validate_inputs",
]
