"""HTTP service wrapping the assessment engine.

The service is stateless: every request carries its own documents, and the
response depends only on them.  Digests recorded in reports are computed
over a canonical serialization of the received documents, since the
original client bytes are not visible after JSON parsing.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..catalog import TechniqueId, parse_catalog
from ..engine import parse_assessment, run_assessment, validate_inputs
from ..errors import MissionRiskError, SchemaError
from ..mission import parse_mission
from ..reporting import export_dot, render_matrix, report_document
from .schemas import (AssessRequest, AssessResponse, ControlOut,
                      CountermeasureOut, DiagnosticOut, ExplainRequest,
                      ExplainResponse, HealthResponse, RenderSet,
                      ValidateRequest, ValidateResponse)


def _canonical_digest(document: dict[str, Any]) -> str:
    payload = json.dumps(document, sort_keys=True, separators=(",", ":"),
                         ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def _bad_request(kind: str, exc: MissionRiskError) -> HTTPException:
    detail: dict[str, Any] = {"document": kind, "error": type(exc).__name__,
                              "message": str(exc)}
    if isinstance(exc, SchemaError):
        detail["path"] = exc.path
    return HTTPException(status_code=400, detail=detail)


def create_app() -> FastAPI:
    app = FastAPI(title="mission-risk", version=__version__,
                  description="Mission-centric cyber risk assessment for space systems.")

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/validate", response_model=ValidateResponse)
    def validate(request: ValidateRequest) -> ValidateResponse:
        diagnostics: list[DiagnosticOut] = []
        catalog = spec = assessment = None
        for kind, payload, parser in (("catalog", request.catalog, parse_catalog),
                                      ("mission", request.mission, parse_mission),
                                      ("assessment", request.assessment, parse_assessment)):
            if payload is None:
                continue
            try:
                parsed = parser(payload)
            except MissionRiskError as exc:
                diagnostics.append(DiagnosticOut(severity="error",
                                                 message=f"{kind}: {exc}"))
                continue
            if kind == "catalog":
                catalog = parsed
            elif kind == "mission":
                spec = parsed
            else:
                assessment = parsed
        if catalog is not None and spec is not None and assessment is not None:
            for diagnostic in validate_inputs(catalog, spec, assessment):
                diagnostics.append(DiagnosticOut(severity=diagnostic.severity,
                                                 message=diagnostic.message))
        ok = not any(d.severity == "error" for d in diagnostics)
        return ValidateResponse(ok=ok, diagnostics=diagnostics)

    @app.post("/assess", response_model=AssessResponse)
    def assess(request: AssessRequest) -> AssessResponse:
        try:
            catalog = parse_catalog(request.catalog)
        except MissionRiskError as exc:
            raise _bad_request("catalog", exc) from exc
        try:
            spec = parse_mission(request.mission)
        except MissionRiskError as exc:
            raise _bad_request("mission", exc) from exc
        try:
            assessment = parse_assessment(request.assessment)
        except MissionRiskError as exc:
            raise _bad_request("assessment", exc) from exc

        diagnostics = validate_inputs(catalog, spec, assessment)
        errors = [d.message for d in diagnostics if d.severity == "error"]
        if errors:
            raise HTTPException(status_code=400,
                                detail={"document": "cross-check", "errors": errors})

        digests = {"catalog": _canonical_digest(request.catalog),
                   "mission": _canonical_digest(request.mission),
                   "assessment": _canonical_digest(request.assessment)}
        result = run_assessment(catalog, spec.mission_graph(), spec.attack_chains,
                                assessment)
        document = report_document(result, catalog, digests=digests,
                                   assessment_name=assessment.name,
                                   generated_at=request.generated_at)
        renders = None
        if request.include_renders:
            renders = RenderSet(
                matrix_text=render_matrix(result.scored, catalog.matrix, "text",
                                          provenance=digests).decode("utf-8"),
                matrix_svg=render_matrix(result.scored, catalog.matrix, "svg",
                                         provenance=digests).decode("utf-8"),
                mission_dot=export_dot(spec.mission_graph(), spec.attack_chains,
                                       spec.attack_flows,
                                       provenance=digests).decode("utf-8"))
        return AssessResponse(report=document, renders=renders)

    @app.post("/explain", response_model=ExplainResponse)
    def explain(request: ExplainRequest) -> ExplainResponse:
        try:
            catalog = parse_catalog(request.catalog)
        except MissionRiskError as exc:
            raise _bad_request("catalog", exc) from exc
        try:
            technique_id = TechniqueId.parse(request.technique)
        except MissionRiskError as exc:
            raise _bad_request("technique", exc) from exc
        technique = catalog.techniques.get(technique_id)
        if technique is None:
            raise HTTPException(status_code=404,
                                detail=f"technique {request.technique} is not in the catalog")
        countermeasures = []
        for cm_id in technique.countermeasures:
            cm = catalog.countermeasures[cm_id]
            countermeasures.append(CountermeasureOut(
                id=cm.id, description=cm.description,
                controls=[ControlOut(id=c, family=catalog.controls[c].family,
                                     title=catalog.controls[c].title)
                          for c in cm.controls]))
        return ExplainResponse(
            technique=str(technique.id), framework=technique.id.framework.value,
            name=technique.name, tactic=technique.tactic,
            countermeasure_count=len(technique.countermeasures),
            countermeasures=countermeasures)

    return app


app = create_app()
