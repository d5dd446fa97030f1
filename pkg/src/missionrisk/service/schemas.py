"""Request and response models for the HTTP service.

Documents travel inside request bodies as plain JSON objects and are
validated by the same loaders the CLI uses, so the service adds no second
schema of its own for them.
"""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class DiagnosticOut(BaseModel):
    severity: str
    message: str


class ValidateRequest(BaseModel):
    """Any subset of the three documents; cross-checks need all three."""

    catalog: dict[str, Any] | None = None
    mission: dict[str, Any] | None = None
    assessment: dict[str, Any] | None = None


class ValidateResponse(BaseModel):
    ok: bool
    diagnostics: list[DiagnosticOut] = Field(default_factory=list)


class AssessRequest(BaseModel):
    catalog: dict[str, Any]
    mission: dict[str, Any]
    assessment: dict[str, Any]
    include_renders: bool = False
    generated_at: str | None = None


class RenderSet(BaseModel):
    matrix_text: str
    matrix_svg: str
    mission_dot: str


class AssessResponse(BaseModel):
    report: dict[str, Any]
    renders: RenderSet | None = None


class ExplainRequest(BaseModel):
    catalog: dict[str, Any]
    technique: str


class ControlOut(BaseModel):
    id: str
    family: str
    title: str


class CountermeasureOut(BaseModel):
    id: str
    description: str
    controls: list[ControlOut]


class ExplainResponse(BaseModel):
    technique: str
    framework: str
    name: str
    tactic: str
    countermeasure_count: int
    countermeasures: list[CountermeasureOut]
