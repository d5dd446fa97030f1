"""Deterministic renderers for assessment results.

Every renderer emits bytes that depend only on its inputs: no timestamps
unless the caller supplies one, no hash-order iteration, and sorted or
first-occurrence ordering throughout, so reruns are byte-identical and safe
to diff or cache.  Output files can carry the SHA-256 digests of the input
documents as comment lines, tying artifacts back to what produced them.
"""

from __future__ import annotations

import json
from typing import Any, Mapping, Sequence

from . import __version__
from .catalog import Catalog, RiskBand, RiskMatrix
from .engine import AssessmentResult, ScoredTechnique
from .mission import (SEGMENT_ORDER, AttackChain, AttackFlow, FlowKind,
                      MissionGraph, Unit)

# Okabe-Ito palette, distinguishable under the common color-vision deficiencies
BAND_FILL = {RiskBand.LOW: "#009E73", RiskBand.MEDIUM: "#E69F00",
             RiskBand.HIGH: "#D55E00"}
BAND_LETTER = {RiskBand.LOW: "L", RiskBand.MEDIUM: "M", RiskBand.HIGH: "H"}

CONTROL_ARC_COLOR = "#0072B2"
DATA_ARC_COLOR = "#009E73"
ATTACK_ARC_COLOR = "#D55E00"


def _placements(scored: Sequence[ScoredTechnique]) -> dict[tuple[int, int], list[str]]:
    cells: dict[tuple[int, int], list[str]] = {}
    for entry in scored:
        key = (entry.final.likelihood, entry.final.impact)
        cells.setdefault(key, []).append(str(entry.technique))
    return {key: sorted(ids) for key, ids in cells.items()}


def _grid_lines(matrix: RiskMatrix,
                placements: Mapping[tuple[int, int], list[str]]) -> list[str]:
    texts: dict[tuple[int, int], str] = {}
    for likelihood in range(1, 6):
        for impact in range(1, 6):
            value = matrix.value(likelihood, impact)
            cell = f"{value:>2} {BAND_LETTER[matrix.band_of(value)]}"
            ids = placements.get((likelihood, impact))
            if ids:
                cell += " " + ",".join(ids)
            texts[(likelihood, impact)] = cell
    width = max(len(text) for text in texts.values())
    lines = ["likelihood"]
    for likelihood in range(5, 0, -1):
        row = " | ".join(texts[(likelihood, impact)].ljust(width) for impact in range(1, 6))
        lines.append(f"  {likelihood} | {row} |")
    lines.append("    +" + "+".join("-" * (width + 2) for _ in range(5)) + "+")
    lines.append("     " + "".join(str(impact).center(width + 3) for impact in range(1, 6))
                 + " impact")
    legend = "   ".join(
        f"{BAND_LETTER[band]} = {band.label} ({lo}-{hi})" for band, lo, hi in matrix.bands)
    lines.append("bands: " + legend)
    return lines


def render_matrix(scored: Sequence[ScoredTechnique], matrix: RiskMatrix,
                  fmt: str = "text",
                  provenance: Mapping[str, str] | None = None) -> bytes:
    """Draw the 5x5 grid with techniques in their cells, as text or SVG."""
    placements = _placements(scored)
    if fmt == "text":
        lines = []
        if provenance:
            lines.append("# inputs " + " ".join(
                f"{key}=sha256:{value}" for key, value in sorted(provenance.items())))
        lines.extend(_grid_lines(matrix, placements))
        return ("\n".join(lines) + "\n").encode("utf-8")
    if fmt == "svg":
        return _render_svg(matrix, placements, provenance)
    raise ValueError(f"unknown matrix format {fmt!r}, expected text or svg")


_CELL_W, _CELL_H = 118, 96
_LEFT, _TOP = 76, 40


def _render_svg(matrix: RiskMatrix,
                placements: Mapping[tuple[int, int], list[str]],
                provenance: Mapping[str, str] | None) -> bytes:
    width = _LEFT + 5 * _CELL_W + 30
    height = _TOP + 5 * _CELL_H + 110
    parts = ['<?xml version="1.0" encoding="UTF-8"?>']
    if provenance:
        note = " ".join(f"{key}=sha256:{value}" for key, value in sorted(provenance.items()))
        parts.append(f"<!-- inputs {note} -->")
    parts.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
                 f'height="{height}" viewBox="0 0 {width} {height}" '
                 f'font-family="Helvetica, Arial, sans-serif">')
    parts.append(f'<rect width="{width}" height="{height}" fill="#ffffff"/>')
    for likelihood in range(1, 6):
        y = _TOP + (5 - likelihood) * _CELL_H
        parts.append(f'<text x="{_LEFT - 14}" y="{y + _CELL_H // 2 + 5}" '
                     f'text-anchor="middle" font-size="14">{likelihood}</text>')
        for impact in range(1, 6):
            x = _LEFT + (impact - 1) * _CELL_W
            value = matrix.value(likelihood, impact)
            band = matrix.band_of(value)
            parts.append(f'<rect x="{x}" y="{y}" width="{_CELL_W}" height="{_CELL_H}" '
                         f'fill="{BAND_FILL[band]}" fill-opacity="0.55" '
                         f'stroke="#333333" stroke-width="1"/>')
            parts.append(f'<text x="{x + 8}" y="{y + 20}" font-size="14" '
                         f'font-weight="bold">{value}</text>')
            ids = placements.get((likelihood, impact), [])
            for line_no, technique_id in enumerate(ids):
                parts.append(f'<text x="{x + 8}" y="{y + 40 + line_no * 15}" '
                             f'font-size="11">{technique_id}</text>')
    for impact in range(1, 6):
        x = _LEFT + (impact - 1) * _CELL_W + _CELL_W // 2
        parts.append(f'<text x="{x}" y="{_TOP + 5 * _CELL_H + 22}" '
                     f'text-anchor="middle" font-size="14">{impact}</text>')
    parts.append(f'<text x="{_LEFT + 5 * _CELL_W // 2}" y="{_TOP + 5 * _CELL_H + 44}" '
                 f'text-anchor="middle" font-size="14">impact</text>')
    mid_y = _TOP + 5 * _CELL_H // 2
    parts.append(f'<text x="22" y="{mid_y}" text-anchor="middle" font-size="14" '
                 f'transform="rotate(-90 22 {mid_y})">likelihood</text>')
    legend_y = _TOP + 5 * _CELL_H + 66
    legend_x = _LEFT
    for band, lo, hi in matrix.bands:
        parts.append(f'<rect x="{legend_x}" y="{legend_y}" width="16" height="16" '
                     f'fill="{BAND_FILL[band]}" fill-opacity="0.55" stroke="#333333"/>')
        parts.append(f'<text x="{legend_x + 22}" y="{legend_y + 13}" font-size="13">'
                     f'{band.label} ({lo}-{hi})</text>')
        legend_x += 170
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")


# --- DOT export -------------------------------------------------------------

def export_dot(mission: MissionGraph,
               chains: Sequence[AttackChain] = (),
               attack_flows: Sequence[AttackFlow] = (),
               provenance: Mapping[str, str] | None = None) -> bytes:
    """Graphviz DOT for a mission graph with optional attack overlays.

    Units cluster by segment; control arcs are solid, data arcs dashed, and
    attack traversals come in as a bold third layer.  Chain techniques are
    annotated on the units they hit.  Overlay units missing from the
    mission graph are drawn dotted rather than rejected.
    """
    annotations: dict[Unit, list[str]] = {}
    for chain in chains:
        for step in chain.steps:
            ids = annotations.setdefault(step.unit, [])
            if str(step.technique) not in ids:
                ids.append(str(step.technique))

    overlay_units = {step.unit for chain in chains for step in chain.steps}
    overlay_units |= {unit for flow in attack_flows for unit in flow.units}
    all_units = set(mission.nodes) | overlay_units

    lines = ["digraph mission {"]
    if provenance:
        note = " ".join(f"{key}=sha256:{value}" for key, value in sorted(provenance.items()))
        lines.append(f"  // inputs {note}")
    lines.append("  rankdir=LR;")
    lines.append('  node [shape=box, style="rounded,filled", fillcolor="#f5f5f5", '
                 'fontname="Helvetica", fontsize=11];')
    lines.append('  edge [fontname="Helvetica", fontsize=10];')

    for segment in SEGMENT_ORDER:
        members = sorted((u for u in all_units if u.segment is segment), key=lambda u: u.id)
        if not members:
            continue
        lines.append(f"  subgraph cluster_{segment.value} {{")
        lines.append(f'    label="{segment.value}";')
        lines.append('    color="#999999";')
        for unit in members:
            label = unit.id[len(segment.value) + 1:] or segment.value
            for technique_id in sorted(annotations.get(unit, [])):
                label += f"\\n{technique_id}"
            attrs = [f'label="{label}"']
            if unit not in mission.nodes:
                attrs.append('style="rounded,dotted"')
            lines.append(f'    "{unit.id}" [{", ".join(attrs)}];')
        lines.append("  }")

    for src, dst in sorted(mission.arcs_of(FlowKind.CONTROL),
                           key=lambda arc: (arc[0].id, arc[1].id)):
        lines.append(f'  "{src.id}" -> "{dst.id}" [color="{CONTROL_ARC_COLOR}"];')
    for src, dst in sorted(mission.arcs_of(FlowKind.DATA),
                           key=lambda arc: (arc[0].id, arc[1].id)):
        lines.append(f'  "{src.id}" -> "{dst.id}" [color="{DATA_ARC_COLOR}", style=dashed];')
    attack_arcs = {arc for flow in attack_flows for arc in flow.arcs}
    for src, dst in sorted(attack_arcs, key=lambda arc: (arc[0].id, arc[1].id)):
        lines.append(f'  "{src.id}" -> "{dst.id}" [color="{ATTACK_ARC_COLOR}", '
                     f'style=bold, penwidth=2];')
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


# --- structured and Markdown reports ----------------------------------------

def report_document(result: AssessmentResult, catalog: Catalog,
                    digests: Mapping[str, str | None] | None = None,
                    assessment_name: str | None = None,
                    generated_at: str | None = None) -> dict[str, Any]:
    """The structured report: everything downstream consumers need.

    ``generated_at`` defaults to None so that reruns stay byte-identical;
    callers wanting a timestamp must pass one.
    """
    digests = dict(digests or {})
    scored_entries = []
    for entry in result.scored:
        technique = catalog.techniques.get(entry.technique)
        scored_entries.append({
            "technique": str(entry.technique),
            "framework": entry.technique.framework.value,
            "name": technique.name if technique else None,
            "units": [unit.id for unit in entry.units],
            "criticality": entry.criticality.label,
            "base": None if entry.base is None else
                {"likelihood": entry.base.likelihood, "impact": entry.base.impact},
            "final": {"likelihood": entry.final.likelihood, "impact": entry.final.impact},
            "provenance": {"likelihood": entry.likelihood_from, "impact": entry.impact_from},
            "value": entry.value,
            "band": entry.band.label,
            "intolerable": entry.technique in result.intolerable,
        })
    selections = {
        str(technique): {
            "countermeasures": list(selection.countermeasures),
            "controls": list(selection.controls),
            "justification": selection.justification,
        }
        for technique, selection in result.selections.items()
    }
    control_details = {
        control_id: {"family": catalog.controls[control_id].family,
                     "title": catalog.controls[control_id].title}
        for control_id in sorted(result.control_union)
        if control_id in catalog.controls
    }
    return {
        "schema": 1,
        "kind": "risk-assessment-report",
        "metadata": {
            "tool": "missionrisk",
            "tool_version": __version__,
            "generated_at": generated_at,
            "catalog": {"name": catalog.name, "sha256": digests.get("catalog")},
            "mission": {"name": result.mission, "sha256": digests.get("mission")},
            "assessment": {"name": assessment_name, "sha256": digests.get("assessment")},
        },
        "adversary_tier": {"tier": result.adversary_tier, "label": result.adversary_label},
        "threshold": result.threshold.label,
        "matrix": {
            "cells": [list(row) for row in catalog.matrix.cells],
            "bands": {band.label: [lo, hi] for band, lo, hi in catalog.matrix.bands},
        },
        "scored": scored_entries,
        "intolerable": sorted(str(t) for t in result.intolerable),
        "selections": selections,
        "control_union": sorted(result.control_union),
        "control_details": control_details,
        "findings": [{"kind": f.kind, "message": f.message,
                      "technique": None if f.technique is None else str(f.technique)}
                     for f in result.findings],
        "audit_log": result.audit_log,
    }


def emit_report(document: Mapping[str, Any], fmt: str = "json") -> bytes:
    """Serialize a structured report as canonical JSON or as Markdown.

    The Markdown rendering reads only the structured document, never the
    original result objects, so the two stay consistent by construction.
    """
    if fmt == "json":
        return (json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False)
                + "\n").encode("utf-8")
    if fmt == "markdown":
        return _emit_markdown(document)
    raise ValueError(f"unknown report format {fmt!r}, expected json or markdown")


def _matrix_from_document(document: Mapping[str, Any]) -> RiskMatrix:
    bands = tuple((RiskBand.parse(name), lo, hi)
                  for name, (lo, hi) in sorted(document["matrix"]["bands"].items(),
                                               key=lambda item: item[1][0]))
    return RiskMatrix(cells=tuple(tuple(row) for row in document["matrix"]["cells"]),
                      bands=bands)


def render_report_matrix(document: Mapping[str, Any], fmt: str = "text",
                         provenance: Mapping[str, str] | None = None) -> bytes:
    """Re-render the matrix grid from a structured report document alone."""
    matrix = _matrix_from_document(document)
    placements: dict[tuple[int, int], list[str]] = {}
    for entry in document["scored"]:
        key = (entry["final"]["likelihood"], entry["final"]["impact"])
        placements.setdefault(key, []).append(entry["technique"])
    placements = {key: sorted(ids) for key, ids in placements.items()}
    if fmt == "text":
        lines = []
        if provenance:
            lines.append("# inputs " + " ".join(
                f"{key}=sha256:{value}" for key, value in sorted(provenance.items())))
        lines.extend(_grid_lines(matrix, placements))
        return ("\n".join(lines) + "\n").encode("utf-8")
    if fmt == "svg":
        return _render_svg(matrix, placements, provenance)
    raise ValueError(f"unknown matrix format {fmt!r}, expected text or svg")


def _emit_markdown(document: Mapping[str, Any]) -> bytes:
    meta = document["metadata"]
    tier = document["adversary_tier"]
    lines = ["# Risk assessment report", ""]
    lines.append(f"- mission: **{meta['mission']['name']}**")
    if meta["assessment"]["name"]:
        lines.append(f"- assessment: {meta['assessment']['name']}")
    if meta["catalog"]["name"]:
        lines.append(f"- catalog: {meta['catalog']['name']}")
    lines.append(f"- adversary tier: {tier['tier']} ({tier['label']})")
    lines.append(f"- tolerance threshold: {document['threshold']}")
    if meta["generated_at"]:
        lines.append(f"- generated: {meta['generated_at']}")
    lines.append(f"- tool: {meta['tool']} {meta['tool_version']}")
    for name in ("catalog", "mission", "assessment"):
        digest = meta[name]["sha256"]
        if digest:
            lines.append(f"- {name} digest: `sha256:{digest}`")
    lines.append("")

    lines.append("## Summary")
    lines.append("")
    intolerable = document["intolerable"]
    lines.append(f"{len(document['scored'])} technique(s) scored; "
                 f"{len(intolerable)} above the {document['threshold']} threshold.")
    if intolerable:
        lines.append("")
        lines.append("Must be mitigated: " + ", ".join(f"**{t}**" for t in intolerable) + ".")
    tolerated = [entry["technique"] for entry in document["scored"]
                 if not entry["intolerable"]]
    if tolerated:
        lines.append("")
        lines.append("Tolerated: " + ", ".join(tolerated) + ".")
    lines.append("")

    lines.append("## Risk matrix")
    lines.append("")
    matrix = _matrix_from_document(document)
    placements: dict[tuple[int, int], list[str]] = {}
    for entry in document["scored"]:
        key = (entry["final"]["likelihood"], entry["final"]["impact"])
        placements.setdefault(key, []).append(entry["technique"])
    placements = {key: sorted(ids) for key, ids in placements.items()}
    lines.append("```")
    lines.extend(_grid_lines(matrix, placements))
    lines.append("```")
    lines.append("")

    lines.append("## Techniques")
    lines.append("")
    lines.append("| technique | name | criticality | base l/i | final l/i | value | band | intolerable |")
    lines.append("| --- | --- | --- | --- | --- | --- | --- | --- |")
    for entry in document["scored"]:
        base = "-" if entry["base"] is None else \
            f"{entry['base']['likelihood']}/{entry['base']['impact']}"
        final = f"{entry['final']['likelihood']}/{entry['final']['impact']}"
        marks = []
        if entry["provenance"]["likelihood"] == "tailored":
            marks.append("l")
        if entry["provenance"]["impact"] == "tailored":
            marks.append("i")
        if marks:
            final += " (tailored " + ",".join(marks) + ")"
        lines.append(f"| {entry['technique']} | {entry['name'] or '-'} "
                     f"| {entry['criticality']} | {base} | {final} "
                     f"| {entry['value']} | {entry['band']} "
                     f"| {'yes' if entry['intolerable'] else 'no'} |")
    lines.append("")

    lines.append("## Mitigations")
    lines.append("")
    if document["selections"]:
        for technique in sorted(document["selections"]):
            selection = document["selections"][technique]
            lines.append(f"### {technique}")
            lines.append("")
            lines.append(f"- countermeasures: {', '.join(selection['countermeasures'])}")
            lines.append(f"- controls: {', '.join(selection['controls'])}")
            lines.append(f"- justification: {selection['justification']}")
            lines.append("")
    else:
        lines.append("No mitigations were selected.")
        lines.append("")

    lines.append("## Control set")
    lines.append("")
    if document["control_union"]:
        for control_id in document["control_union"]:
            detail = document["control_details"].get(control_id)
            if detail:
                lines.append(f"- {control_id} ({detail['family']}): {detail['title']}")
            else:
                lines.append(f"- {control_id}")
    else:
        lines.append("The selected control set is empty.")
    lines.append("")

    lines.append("## Findings")
    lines.append("")
    if document["findings"]:
        for finding in document["findings"]:
            prefix = f"{finding['technique']}: " if finding["technique"] else ""
            lines.append(f"- {finding['kind']}: {prefix}{finding['message']}")
    else:
        lines.append("None.")
    lines.append("")

    lines.append("## Audit log")
    lines.append("")
    for entry in document["audit_log"]:
        detail = ", ".join(f"{key}={json.dumps(value, sort_keys=True, ensure_ascii=False)}"
                           for key, value in sorted(entry.items())
                           if key not in ("seq", "event"))
        lines.append(f"{entry['seq']}. **{entry['event']}** {detail}")
    lines.append("")
    return ("\n".join(lines)).encode("utf-8")
