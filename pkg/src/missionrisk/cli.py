"""Command line interface.

Subcommands: ``validate`` checks documents and their cross-references,
``assess`` runs the pipeline and writes the report artifacts, ``render``
re-renders matrices from an existing report, ``explain`` walks a technique's
countermeasure and control mappings, and ``serve`` starts the HTTP service.

Exit codes: 0 success, 1 I/O problems, 2 validation errors, 3 intolerable
techniques found while ``--fail-on-findings`` is set.  Set
``MISSION_RISK_NO_COLOR`` (or redirect output) to suppress ANSI colors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .catalog import Catalog, Criticality, TechniqueId, load_catalog
from .engine import (Assessment, AssessmentResult, load_assessment,
                     run_assessment, validate_inputs)
from .errors import MissionRiskError
from .mission import MissionSpec, load_mission
from .reporting import (emit_report, export_dot, render_matrix,
                        render_report_matrix, report_document)

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_FINDINGS = 3

_RESET = "\x1b[0m"
_COLORS = {"red": "\x1b[31m", "yellow": "\x1b[33m", "green": "\x1b[32m",
           "bold": "\x1b[1m"}


def _use_color(stream: Any) -> bool:
    if os.environ.get("MISSION_RISK_NO_COLOR"):
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def _paint(text: str, color: str, stream: Any) -> str:
    if _use_color(stream):
        return f"{_COLORS[color]}{text}{_RESET}"
    return text


def _error(message: str) -> None:
    print(_paint("error", "red", sys.stderr) + f": {message}", file=sys.stderr)


def _warn(message: str) -> None:
    print(_paint("warning", "yellow", sys.stderr) + f": {message}", file=sys.stderr)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class _Loaded:
    """One input document: raw bytes, digest, and the parsed object."""

    def __init__(self, path: Path, kind: str):
        self.path = path
        self.kind = kind
        self.data = path.read_bytes()
        self.digest = _sha256(self.data)


def _load_inputs(catalog_path: Path, mission_path: Path, assessment_path: Path,
                 ) -> tuple[Catalog, MissionSpec, Assessment, dict[str, str]]:
    raw_catalog = _Loaded(catalog_path, "catalog")
    raw_mission = _Loaded(mission_path, "mission")
    raw_assessment = _Loaded(assessment_path, "assessment")
    catalog = load_catalog(raw_catalog.data)
    spec = load_mission(raw_mission.data)
    assessment = load_assessment(raw_assessment.data)
    digests = {"catalog": raw_catalog.digest, "mission": raw_mission.digest,
               "assessment": raw_assessment.digest}
    return catalog, spec, assessment, digests


# --- validate ---------------------------------------------------------------

def _cmd_validate(args: argparse.Namespace) -> int:
    problems = 0
    io_problems = 0
    catalog = spec = assessment = None

    def attempt(kind: str, path: Path | None, loader: Any) -> Any:
        nonlocal problems, io_problems
        if path is None:
            return None
        try:
            loaded = loader(path.read_bytes())
        except OSError as exc:
            _error(f"{kind}: {exc}")
            io_problems += 1
            return None
        except MissionRiskError as exc:
            _error(f"{kind}: {exc}")
            problems += 1
            return None
        return loaded

    catalog = attempt("catalog", args.catalog, load_catalog)
    if catalog is not None:
        print(f"catalog: OK ({catalog.name or args.catalog.name}: "
              f"{len(catalog.techniques)} techniques, "
              f"{len(catalog.countermeasures)} countermeasures, "
              f"{len(catalog.controls)} controls)")
    spec = attempt("mission", args.mission, load_mission)
    if spec is not None:
        print(f"mission: OK ({spec.name}: {len(spec.units)} units, "
              f"{len(spec.control_flows)} control flows, "
              f"{len(spec.data_flows)} data flows, "
              f"{len(spec.attack_chains)} attack chains)")
    assessment = attempt("assessment", args.assessment, load_assessment)
    if assessment is not None:
        print(f"assessment: OK ({assessment.name or args.assessment.name}: "
              f"strategy {assessment.strategy.value})")

    if catalog is not None and spec is not None and assessment is not None:
        diagnostics = validate_inputs(catalog, spec, assessment)
        errors = [d for d in diagnostics if d.severity == "error"]
        for diagnostic in diagnostics:
            if diagnostic.severity == "error":
                _error(f"cross-check: {diagnostic.message}")
            else:
                _warn(f"cross-check: {diagnostic.message}")
        problems += len(errors)
        if not errors:
            print("cross-checks: OK")

    if io_problems:
        return EXIT_IO
    return EXIT_VALIDATION if problems else EXIT_OK


# --- assess -----------------------------------------------------------------

def _matrix_formats(requested: str | None) -> list[str]:
    return [requested] if requested else ["text", "svg"]


def _run_one_assessment(catalog_path: Path, mission_path: Path,
                        assessment_path: Path, out_dir: Path,
                        matrix_format: str | None) -> tuple[AssessmentResult, list[str]]:
    catalog, spec, assessment, digests = _load_inputs(
        catalog_path, mission_path, assessment_path)
    diagnostics = validate_inputs(catalog, spec, assessment)
    errors = [d.message for d in diagnostics if d.severity == "error"]
    if errors:
        raise MissionRiskError("; ".join(errors))

    result = run_assessment(catalog, spec.mission_graph(), spec.attack_chains, assessment)
    document = report_document(result, catalog, digests=digests,
                               assessment_name=assessment.name)

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, payload in (("report.json", emit_report(document, "json")),
                          ("report.md", emit_report(document, "markdown"))):
        (out_dir / name).write_bytes(payload)
        written.append(name)
    for fmt in _matrix_formats(matrix_format):
        name = f"matrix.{'txt' if fmt == 'text' else 'svg'}"
        (out_dir / name).write_bytes(
            render_matrix(result.scored, catalog.matrix, fmt, provenance=digests))
        written.append(name)
    dot = export_dot(spec.mission_graph(), spec.attack_chains, spec.attack_flows,
                     provenance=digests)
    (out_dir / "mission.dot").write_bytes(dot)
    written.append("mission.dot")
    return result, written


def _print_assessment_summary(result: AssessmentResult, out_dir: Path,
                              written: Sequence[str]) -> None:
    print(f"mission: {result.mission}")
    print(f"adversary tier: {result.adversary_tier} ({result.adversary_label})")
    print(f"threshold: {result.threshold.label}")
    print(f"scored: {len(result.scored)} technique(s)")
    intolerable = ", ".join(sorted(str(t) for t in result.intolerable)) or "none"
    print("intolerable: " + _paint(intolerable, "red", sys.stdout))
    tolerated = [str(s.technique) for s in result.scored
                 if s.technique not in result.intolerable]
    print(f"tolerated: {', '.join(tolerated) or 'none'}")
    print(f"control union: {len(result.control_union)} control(s)")
    for finding in result.findings:
        _warn(f"{finding.kind}: {finding.message}")
    for name in written:
        print(f"wrote: {out_dir / name}")


def _cmd_assess(args: argparse.Namespace) -> int:
    if args.assessment.is_dir():
        return _assess_directory(args)
    try:
        result, written = _run_one_assessment(args.catalog, args.mission,
                                              args.assessment, args.out, args.format)
    except OSError as exc:
        _error(str(exc))
        return EXIT_IO
    except MissionRiskError as exc:
        _error(str(exc))
        return EXIT_VALIDATION
    _print_assessment_summary(result, args.out, written)
    if args.fail_on_findings and result.intolerable:
        return EXIT_FINDINGS
    return EXIT_OK


def _assess_directory(args: argparse.Namespace) -> int:
    paths = sorted(args.assessment.glob("*.json"))
    if not paths:
        _error(f"no assessment documents in {args.assessment}")
        return EXIT_IO
    outcomes: dict[Path, tuple[AssessmentResult, list[str]] | Exception] = {}

    def worker(path: Path) -> tuple[AssessmentResult, list[str]] | Exception:
        try:
            return _run_one_assessment(args.catalog, args.mission, path,
                                       args.out / path.stem, args.format)
        except (OSError, MissionRiskError) as exc:
            return exc

    with ThreadPoolExecutor(max_workers=min(8, len(paths))) as pool:
        for path, outcome in zip(paths, pool.map(worker, paths)):
            outcomes[path] = outcome

    code = EXIT_OK
    for path in paths:
        outcome = outcomes[path]
        print(f"=== {path.name}")
        if isinstance(outcome, OSError):
            _error(str(outcome))
            code = max(code, EXIT_IO)
        elif isinstance(outcome, Exception):
            _error(str(outcome))
            code = max(code, EXIT_VALIDATION)
        else:
            result, written = outcome
            _print_assessment_summary(result, args.out / path.stem, written)
            if args.fail_on_findings and result.intolerable:
                code = max(code, EXIT_FINDINGS)
    return code


# --- render -----------------------------------------------------------------

def _cmd_render(args: argparse.Namespace) -> int:
    try:
        raw = args.report.read_bytes()
        document = json.loads(raw.decode("utf-8"))
    except OSError as exc:
        _error(str(exc))
        return EXIT_IO
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        _error(f"report: {exc}")
        return EXIT_VALIDATION
    if not isinstance(document, dict) or document.get("kind") != "risk-assessment-report":
        _error("report: not a risk-assessment-report document")
        return EXIT_VALIDATION
    provenance = {"report": _sha256(raw)}
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        for fmt in _matrix_formats(args.format):
            name = f"matrix.{'txt' if fmt == 'text' else 'svg'}"
            (args.out / name).write_bytes(render_report_matrix(document, fmt, provenance))
            print(f"wrote: {args.out / name}")
        if args.mission is not None:
            spec = load_mission(args.mission.read_bytes())
            dot = export_dot(spec.mission_graph(), spec.attack_chains,
                             spec.attack_flows, provenance=provenance)
            (args.out / "mission.dot").write_bytes(dot)
            print(f"wrote: {args.out / 'mission.dot'}")
    except OSError as exc:
        _error(str(exc))
        return EXIT_IO
    except MissionRiskError as exc:
        _error(str(exc))
        return EXIT_VALIDATION
    return EXIT_OK


# --- explain ----------------------------------------------------------------

def _cmd_explain(args: argparse.Namespace) -> int:
    try:
        catalog = load_catalog(args.catalog.read_bytes())
    except OSError as exc:
        _error(str(exc))
        return EXIT_IO
    except MissionRiskError as exc:
        _error(f"catalog: {exc}")
        return EXIT_VALIDATION
    try:
        technique_id = TechniqueId.parse(args.technique)
        technique = catalog.technique(technique_id)
    except MissionRiskError as exc:
        _error(str(exc))
        return EXIT_VALIDATION

    print(f"{technique.id}  {technique.name}")
    print(f"framework: {technique.id.framework.value}  tactic: {technique.tactic}")
    scores = []
    for criticality in (Criticality.LOW, Criticality.MEDIUM, Criticality.HIGH):
        score = catalog.base_scores.get((technique.id, criticality))
        if score is not None:
            scores.append(f"{criticality.label} l={score.likelihood} i={score.impact}")
    if scores:
        print("base scores: " + "  ".join(scores))
    else:
        print("base scores: none (tailoring must supply both axes)")
    print(f"countermeasures: {len(technique.countermeasures)}")
    for cm_id in technique.countermeasures:
        cm = catalog.countermeasures[cm_id]
        print(f"- {cm.id}  {cm.description}")
        print(f"  controls: {len(cm.controls)}")
        for control_id in cm.controls:
            control = catalog.controls[control_id]
            print(f"  - {control.id}  {control.title}")
    return EXIT_OK


# --- serve ------------------------------------------------------------------

def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mission-risk",
        description="Mission-centric cyber risk assessment for space systems.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser(
        "validate", help="validate documents and their cross-references")
    p_validate.add_argument("--catalog", type=Path, help="catalog document")
    p_validate.add_argument("--mission", type=Path, help="mission document")
    p_validate.add_argument("--assessment", type=Path, help="assessment document")
    p_validate.set_defaults(func=_cmd_validate)

    p_assess = sub.add_parser(
        "assess", help="run an assessment and write report artifacts")
    p_assess.add_argument("--catalog", type=Path, required=True)
    p_assess.add_argument("--mission", type=Path, required=True)
    p_assess.add_argument("--assessment", type=Path, required=True,
                          help="assessment document, or a directory of them")
    p_assess.add_argument("--out", type=Path, required=True,
                          help="output directory")
    p_assess.add_argument("--format", choices=("text", "svg"),
                          help="write only this matrix format (default: both)")
    p_assess.add_argument("--fail-on-findings", action="store_true",
                          help="exit 3 when intolerable techniques remain")
    p_assess.set_defaults(func=_cmd_assess)

    p_render = sub.add_parser(
        "render", help="re-render matrices (and optionally the graph) from a report")
    p_render.add_argument("--report", type=Path, required=True,
                          help="report.json from a previous run")
    p_render.add_argument("--out", type=Path, required=True)
    p_render.add_argument("--format", choices=("text", "svg"),
                          help="write only this matrix format (default: both)")
    p_render.add_argument("--mission", type=Path,
                          help="also export mission.dot from this mission document")
    p_render.set_defaults(func=_cmd_render)

    p_explain = sub.add_parser(
        "explain", help="walk a technique's countermeasure and control mappings")
    p_explain.add_argument("--catalog", type=Path, required=True)
    p_explain.add_argument("technique", help="technique id, e.g. EX-0012.10")
    p_explain.set_defaults(func=_cmd_explain)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "validate" and not any(
            (args.catalog, args.mission, args.assessment)):
        parser.error("validate requires at least one of --catalog, --mission, --assessment")
    try:
        return args.func(args)
    except OSError as exc:
        _error(str(exc))
        return EXIT_IO
    except MissionRiskError as exc:
        _error(str(exc))
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
