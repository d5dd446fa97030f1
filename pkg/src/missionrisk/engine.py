"""The risk application pipeline.

Applicable techniques come from the mission's declared attack chains, never
from inference.  Each one picks up a base (likelihood, impact) score keyed by
the criticality of the units it hits, analyst tailorings override single axes
with recorded justifications, the 5x5 matrix turns the pair into a value and
a band, and every technique in a band strictly above the tolerance threshold
must end up with a countermeasure selection whose security controls are
unioned into the mitigation set.

The whole run is pure: same catalog, mission and assessment in, same result
out, with an audit log entry for every decision along the way.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, BinaryIO, Mapping, Sequence

from . import _document as doc
from .catalog import (Catalog, Criticality, RiskBand, Score, TechniqueId,
                      countermeasures_for, lookup_base_score, resolve_controls)
from .errors import (IntegrityError, InvalidChoice, MissingScore,
                     NoCountermeasures, RangeError, SchemaError,
                     UnassignedCriticality, UnknownCountermeasure,
                     UnknownTechnique)
from .mission import AttackChain, ChainStep, Level, MissionGraph, MissionSpec, Unit


class MitigationStrategy(enum.Enum):
    """How countermeasures are picked for each intolerable technique."""

    EXPLICIT = "explicit"
    ALL = "all"
    GREEDY_MIN_CONTROLS = "greedy_min_controls"


@dataclass(frozen=True)
class Tailoring:
    """An analyst override of one or both score axes, with its reasoning.

    Overrides are absolute values on the 1..5 scale, not deltas, and they
    are never clamped; out-of-range values are rejected outright.
    """

    justification: str
    likelihood: int | None = None
    impact: int | None = None

    def __post_init__(self) -> None:
        if self.likelihood is None and self.impact is None:
            raise ValueError("a tailoring must override at least one axis")
        if not self.justification.strip():
            raise ValueError("a tailoring requires a justification")
        for axis, value in (("likelihood", self.likelihood), ("impact", self.impact)):
            if value is not None and not 1 <= value <= 5:
                raise RangeError(f"tailored {axis} {value} is outside 1..5")


@dataclass(frozen=True)
class MitigationChoice:
    """An explicit pick of countermeasures (and optionally controls)."""

    countermeasures: tuple[str, ...]
    justification: str
    controls: tuple[str, ...] | None = None


@dataclass
class Assessment:
    """The subjective inputs of one risk assessment, all justified."""

    mission: str
    adversary_tier: int
    adversary_justification: str
    threshold: RiskBand
    threshold_justification: str
    criticalities: dict[str, Criticality]
    criticality_justification: str
    strategy: MitigationStrategy
    tailorings: dict[TechniqueId, Tailoring] = field(default_factory=dict)
    choices: dict[TechniqueId, MitigationChoice] = field(default_factory=dict)
    rationale_notes: dict[TechniqueId, str] = field(default_factory=dict)
    name: str | None = None
    notes: str | None = None


@dataclass(frozen=True)
class TailoredScore:
    """A final score plus where each axis came from (base or tailored)."""

    score: Score
    likelihood_from: str
    impact_from: str


@dataclass(frozen=True)
class ScoredTechnique:
    """One technique after scoring and matrix placement."""

    technique: TechniqueId
    units: tuple[Unit, ...]
    criticality: Criticality
    base: Score | None
    final: Score
    likelihood_from: str
    impact_from: str
    value: int
    band: RiskBand


@dataclass(frozen=True)
class Finding:
    """A per-technique problem the run recorded instead of raising."""

    kind: str
    message: str
    technique: TechniqueId | None = None


@dataclass(frozen=True)
class Selection:
    """The mitigation picked for one technique."""

    countermeasures: tuple[str, ...]
    controls: tuple[str, ...]
    justification: str


@dataclass
class AssessmentResult:
    """Everything one run produced, in deterministic order."""

    mission: str
    adversary_tier: int
    adversary_label: str
    threshold: RiskBand
    scored: list[ScoredTechnique]
    intolerable: frozenset[TechniqueId]
    selections: dict[TechniqueId, Selection]
    control_union: frozenset[str]
    findings: list[Finding]
    audit_log: list[dict[str, Any]]


# --- pipeline operations ----------------------------------------------------

def applicable_techniques(mission: MissionGraph,
                          chains: Sequence[AttackChain]) -> list[ChainStep]:
    """Deduplicated (technique, unit) steps across all chains, in order.

    The mission graph is the context the chains were validated against;
    applicability itself comes solely from the declared steps, with no
    inference from graph structure.
    """
    del mission
    steps: list[ChainStep] = []
    seen: set[ChainStep] = set()
    for chain in chains:
        for step in chain.steps:
            if step not in seen:
                seen.add(step)
                steps.append(step)
    return steps


def criticality_of(assessment: Assessment, unit: Unit) -> Criticality:
    """A unit's criticality: direct assignment, else the nearest ancestor.

    Lookup walks module to component to segment, so a single segment-level
    assignment covers every unit underneath it.
    """
    candidate: Unit | None = unit
    while candidate is not None:
        value = assessment.criticalities.get(candidate.id)
        if value is not None:
            return value
        if candidate.module is not None:
            candidate = Unit(candidate.segment, candidate.component)
        elif candidate.component is not None:
            candidate = Unit(candidate.segment)
        else:
            candidate = None
    raise UnassignedCriticality(f"no criticality assigned to {unit.id} or its ancestors")


def tailor(technique: TechniqueId, base: Score | None,
           tailoring: Tailoring | None) -> TailoredScore:
    """Combine a base score with an optional override into the final score.

    A technique without a base score (enterprise techniques carry none)
    needs a tailoring that supplies both axes.
    """
    if tailoring is not None:
        for axis, value in (("likelihood", tailoring.likelihood), ("impact", tailoring.impact)):
            if value is not None and not 1 <= value <= 5:
                raise RangeError(f"tailored {axis} {value} for {technique} is outside 1..5")
    likelihood = tailoring.likelihood if tailoring and tailoring.likelihood is not None else None
    impact = tailoring.impact if tailoring and tailoring.impact is not None else None
    likelihood_from = "tailored" if likelihood is not None else "base"
    impact_from = "tailored" if impact is not None else "base"
    if likelihood is None:
        if base is None:
            raise MissingScore(f"{technique} has no base score and no tailored likelihood")
        likelihood = base.likelihood
    if impact is None:
        if base is None:
            raise MissingScore(f"{technique} has no base score and no tailored impact")
        impact = base.impact
    return TailoredScore(score=Score(likelihood=likelihood, impact=impact),
                         likelihood_from=likelihood_from, impact_from=impact_from)


def filter_intolerable(scored: Sequence[ScoredTechnique],
                       threshold: RiskBand) -> frozenset[TechniqueId]:
    """Techniques whose band lies strictly above the tolerance threshold.

    A technique exactly at the threshold is tolerated.
    """
    return frozenset(s.technique for s in scored if s.band > threshold)


def select_mitigations(technique: TechniqueId, catalog: Catalog,
                       strategy: MitigationStrategy,
                       choices: Mapping[TechniqueId, MitigationChoice] | None = None,
                       ) -> Selection:
    """Pick countermeasures and resolve their controls for one technique."""
    mapped = countermeasures_for(catalog, technique)
    if not mapped:
        raise NoCountermeasures(f"{technique} maps to no countermeasures")
    mapped_ids = [cm.id for cm in mapped]

    explicit_choice: MitigationChoice | None = None
    if strategy is MitigationStrategy.ALL:
        chosen = mapped_ids
        justification = "strategy all: every mapped countermeasure"
    elif strategy is MitigationStrategy.GREEDY_MIN_CONTROLS:
        # fewest controls wins; ties break on the lexicographically least id
        best = min(mapped, key=lambda cm: (len(cm.controls), cm.id))
        chosen = [best.id]
        justification = (f"strategy greedy_min_controls: {best.id} resolves "
                         f"{len(best.controls)} controls, the fewest on offer")
    else:
        explicit_choice = (choices or {}).get(technique)
        if explicit_choice is None:
            raise InvalidChoice(f"strategy explicit: no choice declared for {technique}")
        if not explicit_choice.countermeasures:
            raise InvalidChoice(f"strategy explicit: empty countermeasure pick for {technique}")
        for cid in explicit_choice.countermeasures:
            if cid not in mapped_ids:
                raise InvalidChoice(
                    f"{cid} is not among the countermeasures mapped to {technique}")
        chosen = list(dict.fromkeys(explicit_choice.countermeasures))
        justification = explicit_choice.justification

    control_pool: list[str] = []
    for cid in chosen:
        for control in resolve_controls(catalog, cid):
            if control.id not in control_pool:
                control_pool.append(control.id)

    if explicit_choice is not None and explicit_choice.controls is not None:
        # an explicit pick may narrow the controls, never widen them
        for control_id in explicit_choice.controls:
            if control_id not in control_pool:
                raise InvalidChoice(
                    f"control {control_id} is not resolved by the chosen "
                    f"countermeasures for {technique}")
        controls = tuple(sorted(dict.fromkeys(explicit_choice.controls)))
    else:
        controls = tuple(sorted(control_pool))

    return Selection(countermeasures=tuple(chosen), controls=controls,
                     justification=justification)


def run_assessment(catalog: Catalog, mission: MissionGraph,
                   chains: Sequence[AttackChain],
                   assessment: Assessment) -> AssessmentResult:
    """Run the full pipeline, collecting per-technique problems as findings.

    One technique failing to score or to resolve a mitigation never aborts
    the run; the failure lands in ``findings`` and in the audit log, and
    the other techniques proceed.
    """
    audit: list[dict[str, Any]] = []
    findings: list[Finding] = []
    seq = 0

    def record(event: str, **detail: Any) -> None:
        nonlocal seq
        seq += 1
        audit.append({"seq": seq, "event": event, **detail})

    def fail(kind: str, message: str, technique: TechniqueId | None) -> None:
        findings.append(Finding(kind=kind, message=message, technique=technique))
        record("finding", kind=kind, message=message,
               technique=str(technique) if technique else None)

    tier = catalog.tier(assessment.adversary_tier)
    tier_label = tier.label if tier else f"tier {assessment.adversary_tier}"
    record("context", mission=assessment.mission, adversary_tier=assessment.adversary_tier,
           adversary_label=tier_label, justification=assessment.adversary_justification)
    record("threshold", band=assessment.threshold.label,
           justification=assessment.threshold_justification)
    record("criticalities",
           assigned={uid: c.label for uid, c in assessment.criticalities.items()},
           justification=assessment.criticality_justification)

    steps = applicable_techniques(mission, chains)
    by_technique: dict[TechniqueId, list[Unit]] = {}
    for step in steps:
        by_technique.setdefault(step.technique, []).append(step.unit)

    scored: list[ScoredTechnique] = []
    for technique, units in by_technique.items():
        record("applicable", technique=str(technique), units=[u.id for u in units])

        criticalities: list[Criticality] = []
        unresolved = False
        for unit in units:
            try:
                criticalities.append(criticality_of(assessment, unit))
            except UnassignedCriticality as exc:
                fail("unassigned_criticality", str(exc), technique)
                unresolved = True
        if unresolved:
            continue
        # a technique hitting several units is scored at the worst of them
        criticality = max(criticalities)
        record("criticality", technique=str(technique), resolved=criticality.label)

        base = lookup_base_score(catalog, technique, criticality)
        record("base_score", technique=str(technique),
               score=None if base is None else {"likelihood": base.likelihood,
                                                "impact": base.impact})
        tailoring = assessment.tailorings.get(technique)
        if tailoring is not None:
            record("tailor", technique=str(technique),
                   likelihood=tailoring.likelihood, impact=tailoring.impact,
                   justification=tailoring.justification)
        try:
            outcome = tailor(technique, base, tailoring)
        except (MissingScore, RangeError) as exc:
            fail("missing_score" if isinstance(exc, MissingScore) else "range",
                 str(exc), technique)
            continue

        value, band = catalog.matrix.place(outcome.score)
        record("place", technique=str(technique),
               likelihood=outcome.score.likelihood, impact=outcome.score.impact,
               value=value, band=band.label)
        note = assessment.rationale_notes.get(technique)
        if note:
            record("note", technique=str(technique), note=note)
        scored.append(ScoredTechnique(
            technique=technique, units=tuple(units), criticality=criticality,
            base=base, final=outcome.score, likelihood_from=outcome.likelihood_from,
            impact_from=outcome.impact_from, value=value, band=band))

    for technique in assessment.tailorings:
        if technique not in by_technique:
            fail("unused_tailoring",
                 f"tailoring for {technique} matches no declared attack chain step",
                 technique)

    intolerable = filter_intolerable(scored, assessment.threshold)
    for entry in scored:
        record("decision", technique=str(entry.technique), band=entry.band.label,
               intolerable=entry.technique in intolerable)

    selections: dict[TechniqueId, Selection] = {}
    union: list[str] = []
    for entry in scored:
        if entry.technique not in intolerable:
            continue
        try:
            selection = select_mitigations(entry.technique, catalog,
                                           assessment.strategy, assessment.choices)
        except NoCountermeasures as exc:
            fail("no_countermeasures", str(exc), entry.technique)
            continue
        except InvalidChoice as exc:
            fail("invalid_choice", str(exc), entry.technique)
            continue
        except (UnknownTechnique, UnknownCountermeasure) as exc:
            fail("unknown_reference", str(exc), entry.technique)
            continue
        selections[entry.technique] = selection
        for control_id in selection.controls:
            if control_id not in union:
                union.append(control_id)
        record("selection", technique=str(entry.technique),
               countermeasures=list(selection.countermeasures),
               controls=list(selection.controls),
               justification=selection.justification)

    record("control_union", controls=sorted(union))

    return AssessmentResult(
        mission=assessment.mission, adversary_tier=assessment.adversary_tier,
        adversary_label=tier_label, threshold=assessment.threshold,
        scored=scored, intolerable=intolerable, selections=selections,
        control_union=frozenset(union), findings=findings, audit_log=audit)


# --- input cross-validation -------------------------------------------------

@dataclass(frozen=True)
class Diagnostic:
    """One validation message; only ``error`` severity blocks a run."""

    severity: str
    message: str


def validate_inputs(catalog: Catalog, spec: MissionSpec,
                    assessment: Assessment) -> list[Diagnostic]:
    """Cross-validate the three documents without producing a result.

    Returns every problem found, not just the first: reference mismatches,
    unknown ids, unscoreable techniques and strategy gaps.
    """
    diagnostics: list[Diagnostic] = []

    def error(message: str) -> None:
        diagnostics.append(Diagnostic(severity="error", message=message))

    def warning(message: str) -> None:
        diagnostics.append(Diagnostic(severity="warning", message=message))

    if assessment.mission != spec.name:
        error(f"assessment targets mission {assessment.mission!r}, "
              f"document describes {spec.name!r}")
    if catalog.tier(assessment.adversary_tier) is None:
        error(f"adversary tier {assessment.adversary_tier} is not in the catalog ladder")

    inventory_ids = set(spec.units)
    ancestor_ids = {unit.at_level(level).id
                    for unit in spec.units.values()
                    for level in Level if level >= unit.level}
    for unit_id in assessment.criticalities:
        try:
            Unit.parse(unit_id)
        except SchemaError:
            error(f"criticality key {unit_id!r} is not a well-formed unit id")
            continue
        if unit_id not in inventory_ids and unit_id not in ancestor_ids:
            # an unused table row cannot corrupt a run, so do not block on it
            warning(f"criticality assigned to {unit_id!r}, which matches no unit "
                    f"or ancestor in the mission")

    chain_techniques = set(spec.chain_techniques)
    for technique in chain_techniques:
        if technique not in catalog.techniques:
            error(f"attack chains use technique {technique}, which the catalog lacks")
    for technique in assessment.tailorings:
        if technique not in chain_techniques:
            error(f"tailoring for {technique} matches no declared attack chain step")
    for technique in assessment.choices:
        if technique not in chain_techniques:
            warning(f"mitigation choice for {technique} matches no declared "
                    f"attack chain step")

    # dry-run the pipeline to surface scoring and selection problems
    result = run_assessment(catalog, spec.mission_graph(), spec.attack_chains, assessment)
    for finding in result.findings:
        if finding.kind == "unused_tailoring":
            continue
        if finding.kind == "no_countermeasures":
            warning(finding.message)
        else:
            error(finding.message)
    return diagnostics


# --- document loading -------------------------------------------------------

_TOP_KEYS = {"schema", "name", "notes", "mission", "adversary_tier",
             "adversary_justification", "threshold", "threshold_justification",
             "criticalities", "criticality_justification", "tailorings",
             "mitigation", "rationale_notes"}


def load_assessment(source: str | Path | bytes | BinaryIO) -> Assessment:
    """Load and validate an assessment document."""
    return parse_assessment(doc.read_json(source))


def parse_assessment(document: Any) -> Assessment:
    """Build an Assessment from already-parsed JSON data."""
    root = doc.as_object(document, "$")
    doc.check_schema_version(root)
    doc.reject_unknown(root, _TOP_KEYS, "$")

    name = doc.as_string(root["name"], "name") if "name" in root else None
    notes = doc.as_string(root["notes"], "notes") if "notes" in root else None
    mission = doc.as_string(doc.require(root, "mission", "$"), "mission")

    tier = doc.as_int(doc.require(root, "adversary_tier", "$"), "adversary_tier")
    if not 1 <= tier <= 7:
        raise IntegrityError(f"adversary tier {tier} is outside the 1..7 ladder")
    tier_why = doc.as_string(doc.require(root, "adversary_justification", "$"),
                             "adversary_justification")

    threshold = RiskBand.parse(doc.as_string(doc.require(root, "threshold", "$"), "threshold"),
                               "threshold")
    threshold_why = doc.as_string(doc.require(root, "threshold_justification", "$"),
                                  "threshold_justification")

    raw_crit = doc.as_object(doc.require(root, "criticalities", "$"), "criticalities")
    criticalities: dict[str, Criticality] = {}
    for unit_id, raw_value in raw_crit.items():
        path = f"criticalities.{unit_id}"
        Unit.parse(unit_id, path)
        criticalities[unit_id] = Criticality.parse(doc.as_string(raw_value, path), path)
    crit_why = doc.as_string(doc.require(root, "criticality_justification", "$"),
                             "criticality_justification")

    tailorings: dict[TechniqueId, Tailoring] = {}
    if "tailorings" in root:
        for raw_id, raw_entry in doc.as_object(root["tailorings"], "tailorings").items():
            path = f"tailorings.{raw_id}"
            technique = TechniqueId.parse(raw_id, path)
            obj = doc.as_object(raw_entry, path)
            doc.reject_unknown(obj, {"likelihood", "impact", "justification"}, path)
            likelihood = doc.as_int(obj["likelihood"], f"{path}.likelihood") \
                if "likelihood" in obj else None
            impact = doc.as_int(obj["impact"], f"{path}.impact") if "impact" in obj else None
            if likelihood is None and impact is None:
                raise SchemaError(path, "a tailoring must override likelihood or impact")
            for axis, value in (("likelihood", likelihood), ("impact", impact)):
                if value is not None and not 1 <= value <= 5:
                    raise IntegrityError(
                        f"tailoring for {technique}: {axis} {value} is outside 1..5")
            justification = doc.as_string(doc.require(obj, "justification", path),
                                          f"{path}.justification")
            tailorings[technique] = Tailoring(justification=justification,
                                              likelihood=likelihood, impact=impact)

    mitigation = doc.as_object(doc.require(root, "mitigation", "$"), "mitigation")
    doc.reject_unknown(mitigation, {"strategy", "choices"}, "mitigation")
    strategy_name = doc.as_string(doc.require(mitigation, "strategy", "mitigation"),
                                  "mitigation.strategy")
    try:
        strategy = MitigationStrategy(strategy_name)
    except ValueError:
        raise SchemaError("mitigation.strategy",
                          f"{strategy_name!r} is not one of explicit, all, "
                          f"greedy_min_controls") from None

    choices: dict[TechniqueId, MitigationChoice] = {}
    if "choices" in mitigation:
        for raw_id, raw_entry in doc.as_object(mitigation["choices"],
                                               "mitigation.choices").items():
            path = f"mitigation.choices.{raw_id}"
            technique = TechniqueId.parse(raw_id, path)
            obj = doc.as_object(raw_entry, path)
            doc.reject_unknown(obj, {"countermeasures", "controls", "justification"}, path)
            countermeasures = tuple(
                doc.as_string(c, f"{path}.countermeasures[{i}]")
                for i, c in enumerate(doc.as_array(doc.require(obj, "countermeasures", path),
                                                   f"{path}.countermeasures")))
            if not countermeasures:
                raise SchemaError(f"{path}.countermeasures",
                                  "an explicit choice requires at least one countermeasure")
            controls = None
            if "controls" in obj:
                controls = tuple(
                    doc.as_string(c, f"{path}.controls[{i}]")
                    for i, c in enumerate(doc.as_array(obj["controls"], f"{path}.controls")))
            justification = doc.as_string(doc.require(obj, "justification", path),
                                          f"{path}.justification")
            choices[technique] = MitigationChoice(countermeasures=countermeasures,
                                                  justification=justification,
                                                  controls=controls)

    rationale: dict[TechniqueId, str] = {}
    if "rationale_notes" in root:
        for raw_id, raw_note in doc.as_object(root["rationale_notes"],
                                              "rationale_notes").items():
            path = f"rationale_notes.{raw_id}"
            rationale[TechniqueId.parse(raw_id, path)] = doc.as_string(raw_note, path)

    return Assessment(mission=mission, adversary_tier=tier, adversary_justification=tier_why,
                      threshold=threshold, threshold_justification=threshold_why,
                      criticalities=criticalities, criticality_justification=crit_why,
                      strategy=strategy, tailorings=tailorings, choices=choices,
                      rationale_notes=rationale, name=name, notes=notes)
