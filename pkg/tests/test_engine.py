from itertools import combinations

import pytest

import missionrisk as mr
from missionrisk import Criticality, MitigationStrategy, RiskBand, TechniqueId, Unit
from missionrisk.errors import (IntegrityError, InvalidChoice, MissingScore,
                                NoCountermeasures, RangeError, SchemaError,
                                UnassignedCriticality)

from helpers import toy_assessment_doc, toy_catalog_doc, toy_mission_doc


def t(text: str) -> TechniqueId:
    return TechniqueId.parse(text)


def u(text: str) -> Unit:
    return Unit.parse(text)


def make_assessment(**overrides) -> mr.Assessment:
    return mr.parse_assessment(toy_assessment_doc(**overrides))


# --- criticality resolution -------------------------------------------------

def test_direct_assignment_wins():
    assessment = make_assessment(criticalities={
        "space": "low", "space/bus/cdh": "high"})
    assert mr.criticality_of(assessment, u("space/bus/cdh")) is Criticality.HIGH


def test_component_fallback_before_segment():
    assessment = make_assessment(criticalities={
        "space": "low", "space/bus": "medium"})
    assert mr.criticality_of(assessment, u("space/bus/cdh")) is Criticality.MEDIUM


def test_segment_fallback():
    assessment = make_assessment(criticalities={"space": "low"})
    assert mr.criticality_of(assessment, u("space/bus/cdh")) is Criticality.LOW


def test_unassigned_criticality_raises():
    assessment = make_assessment(criticalities={"ground": "high"})
    with pytest.raises(UnassignedCriticality):
        mr.criticality_of(assessment, u("space/bus/cdh"))


def test_multi_unit_technique_uses_worst_criticality():
    catalog = mr.parse_catalog(toy_catalog_doc(base_scores={
        "EX-0001": {"high": {"likelihood": 5, "impact": 5},
                    "low": {"likelihood": 1, "impact": 1}}}))
    mission = mr.parse_mission(toy_mission_doc(attack_chains=[
        {"objective": "spread",
         "steps": [{"technique": "EX-0001", "unit": "ground/ops/cmd"},
                   {"technique": "EX-0001", "unit": "space/bus/cdh"}]}]))
    assessment = make_assessment(criticalities={
        "ground": "low", "space": "high", "link": "low", "user": "low"})
    result = mr.run_assessment(catalog, mission.mission_graph(),
                               mission.attack_chains, assessment)
    assert len(result.scored) == 1
    entry = result.scored[0]
    assert entry.criticality is Criticality.HIGH
    assert entry.base == mr.Score(5, 5)
    assert [unit.id for unit in entry.units] == ["ground/ops/cmd", "space/bus/cdh"]


# --- tailoring --------------------------------------------------------------

def test_tailor_passthrough_without_override():
    outcome = mr.tailor(t("EX-0001"), mr.Score(3, 4), None)
    assert outcome.score == mr.Score(3, 4)
    assert (outcome.likelihood_from, outcome.impact_from) == ("base", "base")


def test_tailor_overrides_one_axis():
    tailoring = mr.Tailoring(justification="seen in the wild", likelihood=5)
    outcome = mr.tailor(t("IA-0007"), mr.Score(4, 4), tailoring)
    assert outcome.score == mr.Score(5, 4)
    assert (outcome.likelihood_from, outcome.impact_from) == ("tailored", "base")


def test_tailor_covers_missing_base_entirely():
    tailoring = mr.Tailoring(justification="expert judgment", likelihood=3, impact=5)
    outcome = mr.tailor(t("T1133"), None, tailoring)
    assert outcome.score == mr.Score(3, 5)
    assert (outcome.likelihood_from, outcome.impact_from) == ("tailored", "tailored")


def test_tailor_missing_base_without_full_override():
    tailoring = mr.Tailoring(justification="partial", impact=5)
    with pytest.raises(MissingScore):
        mr.tailor(t("T1133"), None, tailoring)
    with pytest.raises(MissingScore):
        mr.tailor(t("T1133"), None, None)


def test_tailoring_requires_an_axis_and_a_reason():
    with pytest.raises(ValueError):
        mr.Tailoring(justification="no axis given")
    with pytest.raises(ValueError):
        mr.Tailoring(justification="   ", likelihood=3)


def test_tailoring_range_is_enforced_not_clamped():
    with pytest.raises(RangeError):
        mr.Tailoring(justification="too big", likelihood=6)
    with pytest.raises(RangeError):
        mr.Tailoring(justification="too small", impact=0)


# --- banding and filtering --------------------------------------------------

def _scored(value_band_pairs):
    entries = []
    for index, (value, band) in enumerate(value_band_pairs):
        tid = t(f"EX-{index + 1:04d}")
        entries.append(mr.ScoredTechnique(
            technique=tid, units=(u("space/bus/cdh"),), criticality=Criticality.HIGH,
            base=None, final=mr.Score(1, 1), likelihood_from="base",
            impact_from="base", value=value, band=band))
    return entries


def test_threshold_is_strictly_greater():
    scored = _scored([(10, RiskBand.LOW), (14, RiskBand.MEDIUM), (25, RiskBand.HIGH)])
    names = {str(tid) for tid in mr.filter_intolerable(scored, RiskBand.MEDIUM)}
    assert names == {"EX-0003"}
    names = {str(tid) for tid in mr.filter_intolerable(scored, RiskBand.LOW)}
    assert names == {"EX-0002", "EX-0003"}
    assert mr.filter_intolerable(scored, RiskBand.HIGH) == frozenset()


# --- mitigation selection ---------------------------------------------------

def _selection_catalog():
    controls = [{"id": f"SC-{n}", "family": "SC", "title": f"Control {n}"}
                for n in range(1, 9)]
    countermeasures = [
        {"id": "CM0100", "description": "wide", "controls": ["SC-1", "SC-2", "SC-3"]},
        {"id": "CM0200", "description": "narrow", "controls": ["SC-4", "SC-5"]},
        {"id": "CM0300", "description": "tied", "controls": ["SC-6", "SC-7"]},
    ]
    techniques = [{"id": "EX-0001", "name": "Some Technique", "tactic": "Execution",
                   "countermeasures": ["CM0100", "CM0200", "CM0300"]},
                  {"id": "EX-0002", "name": "Unmapped", "tactic": "Execution",
                   "countermeasures": []}]
    return mr.parse_catalog(toy_catalog_doc(
        techniques=techniques, countermeasures=countermeasures, controls=controls,
        base_scores={}))


def test_explicit_choice_resolves_controls():
    catalog = _selection_catalog()
    choice = mr.MitigationChoice(countermeasures=("CM0200",), justification="fits")
    selection = mr.select_mitigations(t("EX-0001"), catalog,
                                      MitigationStrategy.EXPLICIT,
                                      {t("EX-0001"): choice})
    assert selection.countermeasures == ("CM0200",)
    assert selection.controls == ("SC-4", "SC-5")


def test_explicit_choice_may_narrow_controls():
    catalog = _selection_catalog()
    choice = mr.MitigationChoice(countermeasures=("CM0100",), controls=("SC-2",),
                                 justification="one is enough")
    selection = mr.select_mitigations(t("EX-0001"), catalog,
                                      MitigationStrategy.EXPLICIT,
                                      {t("EX-0001"): choice})
    assert selection.controls == ("SC-2",)


def test_explicit_choice_outside_mapping_rejected():
    catalog = _selection_catalog()
    choice = mr.MitigationChoice(countermeasures=("CM0999",), justification="wrong")
    with pytest.raises(InvalidChoice, match="CM0999"):
        mr.select_mitigations(t("EX-0001"), catalog, MitigationStrategy.EXPLICIT,
                              {t("EX-0001"): choice})


def test_explicit_control_outside_resolved_set_rejected():
    catalog = _selection_catalog()
    choice = mr.MitigationChoice(countermeasures=("CM0200",), controls=("SC-1",),
                                 justification="not from this countermeasure")
    with pytest.raises(InvalidChoice, match="SC-1"):
        mr.select_mitigations(t("EX-0001"), catalog, MitigationStrategy.EXPLICIT,
                              {t("EX-0001"): choice})


def test_explicit_without_choice_rejected():
    catalog = _selection_catalog()
    with pytest.raises(InvalidChoice, match="no choice"):
        mr.select_mitigations(t("EX-0001"), catalog, MitigationStrategy.EXPLICIT, {})


def test_strategy_all_unions_everything():
    catalog = _selection_catalog()
    selection = mr.select_mitigations(t("EX-0001"), catalog, MitigationStrategy.ALL)
    assert selection.countermeasures == ("CM0100", "CM0200", "CM0300")
    assert selection.controls == ("SC-1", "SC-2", "SC-3", "SC-4", "SC-5", "SC-6", "SC-7")


def test_greedy_picks_fewest_controls():
    catalog = _selection_catalog()
    selection = mr.select_mitigations(t("EX-0001"), catalog,
                                      MitigationStrategy.GREEDY_MIN_CONTROLS)
    assert selection.countermeasures == ("CM0200",)
    assert len(selection.controls) == 2


def test_greedy_tie_breaks_on_id():
    controls = [{"id": f"SC-{n}", "family": "SC", "title": f"Control {n}"}
                for n in range(1, 5)]
    countermeasures = [
        {"id": "CM0500", "description": "b", "controls": ["SC-1", "SC-2"]},
        {"id": "CM0400", "description": "a", "controls": ["SC-3", "SC-4"]},
    ]
    catalog = mr.parse_catalog(toy_catalog_doc(
        techniques=[{"id": "EX-0001", "name": "x", "tactic": "Execution",
                     "countermeasures": ["CM0500", "CM0400"]}],
        countermeasures=countermeasures, controls=controls, base_scores={}))
    selection = mr.select_mitigations(t("EX-0001"), catalog,
                                      MitigationStrategy.GREEDY_MIN_CONTROLS)
    assert selection.countermeasures == ("CM0400",)


def test_greedy_matches_subset_brute_force():
    catalog = _selection_catalog()
    technique = catalog.technique(t("EX-0001"))
    best = None
    for size in range(1, len(technique.countermeasures) + 1):
        for combo in combinations(technique.countermeasures, size):
            union = set()
            for cm_id in combo:
                union |= set(catalog.countermeasures[cm_id].controls)
            if best is None or len(union) < best:
                best = len(union)
    selection = mr.select_mitigations(t("EX-0001"), catalog,
                                      MitigationStrategy.GREEDY_MIN_CONTROLS)
    assert len(selection.controls) == best


def test_unmapped_technique_has_no_countermeasures():
    catalog = _selection_catalog()
    with pytest.raises(NoCountermeasures):
        mr.select_mitigations(t("EX-0002"), catalog, MitigationStrategy.ALL)


# --- full runs --------------------------------------------------------------

def test_terra_run_has_no_findings(terra_result):
    assert terra_result.findings == []
    assert len(terra_result.scored) == 5
    assert len(terra_result.selections) == 4


def test_terra_audit_log_orders_decisions(terra_result):
    events = [entry["event"] for entry in terra_result.audit_log]
    assert events[0] == "context"
    assert events[1] == "threshold"
    assert events[2] == "criticalities"
    assert events[-1] == "control_union"
    assert [entry["seq"] for entry in terra_result.audit_log] == \
        list(range(1, len(events) + 1))
    placed = [entry["technique"] for entry in terra_result.audit_log
              if entry["event"] == "place"]
    assert placed == ["T1133", "IA-0007", "EX-0012.10", "EX-0013", "T1586"]


def test_terra_selection_justifications_recorded(terra_result):
    selection = terra_result.selections[t("EX-0012.10")]
    assert selection.countermeasures == ("CM0039",)
    assert selection.controls == ("CM-7",)
    assert "least privilege" in selection.justification


def test_missing_score_becomes_finding_not_abort():
    catalog = mr.parse_catalog(toy_catalog_doc(
        techniques=[{"id": "EX-0001", "name": "scored", "tactic": "Execution",
                     "countermeasures": ["CM0001"]},
                    {"id": "EX-0002", "name": "unscored", "tactic": "Execution",
                     "countermeasures": ["CM0001"]}],
        base_scores={"EX-0001": {"high": {"likelihood": 5, "impact": 5}}}))
    mission = mr.parse_mission(toy_mission_doc(attack_chains=[
        {"objective": "x",
         "steps": [{"technique": "EX-0001", "unit": "space/bus/cdh"},
                   {"technique": "EX-0002", "unit": "ground/ops/cmd"}]}]))
    assessment = make_assessment()
    result = mr.run_assessment(catalog, mission.mission_graph(),
                               mission.attack_chains, assessment)
    assert [str(s.technique) for s in result.scored] == ["EX-0001"]
    assert [f.kind for f in result.findings] == ["missing_score"]
    assert str(result.findings[0].technique) == "EX-0002"


def test_unassigned_criticality_becomes_finding():
    catalog = mr.parse_catalog(toy_catalog_doc())
    mission = mr.parse_mission(toy_mission_doc())
    assessment = make_assessment(criticalities={"ground": "high", "link": "high"})
    result = mr.run_assessment(catalog, mission.mission_graph(),
                               mission.attack_chains, assessment)
    assert [f.kind for f in result.findings] == ["unassigned_criticality"]
    assert result.scored == []


def test_unused_tailoring_becomes_finding():
    catalog = mr.parse_catalog(toy_catalog_doc())
    mission = mr.parse_mission(toy_mission_doc())
    assessment = make_assessment(tailorings={
        "PER-0001": {"likelihood": 2, "justification": "nothing declares this"}})
    result = mr.run_assessment(catalog, mission.mission_graph(),
                               mission.attack_chains, assessment)
    assert [f.kind for f in result.findings] == ["unused_tailoring"]


def test_chain_technique_missing_from_catalog_becomes_finding():
    catalog = mr.parse_catalog(toy_catalog_doc())
    mission = mr.parse_mission(toy_mission_doc(attack_chains=[
        {"objective": "x",
         "steps": [{"technique": "EX-0099", "unit": "space/bus/cdh"}]}]))
    assessment = make_assessment(tailorings={
        "EX-0099": {"likelihood": 5, "impact": 5, "justification": "forced high"}})
    result = mr.run_assessment(catalog, mission.mission_graph(),
                               mission.attack_chains, assessment)
    assert [f.kind for f in result.findings] == ["unknown_reference"]
    assert result.selections == {}


def test_high_threshold_tolerates_everything(terra_catalog, terra_mission):
    doc = toy_assessment_doc(mission="terra", threshold="high")
    doc["tailorings"] = {
        "T1133": {"likelihood": 3, "impact": 5, "justification": "no base score"},
        "T1586": {"likelihood": 2, "impact": 4, "justification": "no base score"},
    }
    assessment = mr.parse_assessment(doc)
    result = mr.run_assessment(terra_catalog, terra_mission.mission_graph(),
                               terra_mission.attack_chains, assessment)
    assert result.intolerable == frozenset()
    assert result.selections == {}
    assert result.control_union == frozenset()


# --- cross-validation -------------------------------------------------------

def test_validate_clean_terra(terra_catalog, terra_mission, terra_assessment):
    assert mr.validate_inputs(terra_catalog, terra_mission, terra_assessment) == []


def _toy_trio(**assessment_overrides):
    catalog = mr.parse_catalog(toy_catalog_doc())
    mission = mr.parse_mission(toy_mission_doc())
    assessment = make_assessment(**assessment_overrides)
    return catalog, mission, assessment


def test_validate_flags_mission_mismatch():
    catalog, mission, assessment = _toy_trio(mission="someone-else")
    messages = [d.message for d in mr.validate_inputs(catalog, mission, assessment)
                if d.severity == "error"]
    assert any("someone-else" in m for m in messages)


def test_validate_flags_unknown_criticality_unit():
    catalog, mission, assessment = _toy_trio(criticalities={
        "space": "high", "ground": "high", "link": "high",
        "space/bus/ghost": "low"})
    diagnostics = mr.validate_inputs(catalog, mission, assessment)
    assert [d.severity for d in diagnostics] == ["warning"]
    assert "space/bus/ghost" in diagnostics[0].message


def test_validate_accepts_ancestor_criticality_keys():
    catalog, mission, assessment = _toy_trio(criticalities={
        "space/bus": "high", "ground": "high", "link": "high"})
    assert mr.validate_inputs(catalog, mission, assessment) == []


def test_validate_flags_tailoring_without_chain():
    catalog, mission, assessment = _toy_trio(tailorings={
        "PER-0001": {"likelihood": 1, "justification": "unused"}})
    errors = [d for d in mr.validate_inputs(catalog, mission, assessment)
              if d.severity == "error"]
    assert any("PER-0001" in d.message for d in errors)


def test_validate_warns_on_unmitigable_technique():
    catalog = mr.parse_catalog(toy_catalog_doc(
        techniques=[{"id": "EX-0001", "name": "x", "tactic": "Execution",
                     "countermeasures": []}]))
    mission = mr.parse_mission(toy_mission_doc())
    assessment = make_assessment(criticalities={
        "space": "high", "ground": "high", "link": "high"})
    diagnostics = mr.validate_inputs(catalog, mission, assessment)
    assert [d.severity for d in diagnostics] == ["warning"]
    assert "no countermeasures" in diagnostics[0].message


def test_validate_flags_chain_technique_missing_from_catalog():
    catalog = mr.parse_catalog(toy_catalog_doc())
    mission = mr.parse_mission(toy_mission_doc(attack_chains=[
        {"objective": "x", "steps": [{"technique": "IA-0042", "unit": "space/bus/cdh"}]}]))
    assessment = make_assessment()
    errors = [d for d in mr.validate_inputs(catalog, mission, assessment)
              if d.severity == "error"]
    assert any("IA-0042" in d.message for d in errors)


# --- assessment document parsing --------------------------------------------

def test_bad_threshold_rejected():
    doc = toy_assessment_doc(threshold="extreme")
    with pytest.raises(SchemaError, match="extreme"):
        mr.parse_assessment(doc)


def test_tier_outside_ladder_rejected():
    doc = toy_assessment_doc()
    doc["adversary_tier"] = 8
    with pytest.raises(IntegrityError, match="1..7"):
        mr.parse_assessment(doc)


def test_tailoring_document_needs_an_axis():
    doc = toy_assessment_doc(tailorings={
        "EX-0001": {"justification": "empty override"}})
    with pytest.raises(SchemaError, match="likelihood or impact"):
        mr.parse_assessment(doc)


def test_tailoring_document_range_checked():
    doc = toy_assessment_doc(tailorings={
        "EX-0001": {"likelihood": 0, "justification": "bad"}})
    with pytest.raises(IntegrityError, match="outside 1..5"):
        mr.parse_assessment(doc)


def test_choice_requires_countermeasures():
    doc = toy_assessment_doc(strategy="explicit", choices={
        "EX-0001": {"countermeasures": [], "justification": "none"}})
    with pytest.raises(SchemaError, match="at least one countermeasure"):
        mr.parse_assessment(doc)


def test_unknown_strategy_rejected():
    doc = toy_assessment_doc(strategy="vibes")
    with pytest.raises(SchemaError, match="vibes"):
        mr.parse_assessment(doc)


def test_missing_justification_rejected():
    doc = toy_assessment_doc()
    del doc["threshold_justification"]
    with pytest.raises(SchemaError, match="threshold_justification"):
        mr.parse_assessment(doc)
