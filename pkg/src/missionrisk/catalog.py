"""Reference data for risk assessment.

A catalog bundles adversary technique definitions (space-domain and
enterprise id schemes), technique-to-countermeasure mappings,
countermeasure-to-security-control mappings, per-criticality base risk
scores, a 5x5 risk matrix and the adversary tier ladder.  Catalogs are
immutable after loading and safe to share between concurrent assessments.

Catalog documents are JSON (``"schema": 1``) with top-level keys
``techniques``, ``countermeasures``, ``controls``, ``base_scores``,
``risk_matrix`` and ``tiers``.  The matrix and the tier ladder may be
omitted, in which case the packaged defaults apply.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, BinaryIO

from . import _document as doc
from .errors import (IntegrityError, RangeError, SchemaError,
                     UnknownCountermeasure, UnknownTechnique)


class Framework(enum.Enum):
    """Origin id scheme of a technique."""

    SPARTA = "sparta"
    ATTACK = "attack"


_SPARTA_ID = re.compile(r"^[A-Z]{2,4}-\d{4}(\.\d+)?$")
_ATTACK_ID = re.compile(r"^T\d{4}(\.\d{3})?$")
_CONTROL_ID = re.compile(r"^([A-Z]{2})-\d+(\(\d+\))?$")


@dataclass(frozen=True, order=True)
class TechniqueId:
    """A technique identifier tagged with the framework it belongs to.

    Space-domain ids look like ``IA-0007`` or ``EX-0012.10``; enterprise ids
    look like ``T1133`` or ``T1021.004``.
    """

    value: str
    framework: Framework

    @classmethod
    def parse(cls, text: str, path: str = "") -> "TechniqueId":
        if _SPARTA_ID.match(text):
            return cls(text, Framework.SPARTA)
        if _ATTACK_ID.match(text):
            return cls(text, Framework.ATTACK)
        raise SchemaError(path, f"{text!r} is not a recognizable technique id")

    @property
    def parent(self) -> "TechniqueId | None":
        """Parent technique of a sub-technique, None for top-level ids."""
        if "." not in self.value:
            return None
        return TechniqueId(self.value.split(".", 1)[0], self.framework)

    def __str__(self) -> str:
        return self.value


class Criticality(enum.IntEnum):
    """Mission criticality of a unit; comparisons follow severity."""

    LOW = 1
    MEDIUM = 2
    HIGH = 3

    @classmethod
    def parse(cls, text: str, path: str = "") -> "Criticality":
        try:
            return cls[text.upper()]
        except KeyError:
            raise SchemaError(path, f"{text!r} is not one of low, medium, high") from None

    @property
    def label(self) -> str:
        return self.name.lower()


class RiskBand(enum.IntEnum):
    """Qualitative band of a matrix cell; comparisons follow severity."""

    LOW = 1
    MEDIUM = 2
    HIGH = 3

    @classmethod
    def parse(cls, text: str, path: str = "") -> "RiskBand":
        try:
            return cls[text.upper()]
        except KeyError:
            raise SchemaError(path, f"{text!r} is not one of low, medium, high") from None

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class Score:
    """A (likelihood, impact) pair, each on the 1..5 scale."""

    likelihood: int
    impact: int


@dataclass(frozen=True)
class Technique:
    id: TechniqueId
    name: str
    tactic: str
    countermeasures: tuple[str, ...]


@dataclass(frozen=True)
class Countermeasure:
    id: str
    description: str
    controls: tuple[str, ...]


@dataclass(frozen=True)
class SecurityControl:
    id: str
    family: str
    title: str


@dataclass(frozen=True)
class AdversaryTier:
    tier: int
    label: str


DEFAULT_TIERS: tuple[AdversaryTier, ...] = (
    AdversaryTier(1, "script kiddies"),
    AdversaryTier(2, "hackers for hire"),
    AdversaryTier(3, "small hacker teams"),
    AdversaryTier(4, "insider threats"),
    AdversaryTier(5, "large well-organized teams"),
    AdversaryTier(6, "highly capable state actors"),
    AdversaryTier(7, "most capable state actors"),
)

_BAND_ORDER = (RiskBand.LOW, RiskBand.MEDIUM, RiskBand.HIGH)


@dataclass(frozen=True)
class RiskMatrix:
    """A 5x5 grid of risk values partitioned into contiguous bands.

    ``cells[l-1][i-1]`` is the value at likelihood ``l`` and impact ``i``.
    Values are deliberately not the product of the axes; they rank cells so
    that every value in 1..25 appears exactly once and never decreases along
    either axis.
    """

    cells: tuple[tuple[int, ...], ...]
    bands: tuple[tuple[RiskBand, int, int], ...]

    def value(self, likelihood: int, impact: int) -> int:
        _check_axis(likelihood, "likelihood")
        _check_axis(impact, "impact")
        return self.cells[likelihood - 1][impact - 1]

    def band_of(self, value: int) -> RiskBand:
        for band, lo, hi in self.bands:
            if lo <= value <= hi:
                return band
        raise IntegrityError(f"risk value {value} falls outside every band")

    def place(self, score: Score) -> tuple[int, RiskBand]:
        value = self.value(score.likelihood, score.impact)
        return value, self.band_of(value)

    def band_range(self, band: RiskBand) -> tuple[int, int]:
        for candidate, lo, hi in self.bands:
            if candidate is band:
                return lo, hi
        raise IntegrityError(f"band {band.label} missing from matrix")


def _check_axis(value: int, axis: str) -> None:
    if not 1 <= value <= 5:
        raise RangeError(f"{axis} {value} is outside 1..5")


def _validate_matrix(cells: tuple[tuple[int, ...], ...],
                     bands: tuple[tuple[RiskBand, int, int], ...]) -> None:
    values = [v for row in cells for v in row]
    if sorted(values) != list(range(1, 26)):
        raise IntegrityError("matrix cells must contain each value 1..25 exactly once")
    for l in range(5):
        for i in range(5):
            if i < 4 and cells[l][i] > cells[l][i + 1]:
                raise IntegrityError(
                    f"matrix not monotone in impact at likelihood {l + 1}, impact {i + 1}")
            if l < 4 and cells[l][i] > cells[l + 1][i]:
                raise IntegrityError(
                    f"matrix not monotone in likelihood at likelihood {l + 1}, impact {i + 1}")
    if [band for band, _, _ in bands] != list(_BAND_ORDER):
        raise IntegrityError("bands must be low, medium, high in that order")
    expected_lo = 1
    for band, lo, hi in bands:
        if lo != expected_lo or hi < lo:
            raise IntegrityError(f"band {band.label} must cover a contiguous range after its predecessor")
        expected_lo = hi + 1
    if expected_lo != 26:
        raise IntegrityError("bands must cover 1..25 without gaps")


@dataclass(frozen=True)
class Catalog:
    """Immutable reference data a risk assessment runs against."""

    techniques: dict[TechniqueId, Technique]
    countermeasures: dict[str, Countermeasure]
    controls: dict[str, SecurityControl]
    base_scores: dict[tuple[TechniqueId, Criticality], Score]
    matrix: RiskMatrix
    tiers: tuple[AdversaryTier, ...]
    name: str | None = None
    notes: str | None = None

    def technique(self, technique_id: TechniqueId) -> Technique:
        try:
            return self.techniques[technique_id]
        except KeyError:
            raise UnknownTechnique(f"technique {technique_id} is not in the catalog") from None

    def tier(self, number: int) -> AdversaryTier | None:
        for tier in self.tiers:
            if tier.tier == number:
                return tier
        return None


def lookup_base_score(catalog: Catalog, technique: TechniqueId,
                      criticality: Criticality) -> Score | None:
    """Base (likelihood, impact) for a technique at a criticality, or None."""
    return catalog.base_scores.get((technique, criticality))


def countermeasures_for(catalog: Catalog, technique: TechniqueId) -> list[Countermeasure]:
    """Mapped countermeasures in catalog order; may be empty."""
    entry = catalog.technique(technique)
    return [catalog.countermeasures[cid] for cid in entry.countermeasures]


def resolve_controls(catalog: Catalog, countermeasure_id: str) -> list[SecurityControl]:
    """Security controls behind one countermeasure, in catalog order."""
    try:
        cm = catalog.countermeasures[countermeasure_id]
    except KeyError:
        raise UnknownCountermeasure(
            f"countermeasure {countermeasure_id} is not in the catalog") from None
    return [catalog.controls[cid] for cid in cm.controls]


# --- document loading -------------------------------------------------------

_TOP_KEYS = {"schema", "name", "notes", "techniques", "countermeasures",
             "controls", "base_scores", "risk_matrix", "tiers"}


def load_catalog(source: str | Path | bytes | BinaryIO) -> Catalog:
    """Load and fully validate a catalog document."""
    return parse_catalog(doc.read_json(source))


def parse_catalog(document: Any) -> Catalog:
    """Build a Catalog from already-parsed JSON data."""
    root = doc.as_object(document, "$")
    doc.check_schema_version(root)
    doc.reject_unknown(root, _TOP_KEYS, "$")

    name = None
    if "name" in root:
        name = doc.as_string(root["name"], "name")
    notes = None
    if "notes" in root:
        notes = doc.as_string(root["notes"], "notes")

    controls = _parse_controls(doc.as_array(doc.require(root, "controls", "$"), "controls"))
    countermeasures = _parse_countermeasures(
        doc.as_array(doc.require(root, "countermeasures", "$"), "countermeasures"), controls)
    techniques = _parse_techniques(
        doc.as_array(doc.require(root, "techniques", "$"), "techniques"), countermeasures)
    base_scores = _parse_base_scores(
        doc.as_object(doc.require(root, "base_scores", "$"), "base_scores"), techniques)

    if "risk_matrix" in root:
        matrix = _parse_matrix(doc.as_object(root["risk_matrix"], "risk_matrix"))
    else:
        matrix = default_matrix()
    if "tiers" in root:
        tiers = _parse_tiers(doc.as_array(root["tiers"], "tiers"))
    else:
        tiers = DEFAULT_TIERS

    return Catalog(techniques=techniques, countermeasures=countermeasures,
                   controls=controls, base_scores=base_scores, matrix=matrix,
                   tiers=tiers, name=name, notes=notes)


def _parse_controls(entries: list[Any]) -> dict[str, SecurityControl]:
    controls: dict[str, SecurityControl] = {}
    for index, entry in enumerate(entries):
        path = f"controls[{index}]"
        obj = doc.as_object(entry, path)
        doc.reject_unknown(obj, {"id", "family", "title"}, path)
        cid = doc.as_string(doc.require(obj, "id", path), f"{path}.id")
        match = _CONTROL_ID.match(cid)
        if not match:
            raise SchemaError(f"{path}.id", f"{cid!r} is not a control id like AC-3")
        family = doc.as_string(doc.require(obj, "family", path), f"{path}.family")
        if family != match.group(1):
            raise IntegrityError(
                f"control {cid}: family {family!r} does not match the id prefix {match.group(1)!r}")
        title = doc.as_string(doc.require(obj, "title", path), f"{path}.title")
        if cid in controls:
            raise IntegrityError(f"duplicate control id {cid}")
        controls[cid] = SecurityControl(id=cid, family=family, title=title)
    return controls


def _parse_countermeasures(entries: list[Any],
                           controls: dict[str, SecurityControl]) -> dict[str, Countermeasure]:
    countermeasures: dict[str, Countermeasure] = {}
    for index, entry in enumerate(entries):
        path = f"countermeasures[{index}]"
        obj = doc.as_object(entry, path)
        doc.reject_unknown(obj, {"id", "description", "controls"}, path)
        cid = doc.as_string(doc.require(obj, "id", path), f"{path}.id")
        description = doc.as_string(doc.require(obj, "description", path), f"{path}.description")
        refs = []
        for ref_index, ref in enumerate(doc.as_array(doc.require(obj, "controls", path), f"{path}.controls")):
            ref_path = f"{path}.controls[{ref_index}]"
            ref_id = doc.as_string(ref, ref_path)
            if ref_id not in controls:
                raise IntegrityError(f"countermeasure {cid} references unknown control {ref_id}")
            if ref_id in refs:
                raise IntegrityError(f"countermeasure {cid} lists control {ref_id} twice")
            refs.append(ref_id)
        if cid in countermeasures:
            raise IntegrityError(f"duplicate countermeasure id {cid}")
        countermeasures[cid] = Countermeasure(id=cid, description=description, controls=tuple(refs))
    return countermeasures


def _parse_techniques(entries: list[Any],
                      countermeasures: dict[str, Countermeasure]) -> dict[TechniqueId, Technique]:
    techniques: dict[TechniqueId, Technique] = {}
    for index, entry in enumerate(entries):
        path = f"techniques[{index}]"
        obj = doc.as_object(entry, path)
        doc.reject_unknown(obj, {"id", "name", "tactic", "countermeasures"}, path)
        tid = TechniqueId.parse(doc.as_string(doc.require(obj, "id", path), f"{path}.id"),
                                f"{path}.id")
        name = doc.as_string(doc.require(obj, "name", path), f"{path}.name")
        tactic = doc.as_string(doc.require(obj, "tactic", path), f"{path}.tactic")
        refs = []
        for ref_index, ref in enumerate(doc.as_array(doc.require(obj, "countermeasures", path),
                                                     f"{path}.countermeasures")):
            ref_path = f"{path}.countermeasures[{ref_index}]"
            ref_id = doc.as_string(ref, ref_path)
            if ref_id not in countermeasures:
                raise IntegrityError(f"technique {tid} references unknown countermeasure {ref_id}")
            if ref_id in refs:
                raise IntegrityError(f"technique {tid} lists countermeasure {ref_id} twice")
            refs.append(ref_id)
        if tid in techniques:
            raise IntegrityError(f"duplicate technique id {tid}")
        techniques[tid] = Technique(id=tid, name=name, tactic=tactic, countermeasures=tuple(refs))
    return techniques


def _parse_base_scores(table: dict[str, Any],
                       techniques: dict[TechniqueId, Technique],
                       ) -> dict[tuple[TechniqueId, Criticality], Score]:
    scores: dict[tuple[TechniqueId, Criticality], Score] = {}
    for raw_id, by_criticality in table.items():
        path = f"base_scores.{raw_id}"
        tid = TechniqueId.parse(raw_id, path)
        if tid not in techniques:
            raise IntegrityError(f"base score for unknown technique {tid}")
        obj = doc.as_object(by_criticality, path)
        doc.reject_unknown(obj, {"low", "medium", "high"}, path)
        for crit_name, raw_score in obj.items():
            crit_path = f"{path}.{crit_name}"
            criticality = Criticality.parse(crit_name, crit_path)
            score_obj = doc.as_object(raw_score, crit_path)
            doc.reject_unknown(score_obj, {"likelihood", "impact"}, crit_path)
            likelihood = doc.as_int(doc.require(score_obj, "likelihood", crit_path),
                                    f"{crit_path}.likelihood")
            impact = doc.as_int(doc.require(score_obj, "impact", crit_path), f"{crit_path}.impact")
            for axis, value in (("likelihood", likelihood), ("impact", impact)):
                if not 1 <= value <= 5:
                    raise IntegrityError(f"base score {tid}/{crit_name}: {axis} {value} is outside 1..5")
            scores[(tid, criticality)] = Score(likelihood=likelihood, impact=impact)
    return scores


def _parse_matrix(obj: dict[str, Any]) -> RiskMatrix:
    doc.reject_unknown(obj, {"cells", "bands"}, "risk_matrix")
    rows = doc.as_array(doc.require(obj, "cells", "risk_matrix"), "risk_matrix.cells")
    if len(rows) != 5:
        raise SchemaError("risk_matrix.cells", f"expected 5 rows, got {len(rows)}")
    cells = []
    for row_index, row in enumerate(rows):
        row_path = f"risk_matrix.cells[{row_index}]"
        values = doc.as_array(row, row_path)
        if len(values) != 5:
            raise SchemaError(row_path, f"expected 5 values, got {len(values)}")
        cells.append(tuple(doc.as_int(v, f"{row_path}[{i}]") for i, v in enumerate(values)))
    bands = _parse_bands(obj.get("bands"))
    matrix = RiskMatrix(cells=tuple(cells), bands=bands)
    _validate_matrix(matrix.cells, matrix.bands)
    return matrix


_DEFAULT_BANDS: tuple[tuple[RiskBand, int, int], ...] = (
    (RiskBand.LOW, 1, 10),
    (RiskBand.MEDIUM, 11, 19),
    (RiskBand.HIGH, 20, 25),
)


def _parse_bands(raw: Any) -> tuple[tuple[RiskBand, int, int], ...]:
    if raw is None:
        return _DEFAULT_BANDS
    obj = doc.as_object(raw, "risk_matrix.bands")
    doc.reject_unknown(obj, {"low", "medium", "high"}, "risk_matrix.bands")
    bands = []
    for band in _BAND_ORDER:
        path = f"risk_matrix.bands.{band.label}"
        pair = doc.as_array(doc.require(obj, band.label, "risk_matrix.bands"), path)
        if len(pair) != 2:
            raise SchemaError(path, "expected [lo, hi]")
        bands.append((band, doc.as_int(pair[0], f"{path}[0]"), doc.as_int(pair[1], f"{path}[1]")))
    return tuple(bands)


def _parse_tiers(entries: list[Any]) -> tuple[AdversaryTier, ...]:
    tiers = []
    for index, entry in enumerate(entries):
        path = f"tiers[{index}]"
        obj = doc.as_object(entry, path)
        doc.reject_unknown(obj, {"tier", "label"}, path)
        number = doc.as_int(doc.require(obj, "tier", path), f"{path}.tier")
        label = doc.as_string(doc.require(obj, "label", path), f"{path}.label")
        tiers.append(AdversaryTier(tier=number, label=label))
    if [t.tier for t in tiers] != list(range(1, 8)):
        raise IntegrityError("tiers must be numbered 1..7 in ascending order")
    labels = [t.label for t in tiers]
    if len(set(labels)) != len(labels):
        raise IntegrityError("tier labels must be distinct")
    return tuple(tiers)


# --- serialization ----------------------------------------------------------

def catalog_to_document(catalog: Catalog) -> dict[str, Any]:
    """Serialize back to the document shape; loses nothing a reload needs."""
    document: dict[str, Any] = {"schema": doc.SCHEMA_VERSION}
    if catalog.name is not None:
        document["name"] = catalog.name
    if catalog.notes is not None:
        document["notes"] = catalog.notes
    document["techniques"] = [
        {"id": str(t.id), "name": t.name, "tactic": t.tactic,
         "countermeasures": list(t.countermeasures)}
        for t in catalog.techniques.values()
    ]
    document["countermeasures"] = [
        {"id": c.id, "description": c.description, "controls": list(c.controls)}
        for c in catalog.countermeasures.values()
    ]
    document["controls"] = [
        {"id": c.id, "family": c.family, "title": c.title}
        for c in catalog.controls.values()
    ]
    scores: dict[str, dict[str, Any]] = {}
    for (tid, criticality), score in catalog.base_scores.items():
        scores.setdefault(str(tid), {})[criticality.label] = {
            "likelihood": score.likelihood, "impact": score.impact}
    document["base_scores"] = scores
    document["risk_matrix"] = {
        "cells": [list(row) for row in catalog.matrix.cells],
        "bands": {band.label: [lo, hi] for band, lo, hi in catalog.matrix.bands},
    }
    document["tiers"] = [{"tier": t.tier, "label": t.label} for t in catalog.tiers]
    return document


def dump_catalog(catalog: Catalog) -> str:
    return json.dumps(catalog_to_document(catalog), indent=2, sort_keys=True,
                      ensure_ascii=False) + "\n"


_DEFAULT_MATRIX: RiskMatrix | None = None


def default_matrix() -> RiskMatrix:
    """The packaged 5x5 matrix: a rank ordering of all 25 cells."""
    global _DEFAULT_MATRIX
    if _DEFAULT_MATRIX is None:
        data = resources.files("missionrisk.data").joinpath("default_matrix.json").read_bytes()
        _DEFAULT_MATRIX = _parse_matrix(doc.as_object(doc.read_json(data), "risk_matrix"))
    return _DEFAULT_MATRIX
