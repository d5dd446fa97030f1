"""Builders and independent oracles shared by the test modules.

The oracles deliberately avoid the package's own graph code: collapse works
on raw id strings, reachability is a plain BFS closure, and cycle checking
uses DFS coloring rather than the in-degree algorithm the package uses.
"""

from __future__ import annotations

import random
from typing import Iterable

from missionrisk import FlowKind, Level, Segment, Unit, make_flow

# --- document builders ------------------------------------------------------


def toy_catalog_doc(techniques=None, countermeasures=None, controls=None,
                    base_scores=None) -> dict:
    """A minimal valid catalog document; defaults are one fully wired chain."""
    if controls is None:
        controls = [{"id": "AC-1", "family": "AC", "title": "Policy and Procedures"}]
    if countermeasures is None:
        countermeasures = [{"id": "CM0001", "description": "Do the safe thing.",
                            "controls": [c["id"] for c in controls]}]
    if techniques is None:
        techniques = [{"id": "EX-0001", "name": "Some Technique", "tactic": "Execution",
                       "countermeasures": [c["id"] for c in countermeasures]}]
    if base_scores is None:
        base_scores = {techniques[0]["id"]: {"high": {"likelihood": 5, "impact": 5}}}
    return {"schema": 1, "techniques": techniques, "countermeasures": countermeasures,
            "controls": controls, "base_scores": base_scores}


def toy_mission_doc(name="toy", units=None, control_flows=None, data_flows=None,
                    attack_chains=None, attack_flows=None) -> dict:
    if units is None:
        units = [
            {"segment": "ground", "component": "ops", "module": "cmd"},
            {"segment": "link", "component": "up", "module": "tx"},
            {"segment": "space", "component": "bus", "module": "cdh"},
        ]
    if control_flows is None:
        control_flows = [{"label": "cmd", "units": ["ground/ops/cmd", "link/up/tx",
                                                    "space/bus/cdh"]}]
    if data_flows is None:
        data_flows = []
    if attack_chains is None:
        attack_chains = [{"objective": "take over",
                          "steps": [{"technique": "EX-0001", "unit": "space/bus/cdh"}]}]
    if attack_flows is None:
        attack_flows = []
    return {"schema": 1, "name": name, "units": units, "control_flows": control_flows,
            "data_flows": data_flows, "attack_chains": attack_chains,
            "attack_flows": attack_flows}


def toy_assessment_doc(mission="toy", threshold="medium", strategy="all",
                       criticalities=None, tailorings=None, choices=None) -> dict:
    doc = {
        "schema": 1,
        "mission": mission,
        "adversary_tier": 4,
        "adversary_justification": "because the test says so",
        "threshold": threshold,
        "threshold_justification": "because the test says so",
        "criticalities": criticalities if criticalities is not None
        else {"space": "high", "ground": "high", "link": "high", "user": "high"},
        "criticality_justification": "because the test says so",
        "mitigation": {"strategy": strategy},
    }
    if tailorings is not None:
        doc["tailorings"] = tailorings
    if choices is not None:
        doc["mitigation"]["choices"] = choices
    return doc


# --- random graph material --------------------------------------------------

_SEGMENTS = [s.value for s in Segment]


def random_module_units(rng: random.Random, count: int) -> list[Unit]:
    """Distinct module-level units spread over random segments/components."""
    units: list[Unit] = []
    seen: set[str] = set()
    while len(units) < count:
        segment = Segment(rng.choice(_SEGMENTS))
        component = f"c{rng.randrange(3)}"
        module = f"m{rng.randrange(4)}"
        unit = Unit(segment, component, module)
        if unit.id not in seen:
            seen.add(unit.id)
            units.append(unit)
    return units


def random_dag_flows(rng: random.Random, units: list[Unit], kind: FlowKind,
                     count: int) -> list:
    """Flows whose unit order follows one global rank, so unions stay acyclic."""
    flows = []
    for index in range(count):
        size = rng.randint(2, min(6, len(units)))
        picks = sorted(rng.sample(range(len(units)), size))
        flows.append(make_flow(kind, [units[i] for i in picks], label=f"f{index}"))
    return flows


def random_arc_set(rng: random.Random, units: list[Unit],
                   arc_count: int) -> set[tuple[Unit, Unit]]:
    """Arbitrary arcs (cycles allowed), for data-kind graphs."""
    arcs: set[tuple[Unit, Unit]] = set()
    attempts = 0
    while len(arcs) < arc_count and attempts < arc_count * 10:
        attempts += 1
        src, dst = rng.sample(units, 2)
        arcs.add((src, dst))
    return arcs


# --- independent oracles ----------------------------------------------------


def collapse_id(unit_id: str, level: Level) -> str:
    """Ancestor id by plain string surgery, independent of Unit.at_level."""
    parts = unit_id.split("/")
    keep = {Level.SEGMENT: 1, Level.COMPONENT: 2, Level.MODULE: 3}[level]
    return "/".join(parts[:keep])


def collapse_oracle(node_ids: Iterable[str], arc_ids: Iterable[tuple[str, str]],
                    level: Level) -> tuple[set[str], set[tuple[str, str]]]:
    """Brute-force graph collapse on raw id strings."""
    nodes = {collapse_id(n, level) for n in node_ids}
    arcs = set()
    for src, dst in arc_ids:
        a, b = collapse_id(src, level), collapse_id(dst, level)
        if a != b:
            arcs.add((a, b))
    return nodes, arcs


def closure(node_ids: Iterable[str],
            arc_ids: Iterable[tuple[str, str]]) -> set[tuple[str, str]]:
    """All reachable ordered pairs (excluding the trivial u->u), by BFS."""
    succ: dict[str, set[str]] = {n: set() for n in node_ids}
    for src, dst in arc_ids:
        succ[src].add(dst)
    reach: set[tuple[str, str]] = set()
    for start in succ:
        frontier = list(succ[start])
        seen = set()
        while frontier:
            node = frontier.pop()
            if node in seen:
                continue
            seen.add(node)
            reach.add((start, node))
            frontier.extend(succ[node])
    return reach


def has_cycle_oracle(node_ids: Iterable[str],
                     arc_ids: Iterable[tuple[str, str]]) -> bool:
    """DFS three-color cycle detection, iterative to dodge recursion limits."""
    succ: dict[str, list[str]] = {n: [] for n in node_ids}
    for src, dst in arc_ids:
        succ[src].append(dst)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n: WHITE for n in succ}
    for root in succ:
        if color[root] != WHITE:
            continue
        stack: list[tuple[str, int]] = [(root, 0)]
        color[root] = GRAY
        while stack:
            node, next_index = stack[-1]
            if next_index < len(succ[node]):
                stack[-1] = (node, next_index + 1)
                child = succ[node][next_index]
                if color[child] == GRAY:
                    return True
                if color[child] == WHITE:
                    color[child] = GRAY
                    stack.append((child, 0))
            else:
                color[node] = BLACK
                stack.pop()
    return False
