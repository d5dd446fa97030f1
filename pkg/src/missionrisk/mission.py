"""Mission modeling: typed space-system units, control and data flows, their
union graphs, granularity projection, and attack overlays.

A flow is a directed line graph over units; a flow graph is the set union of
flows of one kind.  Control flow graphs must stay acyclic (commands descend
from originators), data flow graphs may cycle.  The mission graph unions
both, tagging every arc with its kind.  Attack chains and attack flows are
overlays: ordered technique/unit steps and ordered unit traversals that may
leave the modeled mission.

Mission documents are JSON (``"schema": 1``) with top-level keys ``units``,
``control_flows``, ``data_flows``, ``attack_chains`` and ``attack_flows``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Any, BinaryIO, Iterable, Sequence

from . import _document as doc
from .catalog import TechniqueId
from .errors import (CycleError, DuplicateUnit, IntegrityError, KindMismatch,
                     LevelError, MixedGranularity, SchemaError, UnknownUnit)


class Segment(enum.Enum):
    """The four coarse partitions of a space system."""

    SPACE = "space"
    GROUND = "ground"
    USER = "user"
    LINK = "link"


SEGMENT_ORDER: tuple[Segment, ...] = (Segment.SPACE, Segment.GROUND, Segment.USER, Segment.LINK)


class Level(enum.IntEnum):
    """Granularity of a unit or graph; larger is coarser."""

    MODULE = 1
    COMPONENT = 2
    SEGMENT = 3


class FlowKind(enum.Enum):
    CONTROL = "control"
    DATA = "data"


@dataclass(frozen=True, order=True)
class Unit:
    """One system unit at segment, component or module granularity.

    Identified by a path id such as ``ground/mission_control/command``; a
    module always names its component, never the other way round.
    """

    segment: Segment
    component: str | None = None
    module: str | None = None

    def __post_init__(self) -> None:
        if self.module is not None and self.component is None:
            raise SchemaError("", "a module-level unit requires a component")

    @property
    def level(self) -> Level:
        if self.module is not None:
            return Level.MODULE
        if self.component is not None:
            return Level.COMPONENT
        return Level.SEGMENT

    @property
    def id(self) -> str:
        parts = [self.segment.value]
        if self.component is not None:
            parts.append(self.component)
        if self.module is not None:
            parts.append(self.module)
        return "/".join(parts)

    def at_level(self, level: Level) -> "Unit":
        """This unit's ancestor at a coarser (or equal) granularity."""
        if level < self.level:
            raise LevelError(f"cannot refine {self.id} from {self.level.name.lower()} "
                             f"to {level.name.lower()}")
        if level is Level.SEGMENT:
            return Unit(self.segment)
        if level is Level.COMPONENT:
            return Unit(self.segment, self.component)
        return self

    @classmethod
    def parse(cls, text: str, path: str = "") -> "Unit":
        parts = text.split("/")
        if not 1 <= len(parts) <= 3 or any(not p for p in parts):
            raise SchemaError(path, f"{text!r} is not a unit id like segment/component/module")
        try:
            segment = Segment(parts[0])
        except ValueError:
            raise SchemaError(path, f"{parts[0]!r} is not one of space, ground, user, link") from None
        component = parts[1] if len(parts) > 1 else None
        module = parts[2] if len(parts) > 2 else None
        return cls(segment, component, module)

    def __str__(self) -> str:
        return self.id


Arc = tuple[Unit, Unit]


@dataclass(frozen=True)
class Flow:
    """An ordered traversal of distinct units, one granularity throughout."""

    kind: FlowKind
    units: tuple[Unit, ...]
    label: str = ""

    @property
    def arcs(self) -> tuple[Arc, ...]:
        return tuple(zip(self.units, self.units[1:]))

    @property
    def level(self) -> Level:
        return self.units[0].level


def make_flow(kind: FlowKind, units: Sequence[Unit], label: str = "") -> Flow:
    """Build a flow, rejecting repeats and mixed granularity."""
    if not units:
        raise ValueError("a flow requires at least one unit")
    seen: set[Unit] = set()
    for unit in units:
        if unit in seen:
            raise DuplicateUnit(f"unit {unit.id} appears twice in flow {label or '<unnamed>'}")
        seen.add(unit)
    levels = {unit.level for unit in units}
    if len(levels) > 1:
        raise MixedGranularity(
            f"flow {label or '<unnamed>'} mixes granularities "
            f"{', '.join(sorted(lv.name.lower() for lv in levels))}")
    return Flow(kind=kind, units=tuple(units), label=label)


def _find_cycle(nodes: Iterable[Unit], arcs: Iterable[Arc]) -> tuple[str, ...] | None:
    """One cycle as a unit-id path (first id repeated at the end), or None."""
    successors: dict[Unit, list[Unit]] = {node: [] for node in nodes}
    indegree: dict[Unit, int] = {node: 0 for node in successors}
    for src, dst in arcs:
        successors[src].append(dst)
        indegree[dst] += 1
    queue = [node for node, deg in indegree.items() if deg == 0]
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for succ in successors[node]:
            indegree[succ] -= 1
            if indegree[succ] == 0:
                queue.append(succ)
    if seen == len(successors):
        return None
    # Every leftover node keeps at least one leftover predecessor, so a
    # backward walk must revisit a node; the revisited stretch is a cycle.
    remaining = {node for node, deg in indegree.items() if deg > 0}
    predecessors: dict[Unit, list[Unit]] = {node: [] for node in successors}
    for src, dst in arcs:
        predecessors[dst].append(src)
    current = min(remaining, key=lambda u: u.id)
    path: list[Unit] = []
    index: dict[Unit, int] = {}
    while current not in index:
        index[current] = len(path)
        path.append(current)
        current = min((p for p in predecessors[current] if p in remaining), key=lambda u: u.id)
    forward = list(reversed(path[index[current]:] + [current]))
    start = min(range(len(forward) - 1), key=lambda k: forward[k].id)
    rotated = forward[start:-1] + forward[:start] + [forward[start]]
    return tuple(unit.id for unit in rotated)


def _check_levels(units: Iterable[Unit], context: str) -> None:
    levels = {unit.level for unit in units}
    if len(levels) > 1:
        raise MixedGranularity(
            f"{context} mixes granularities "
            f"{', '.join(sorted(lv.name.lower() for lv in levels))}")


@dataclass(frozen=True)
class FlowGraph:
    """Union of same-kind flows; control-kind graphs are acyclic always."""

    kind: FlowKind
    nodes: frozenset[Unit]
    arcs: frozenset[Arc]

    def __post_init__(self) -> None:
        for src, dst in self.arcs:
            if src not in self.nodes or dst not in self.nodes:
                raise IntegrityError(f"arc {src.id} -> {dst.id} leaves the node set")
            if src == dst:
                raise IntegrityError(f"self-arc on {src.id}")
        _check_levels(self.nodes, f"{self.kind.value} flow graph")
        if self.kind is FlowKind.CONTROL:
            cycle = _find_cycle(self.nodes, self.arcs)
            if cycle is not None:
                raise CycleError(cycle)

    @property
    def level(self) -> Level | None:
        for unit in self.nodes:
            return unit.level
        return None


def union_flows(kind: FlowKind, flows: Sequence[Flow]) -> FlowGraph:
    """Set-union the flows' units and arcs into one graph of that kind."""
    for flow in flows:
        if flow.kind is not kind:
            raise KindMismatch(
                f"flow {flow.label or '<unnamed>'} is {flow.kind.value}, expected {kind.value}")
    nodes = frozenset(unit for flow in flows for unit in flow.units)
    arcs = frozenset(arc for flow in flows for arc in flow.arcs)
    return FlowGraph(kind=kind, nodes=nodes, arcs=arcs)


def sources_and_sinks(graph: FlowGraph) -> tuple[frozenset[Unit], frozenset[Unit]]:
    """Units with no inbound arcs and units with no outbound arcs.

    In a control flow graph the sources are the units that may initiate
    commands.  An isolated unit is both a source and a sink.
    """
    has_in = {dst for _, dst in graph.arcs}
    has_out = {src for src, _ in graph.arcs}
    sources = frozenset(graph.nodes - has_in)
    sinks = frozenset(graph.nodes - has_out)
    return sources, sinks


TaggedArc = tuple[Unit, Unit, FlowKind]


@dataclass(frozen=True)
class MissionGraph:
    """Control and data flow graphs unioned, arcs tagged with their kind."""

    nodes: frozenset[Unit]
    arcs: frozenset[TaggedArc]

    def __post_init__(self) -> None:
        for src, dst, _ in self.arcs:
            if src not in self.nodes or dst not in self.nodes:
                raise IntegrityError(f"arc {src.id} -> {dst.id} leaves the node set")
            if src == dst:
                raise IntegrityError(f"self-arc on {src.id}")
        _check_levels(self.nodes, "mission graph")
        control = [(src, dst) for src, dst, kind in self.arcs if kind is FlowKind.CONTROL]
        cycle = _find_cycle(self.nodes, control)
        if cycle is not None:
            raise CycleError(cycle)

    def arcs_of(self, kind: FlowKind) -> frozenset[Arc]:
        return frozenset((src, dst) for src, dst, k in self.arcs if k is kind)

    @property
    def level(self) -> Level | None:
        for unit in self.nodes:
            return unit.level
        return None


def build_mission(control: FlowGraph, data: FlowGraph) -> MissionGraph:
    """Union a control flow graph and a data flow graph into one mission."""
    if control.kind is not FlowKind.CONTROL:
        raise KindMismatch("first graph must be control flows")
    if data.kind is not FlowKind.DATA:
        raise KindMismatch("second graph must be data flows")
    arcs = frozenset((src, dst, FlowKind.CONTROL) for src, dst in control.arcs) | \
        frozenset((src, dst, FlowKind.DATA) for src, dst in data.arcs)
    return MissionGraph(nodes=control.nodes | data.nodes, arcs=arcs)


def project(graph: FlowGraph | MissionGraph, level: Level) -> FlowGraph | MissionGraph:
    """Collapse a graph to a coarser granularity.

    Nodes map to their ancestors at ``level``; arcs follow, dropping the
    ones that fold onto a single unit.  Projection never invents arcs, so
    reachability survives: if v was reachable from u, the image of v stays
    reachable from the image of u.  A control graph whose collapse closes a
    loop fails with CycleError.
    """
    source_level = graph.level
    if source_level is not None and level < source_level:
        raise LevelError(f"cannot project from {source_level.name.lower()} "
                         f"to finer level {level.name.lower()}")
    nodes = frozenset(unit.at_level(level) for unit in graph.nodes)
    if isinstance(graph, MissionGraph):
        arcs = frozenset((src.at_level(level), dst.at_level(level), kind)
                         for src, dst, kind in graph.arcs
                         if src.at_level(level) != dst.at_level(level))
        return MissionGraph(nodes=nodes, arcs=arcs)
    plain = frozenset((src.at_level(level), dst.at_level(level))
                      for src, dst in graph.arcs
                      if src.at_level(level) != dst.at_level(level))
    return FlowGraph(kind=graph.kind, nodes=nodes, arcs=plain)


# --- attack overlays --------------------------------------------------------

@dataclass(frozen=True)
class ChainStep:
    """One technique applied against one unit."""

    technique: TechniqueId
    unit: Unit


@dataclass(frozen=True)
class AttackChain:
    """Ordered steps an adversary takes toward one objective."""

    objective: str
    steps: tuple[ChainStep, ...]

    @property
    def techniques(self) -> tuple[TechniqueId, ...]:
        return tuple(step.technique for step in self.steps)


@dataclass(frozen=True)
class AttackFlow:
    """Ordered units an attack traverses; may leave the modeled mission."""

    label: str
    units: tuple[Unit, ...]

    @property
    def arcs(self) -> tuple[Arc, ...]:
        return tuple(zip(self.units, self.units[1:]))


@dataclass(frozen=True)
class OverlayReport:
    """Chain steps split by whether their unit is part of the mission."""

    on_mission: tuple[ChainStep, ...]
    off_mission: tuple[ChainStep, ...]


def overlay_chain(mission: MissionGraph, chain: AttackChain) -> OverlayReport:
    """Split a chain's steps by membership of their units in the mission.

    A step against a unit outside the graph is data, not an error: attacks
    routinely stage through infrastructure the mission model leaves out.
    """
    on = tuple(step for step in chain.steps if step.unit in mission.nodes)
    off = tuple(step for step in chain.steps if step.unit not in mission.nodes)
    return OverlayReport(on_mission=on, off_mission=off)


# --- document loading -------------------------------------------------------

_TOP_KEYS = {"schema", "name", "notes", "units", "control_flows", "data_flows",
             "attack_chains", "attack_flows"}


@dataclass
class MissionSpec:
    """A loaded mission document: inventory, flows and attack overlays."""

    name: str
    units: dict[str, Unit]
    control_flows: tuple[Flow, ...]
    data_flows: tuple[Flow, ...]
    attack_chains: tuple[AttackChain, ...]
    attack_flows: tuple[AttackFlow, ...]
    notes: str | None = None

    def resolve_unit(self, unit_id: str, path: str = "") -> Unit:
        try:
            return self.units[unit_id]
        except KeyError:
            where = f" at {path}" if path else ""
            raise UnknownUnit(f"unknown unit {unit_id!r}{where}") from None

    def control_graph(self) -> FlowGraph:
        return union_flows(FlowKind.CONTROL, self.control_flows)

    def data_graph(self) -> FlowGraph:
        return union_flows(FlowKind.DATA, self.data_flows)

    def mission_graph(self) -> MissionGraph:
        return build_mission(self.control_graph(), self.data_graph())

    @property
    def chain_techniques(self) -> tuple[TechniqueId, ...]:
        seen: list[TechniqueId] = []
        for chain in self.attack_chains:
            for step in chain.steps:
                if step.technique not in seen:
                    seen.append(step.technique)
        return tuple(seen)


def load_mission(source: str | Path | bytes | BinaryIO) -> MissionSpec:
    """Load and fully validate a mission document."""
    return parse_mission(doc.read_json(source))


def parse_mission(document: Any) -> MissionSpec:
    """Build a MissionSpec from already-parsed JSON data."""
    root = doc.as_object(document, "$")
    doc.check_schema_version(root)
    doc.reject_unknown(root, _TOP_KEYS, "$")

    name = doc.as_string(doc.require(root, "name", "$"), "name")
    notes = None
    if "notes" in root:
        notes = doc.as_string(root["notes"], "notes")

    units: dict[str, Unit] = {}
    for index, entry in enumerate(doc.as_array(doc.require(root, "units", "$"), "units")):
        path = f"units[{index}]"
        obj = doc.as_object(entry, path)
        doc.reject_unknown(obj, {"segment", "component", "module"}, path)
        segment_name = doc.as_string(doc.require(obj, "segment", path), f"{path}.segment")
        try:
            segment = Segment(segment_name)
        except ValueError:
            raise SchemaError(f"{path}.segment",
                              f"{segment_name!r} is not one of space, ground, user, link") from None
        component = doc.as_string(obj["component"], f"{path}.component") if "component" in obj else None
        module = doc.as_string(obj["module"], f"{path}.module") if "module" in obj else None
        for value, key in ((component, "component"), (module, "module")):
            if value is not None and "/" in value:
                raise SchemaError(f"{path}.{key}", "names must not contain '/'")
        if module is not None and component is None:
            raise SchemaError(path, "a module requires a component")
        unit = Unit(segment, component, module)
        if unit.id in units:
            raise IntegrityError(f"duplicate unit {unit.id}")
        units[unit.id] = unit

    spec = MissionSpec(name=name, units=units, control_flows=(), data_flows=(),
                       attack_chains=(), attack_flows=(), notes=notes)

    spec.control_flows = _parse_flows(root, spec, "control_flows", FlowKind.CONTROL)
    spec.data_flows = _parse_flows(root, spec, "data_flows", FlowKind.DATA)
    spec.attack_chains = _parse_chains(root, spec)
    spec.attack_flows = _parse_attack_flows(root, spec)

    # surface graph-level problems (cycles, mixed levels) at load time
    spec.mission_graph()
    return spec


def _parse_flows(root: dict[str, Any], spec: MissionSpec, key: str,
                 kind: FlowKind) -> tuple[Flow, ...]:
    flows = []
    labels: set[str] = set()
    for index, entry in enumerate(doc.as_array(doc.require(root, key, "$"), key)):
        path = f"{key}[{index}]"
        obj = doc.as_object(entry, path)
        doc.reject_unknown(obj, {"label", "units"}, path)
        label = doc.as_string(doc.require(obj, "label", path), f"{path}.label")
        if label in labels:
            raise IntegrityError(f"duplicate {kind.value} flow label {label!r}")
        labels.add(label)
        raw_units = doc.as_array(doc.require(obj, "units", path), f"{path}.units")
        if not raw_units:
            raise SchemaError(f"{path}.units", "a flow requires at least one unit")
        resolved = [spec.resolve_unit(doc.as_string(u, f"{path}.units[{i}]"), f"{path}.units[{i}]")
                    for i, u in enumerate(raw_units)]
        flows.append(make_flow(kind, resolved, label))
    return tuple(flows)


def _parse_chains(root: dict[str, Any], spec: MissionSpec) -> tuple[AttackChain, ...]:
    chains = []
    for index, entry in enumerate(doc.as_array(doc.require(root, "attack_chains", "$"),
                                               "attack_chains")):
        path = f"attack_chains[{index}]"
        obj = doc.as_object(entry, path)
        doc.reject_unknown(obj, {"objective", "steps"}, path)
        objective = doc.as_string(doc.require(obj, "objective", path), f"{path}.objective")
        steps = []
        raw_steps = doc.as_array(doc.require(obj, "steps", path), f"{path}.steps")
        if not raw_steps:
            raise SchemaError(f"{path}.steps", "a chain requires at least one step")
        for step_index, raw_step in enumerate(raw_steps):
            step_path = f"{path}.steps[{step_index}]"
            step_obj = doc.as_object(raw_step, step_path)
            doc.reject_unknown(step_obj, {"technique", "unit"}, step_path)
            technique = TechniqueId.parse(
                doc.as_string(doc.require(step_obj, "technique", step_path),
                              f"{step_path}.technique"),
                f"{step_path}.technique")
            unit = spec.resolve_unit(
                doc.as_string(doc.require(step_obj, "unit", step_path), f"{step_path}.unit"),
                f"{step_path}.unit")
            steps.append(ChainStep(technique=technique, unit=unit))
        chains.append(AttackChain(objective=objective, steps=tuple(steps)))
    return tuple(chains)


def _parse_attack_flows(root: dict[str, Any], spec: MissionSpec) -> tuple[AttackFlow, ...]:
    flows = []
    labels: set[str] = set()
    for index, entry in enumerate(doc.as_array(doc.require(root, "attack_flows", "$"),
                                               "attack_flows")):
        path = f"attack_flows[{index}]"
        obj = doc.as_object(entry, path)
        doc.reject_unknown(obj, {"label", "units"}, path)
        label = doc.as_string(doc.require(obj, "label", path), f"{path}.label")
        if label in labels:
            raise IntegrityError(f"duplicate attack flow label {label!r}")
        labels.add(label)
        raw_units = doc.as_array(doc.require(obj, "units", path), f"{path}.units")
        if not raw_units:
            raise SchemaError(f"{path}.units", "an attack flow requires at least one unit")
        units = []
        for i, raw in enumerate(raw_units):
            unit = spec.resolve_unit(doc.as_string(raw, f"{path}.units[{i}]"), f"{path}.units[{i}]")
            if unit in units:
                raise DuplicateUnit(f"unit {unit.id} appears twice in attack flow {label!r}")
            units.append(unit)
        flows.append(AttackFlow(label=label, units=tuple(units)))
    return tuple(flows)
