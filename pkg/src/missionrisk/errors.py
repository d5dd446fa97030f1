"""Exception types raised across the package.

Loaders raise SchemaError for malformed documents and IntegrityError for
documents that parse but break a cross-reference or value invariant.  The
remaining types mark precondition failures of individual operations.
"""

from __future__ import annotations


class MissionRiskError(Exception):
    """Base class for every error this package raises on purpose."""


class SchemaError(MissionRiskError):
    """A document is structurally malformed.

    ``path`` is a dotted/indexed path to the offending key, for example
    ``"techniques[2].countermeasures"``.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


class IntegrityError(MissionRiskError):
    """A document parsed but violates an integrity rule.

    Covers dangling references, duplicate identifiers, out-of-range scores
    and non-monotone risk matrices.
    """


class UnknownTechnique(MissionRiskError):
    """A technique id is not present in the catalog."""


class UnknownCountermeasure(MissionRiskError):
    """A countermeasure id is not present in the catalog."""


class DuplicateUnit(MissionRiskError):
    """The same unit appears twice in one flow."""


class MixedGranularity(MissionRiskError):
    """Units at different granularity levels were combined in one graph."""


class KindMismatch(MissionRiskError):
    """A control-flow operation received data flows, or the other way round."""


class CycleError(MissionRiskError):
    """A control-flow graph contains a cycle.

    ``cycle`` is one offending cycle as a unit-id path whose first and last
    entries coincide, for example ``("a", "b", "a")``.
    """

    def __init__(self, cycle: tuple[str, ...]):
        super().__init__("cycle: " + " -> ".join(cycle))
        self.cycle = cycle


class LevelError(MissionRiskError):
    """A projection asked for a finer granularity than the graph has."""


class UnknownUnit(MissionRiskError):
    """A unit id does not resolve against the mission's unit inventory."""


class UnassignedCriticality(MissionRiskError):
    """No criticality is assigned to a unit or any of its ancestors."""


class MissingScore(MissionRiskError):
    """A technique has no base score and tailoring does not cover the gap."""


class RangeError(MissionRiskError):
    """A likelihood or impact value lies outside 1..5."""


class NoCountermeasures(MissionRiskError):
    """A technique that must be mitigated maps to no countermeasures."""


class InvalidChoice(MissionRiskError):
    """An explicit mitigation choice references ids outside the mapped set."""
