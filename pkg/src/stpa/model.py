"""Domain types of the STAMP model, identifier resolution and control loops.

Every type is a frozen dataclass holding tuples, so a :class:`SafetyModel`
can be shared freely once built. Source spans are carried for diagnostics
but excluded from equality, which keeps ``parse(print(m)) == m`` meaningful.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Union


@dataclass(frozen=True, slots=True)
class SourceSpan:
    """Location of a token or declaration in a ``.stpa`` file."""

    file: str
    line: int  # 1-based
    column: int  # 1-based
    length: int = 0

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1 or self.length < 0:
            raise ValueError(f"invalid span {self.line}:{self.column}+{self.length}")

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


def _span() -> Optional[SourceSpan]:
    return field(default=None, compare=False, repr=False)


class ComponentKind(str, Enum):
    CONTROLLER = "controller"
    ACTUATOR = "actuator"
    SENSOR = "sensor"
    CONTROLLED_PROCESS = "controlled_process"


class UcaClass(str, Enum):
    """The four ways a control action can be unsafe, in canonical order."""

    PROVIDED = "provided"
    NOT_PROVIDED = "not_provided"
    WRONG_TIMING = "wrong_timing"
    WRONG_DURATION = "wrong_duration"


class Qualifier(str, Enum):
    TOO_EARLY = "too_early"
    TOO_LATE = "too_late"
    OUT_OF_SEQUENCE = "out_of_sequence"
    TOO_LONG = "too_long"
    STOPPED_TOO_SOON = "stopped_too_soon"


QUALIFIERS_BY_CLASS: dict[UcaClass, frozenset[Qualifier]] = {
    UcaClass.PROVIDED: frozenset(),
    UcaClass.NOT_PROVIDED: frozenset(),
    UcaClass.WRONG_TIMING: frozenset(
        {Qualifier.TOO_EARLY, Qualifier.TOO_LATE, Qualifier.OUT_OF_SEQUENCE}
    ),
    UcaClass.WRONG_DURATION: frozenset({Qualifier.TOO_LONG, Qualifier.STOPPED_TOO_SOON}),
}


class Element(str, Enum):
    """Control-loop element classes used to organise causal factors."""

    CONTROLLER_PROCESS_MODEL = "controller_process_model"
    CONTROL_ALGORITHM = "control_algorithm"
    ACTUATOR_OR_CONTROL_PATH = "actuator_or_control_path"
    CONTROLLED_PROCESS = "controlled_process"
    SENSOR_OR_MEASUREMENT = "sensor_or_measurement"
    FEEDBACK_PATH = "feedback_path"
    COMMUNICATION_CHANNEL = "communication_channel"
    EXTERNAL_DISTURBANCE = "external_disturbance"


class Asil(str, Enum):
    """Integrity level, totally ordered QM < A < B < C < D."""

    QM = "QM"
    A = "A"
    B = "B"
    C = "C"
    D = "D"

    @property
    def rank(self) -> int:
        return _ASIL_ORDER.index(self)

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, Asil):
            return NotImplemented
        return self.rank < other.rank

    def __le__(self, other: object) -> bool:
        if not isinstance(other, Asil):
            return NotImplemented
        return self.rank <= other.rank

    def __gt__(self, other: object) -> bool:
        if not isinstance(other, Asil):
            return NotImplemented
        return self.rank > other.rank

    def __ge__(self, other: object) -> bool:
        if not isinstance(other, Asil):
            return NotImplemented
        return self.rank >= other.rank


_ASIL_ORDER = (Asil.QM, Asil.A, Asil.B, Asil.C, Asil.D)

# Identifier shapes per entity kind; components are free-form identifiers.
ID_PATTERNS: dict[str, re.Pattern[str]] = {
    "accident": re.compile(r"A\d+"),
    "hazard": re.compile(r"H\d+"),
    "constraint": re.compile(r"SC\d+"),
    "action": re.compile(r"CA\d+"),
    "feedback": re.compile(r"FB\d+"),
    "uca": re.compile(r"UCA\d+"),
    "cause": re.compile(r"CF\d+"),
    "scenario": re.compile(r"SCN\d+"),
}


@dataclass(frozen=True, slots=True)
class UcaCategory:
    cls: UcaClass
    qualifier: Optional[Qualifier] = None

    def __post_init__(self) -> None:
        if self.qualifier is not None and self.qualifier not in QUALIFIERS_BY_CLASS[self.cls]:
            raise ValueError(
                f"qualifier {self.qualifier.value!r} is not allowed for category {self.cls.value!r}"
            )

    def __str__(self) -> str:
        if self.qualifier is None:
            return self.cls.value
        return f"{self.cls.value}/{self.qualifier.value}"


@dataclass(frozen=True, slots=True)
class Rating:
    """Severity / exposure / controllability classes.

    Values are stored as given so that out-of-range ratings survive parsing
    and can be reported by the validator; :func:`stpa.engine.compute_asil`
    rejects them.
    """

    severity: int
    exposure: int
    controllability: int

    def in_range(self) -> bool:
        return (
            0 <= self.severity <= 3
            and 0 <= self.exposure <= 4
            and 0 <= self.controllability <= 3
        )

    def __str__(self) -> str:
        return f"S{self.severity} E{self.exposure} C{self.controllability}"


@dataclass(frozen=True, slots=True)
class Accident:
    id: str
    description: str
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class Hazard:
    id: str
    description: str
    accident_refs: tuple[str, ...] = ()
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class SafetyConstraint:
    id: str
    source: str
    text: str
    asil: Optional[Asil] = None
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class Component:
    id: str
    kind: ComponentKind
    label: str
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class ControlAction:
    id: str
    source: str
    target: str
    label: str
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class FeedbackSignal:
    id: str
    source: str
    target: str
    label: str
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class UnsafeControlAction:
    id: str
    action: str
    category: UcaCategory
    context: str
    hazard_refs: tuple[str, ...] = ()
    rating: Optional[Rating] = None
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class SafeAssessment:
    action: str
    category: UcaCategory
    justification: str
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class CausalFactor:
    id: str
    uca: str
    element: Element
    description: str
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True, slots=True)
class CausalScenario:
    id: str
    uca: str
    factors: tuple[str, ...]
    description: str
    span: Optional[SourceSpan] = _span()


Entity = Union[
    Accident,
    Hazard,
    SafetyConstraint,
    Component,
    ControlAction,
    FeedbackSignal,
    UnsafeControlAction,
    CausalFactor,
    CausalScenario,
]

# Canonical collection order; also the printer's group order.
COLLECTIONS = (
    "accidents",
    "hazards",
    "constraints",
    "components",
    "actions",
    "feedbacks",
    "ucas",
    "safe_assessments",
    "causal_factors",
    "scenarios",
)

KIND_NAMES: dict[type, str] = {
    Accident: "accident",
    Hazard: "hazard",
    SafetyConstraint: "constraint",
    Component: "component",
    ControlAction: "action",
    FeedbackSignal: "feedback",
    UnsafeControlAction: "uca",
    CausalFactor: "cause",
    CausalScenario: "scenario",
}


def kind_of(entity: Entity) -> str:
    return KIND_NAMES[type(entity)]


@dataclass(frozen=True, slots=True)
class SafetyModel:
    name: str
    accidents: tuple[Accident, ...] = ()
    hazards: tuple[Hazard, ...] = ()
    constraints: tuple[SafetyConstraint, ...] = ()
    components: tuple[Component, ...] = ()
    actions: tuple[ControlAction, ...] = ()
    feedbacks: tuple[FeedbackSignal, ...] = ()
    ucas: tuple[UnsafeControlAction, ...] = ()
    safe_assessments: tuple[SafeAssessment, ...] = ()
    causal_factors: tuple[CausalFactor, ...] = ()
    scenarios: tuple[CausalScenario, ...] = ()

    def entities(self) -> Iterator[Entity]:
        """All identified entities in canonical declaration order."""
        for name in COLLECTIONS:
            if name == "safe_assessments":
                continue
            yield from getattr(self, name)

    def component(self, component_id: str) -> Optional[Component]:
        found = resolve(self, component_id)
        return found if isinstance(found, Component) else None


class NotFoundError(LookupError):
    """An identifier that does not name any entity in the model."""

    def __init__(self, ident: str, expected: str = "entity") -> None:
        self.ident = ident
        super().__init__(f"no {expected} with id {ident!r}")


def resolve(model: SafetyModel, ident: str) -> Optional[Entity]:
    """Return the entity declared with ``ident``, or ``None``.

    With duplicate declarations (a validation error) the first one wins.
    """
    for entity in model.entities():
        if entity.id == ident:
            return entity
    return None


@dataclass(frozen=True, slots=True)
class ControlLoop:
    controller: str
    controlled: str
    actions: tuple[str, ...]
    feedbacks: tuple[str, ...] = ()

    @property
    def name(self) -> str:
        return f"{self.controller}->{self.controlled}"


def downstream(model: SafetyModel, component_id: str) -> set[str]:
    """Components reachable from ``component_id`` along control-action edges."""
    edges: dict[str, list[str]] = defaultdict(list)
    for action in model.actions:
        edges[action.source].append(action.target)
    seen = {component_id}
    stack = [component_id]
    while stack:
        for nxt in edges[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def derive_control_loops(model: SafetyModel) -> list[ControlLoop]:
    """Group control actions into loops keyed by (controller, action target).

    Loops come out in the order their first action was declared. A feedback
    signal belongs to a loop when it targets the loop's controller and
    originates at the controlled component or anywhere downstream of it.
    """
    grouped: dict[tuple[str, str], list[str]] = {}
    for action in model.actions:
        grouped.setdefault((action.source, action.target), []).append(action.id)

    loops = []
    for (controller, controlled), action_ids in grouped.items():
        reach = downstream(model, controlled)
        feedbacks = tuple(
            fb.id for fb in model.feedbacks if fb.target == controller and fb.source in reach
        )
        loops.append(ControlLoop(controller, controlled, tuple(action_ids), feedbacks))
    return loops


def loop_for_action(model: SafetyModel, action_id: str) -> Optional[ControlLoop]:
    for loop in derive_control_loops(model):
        if action_id in loop.actions:
            return loop
    return None
