"""STPA analysis operations over a :class:`~stpa.model.SafetyModel`.

Step 1 support (candidate enumeration, constraint derivation), ASIL
determination, Step 2 causal prompts, whole-model validation and
traceability queries. All functions are pure.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from stpa.model import (
    Accident,
    Asil,
    CausalFactor,
    CausalScenario,
    Component,
    ComponentKind,
    ControlAction,
    ControlLoop,
    Element,
    Entity,
    Hazard,
    KIND_NAMES,
    NotFoundError,
    Rating,
    SafetyConstraint,
    SafetyModel,
    SourceSpan,
    UcaClass,
    UnsafeControlAction,
    derive_control_loops,
    kind_of,
    resolve,
)


class Status(str, Enum):
    UNASSESSED = "unassessed"
    ASSESSED_SAFE = "assessed_safe"
    ASSESSED_UNSAFE = "assessed_unsafe"


@dataclass(frozen=True, slots=True)
class UcaCandidate:
    action: str
    category: UcaClass
    status: Status
    uca_ids: tuple[str, ...] = ()


def enumerate_candidates(model: SafetyModel) -> list[UcaCandidate]:
    """One candidate per (control action, category class), 4 per action.

    A pair that is both safe-assessed and has UCAs is reported as unsafe
    here; the validator flags the conflict as E006.
    """
    unsafe: dict[tuple[str, UcaClass], list[str]] = defaultdict(list)
    for uca in model.ucas:
        unsafe[uca.action, uca.category.cls].append(uca.id)
    safe = {(s.action, s.category.cls) for s in model.safe_assessments}

    out = []
    for action in model.actions:
        for cls in UcaClass:
            ucas = tuple(unsafe.get((action.id, cls), ()))
            if ucas:
                status = Status.ASSESSED_UNSAFE
            elif (action.id, cls) in safe:
                status = Status.ASSESSED_SAFE
            else:
                status = Status.UNASSESSED
            out.append(UcaCandidate(action.id, cls, status, ucas))
    return out


class AsilDomainError(ValueError):
    """A rating class outside S0-S3, E0-E4 or C0-C3."""


_BY_SUM = {7: Asil.A, 8: Asil.B, 9: Asil.C, 10: Asil.D}


def compute_asil(rating: Rating) -> Asil:
    """ASIL for a severity/exposure/controllability triple.

    Any class 0 yields QM. Otherwise the level follows from S+E+C
    (7 -> A ... 10 -> D, below 7 -> QM), which reproduces the ISO 26262-3
    determination table cell for cell.
    """
    if not rating.in_range():
        raise AsilDomainError(f"rating {rating} out of range (S0-S3, E0-E4, C0-C3)")
    s, e, c = rating.severity, rating.exposure, rating.controllability
    if 0 in (s, e, c):
        return Asil.QM
    return _BY_SUM.get(s + e + c, Asil.QM)


def _get(model: SafetyModel, ident: str, cls: type, what: str):
    entity = resolve(model, ident)
    if not isinstance(entity, cls):
        raise NotFoundError(ident, what)
    return entity


_TEMPLATES = {
    UcaClass.PROVIDED: "{controller} must not provide {action} {context}",
    UcaClass.NOT_PROVIDED: "{controller} must provide {action} {context}",
    UcaClass.WRONG_TIMING: "{controller} must provide {action} within required timing and ordering {context}",
    UcaClass.WRONG_DURATION: "{controller} must apply {action} for the required duration {context}",
}
_SC_NUMBER = re.compile(r"SC(\d+)")


def derive_constraint(model: SafetyModel, uca_id: str) -> SafetyConstraint:
    """Safety constraint derived from a UCA by category template.

    The derived id continues the model's SC numbering, offset by the UCA's
    position, so it is stable for a given model. The ASIL is copied from
    the UCA's rating when one is present and in range.
    """
    uca = _get(model, uca_id, UnsafeControlAction, "UCA")
    action = resolve(model, uca.action)
    if isinstance(action, ControlAction):
        controller = resolve(model, action.source)
        controller_label = controller.label if isinstance(controller, Component) else action.source
        action_label = action.label
    else:
        controller_label, action_label = "The controller", uca.action
    text = _TEMPLATES[uca.category.cls].format(
        controller=controller_label, action=action_label, context=uca.context
    ).strip()

    asil = None
    if uca.rating is not None and uca.rating.in_range():
        asil = compute_asil(uca.rating)

    base = max(
        (int(m.group(1)) for c in model.constraints if (m := _SC_NUMBER.fullmatch(c.id))),
        default=0,
    )
    position = next(i for i, u in enumerate(model.ucas, 1) if u.id == uca.id)
    return SafetyConstraint(f"SC{base + position}", uca.id, text, asil)


# --- Step 2 -----------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class CausalPrompt:
    element: Element
    question: str
    answered_by: tuple[str, ...] = ()


_PHRASES = {
    UcaClass.PROVIDED: "provide",
    UcaClass.NOT_PROVIDED: "not provide",
    UcaClass.WRONG_TIMING: "mistime",
    UcaClass.WRONG_DURATION: "misapply the duration of",
}


def _label(model: SafetyModel, ident: str) -> str:
    entity = resolve(model, ident)
    return getattr(entity, "label", ident) if entity is not None else ident


def step2_prompts(model: SafetyModel, uca_id: str) -> list[CausalPrompt]:
    """Eight causal-analysis questions for a UCA, one per loop element."""
    uca = _get(model, uca_id, UnsafeControlAction, "UCA")
    action = resolve(model, uca.action)
    loop: Optional[ControlLoop] = None
    for candidate in derive_control_loops(model):
        if uca.action in candidate.actions:
            loop = candidate
            break

    if isinstance(action, ControlAction):
        controller, controlled, act = (
            _label(model, action.source), _label(model, action.target), action.label
        )
    else:
        controller, controlled, act = "the controller", "the controlled process", uca.action
    doing = f"{_PHRASES[uca.category.cls]} {act} {uca.context}".strip()

    feedback_ids = loop.feedbacks if loop else ()
    if feedback_ids:
        signals = ", ".join(f"{fid} ({_label(model, fid)})" for fid in feedback_ids)
        sensor_q = (
            f"How could the measurements behind {signals} be missing, inaccurate or "
            f"stale so that {controller} would {doing}?"
        )
        feedback_q = (
            f"How could feedback {signals} be delayed, lost or corrupted before it "
            f"reaches {controller}?"
        )
    else:
        sensor_q = (
            f"The loop has no feedback signal: what measurement of {controlled} "
            f"would {controller} need to avoid this, and how could it be wrong?"
        )
        feedback_q = (
            f"The loop has no feedback signal: how does {controller} learn the state "
            f"of {controlled} at all?"
        )

    questions = {
        Element.CONTROLLER_PROCESS_MODEL: (
            f"How could the process model of {controller} diverge from the actual state "
            f"of {controlled} so that it would {doing}?"
        ),
        Element.CONTROL_ALGORITHM: (
            f"What flaw in the control algorithm of {controller} could make it {doing}?"
        ),
        Element.ACTUATOR_OR_CONTROL_PATH: (
            f"How could {act} be lost, delayed or altered on its way from {controller} "
            f"to {controlled}?"
        ),
        Element.CONTROLLED_PROCESS: (
            f"How could {controlled} fail to respond as expected to {act}?"
        ),
        Element.SENSOR_OR_MEASUREMENT: sensor_q,
        Element.FEEDBACK_PATH: feedback_q,
        Element.COMMUNICATION_CHANNEL: (
            f"How could a communication channel used by {controller} or {controlled} "
            f"drop, delay or corrupt messages relevant to {act}?"
        ),
        Element.EXTERNAL_DISTURBANCE: (
            f"What disturbance from outside the loop could act on {controlled} "
            f"or {controller} and lead it to {doing}?"
        ),
    }
    answered: dict[Element, list[str]] = defaultdict(list)
    for factor in model.causal_factors:
        if factor.uca == uca.id:
            answered[factor.element].append(factor.id)
    return [CausalPrompt(e, questions[e], tuple(answered[e])) for e in Element]


# --- validation -------------------------------------------------------------


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True, slots=True)
class Finding:
    code: str
    severity: Severity
    subject: str
    message: str
    span: Optional[SourceSpan] = None

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.severity.value} {self.code} [{self.subject}]: {self.message}"


CATALOG: dict[str, tuple[Severity, str]] = {
    "E001": (Severity.ERROR, "dangling reference"),
    "E002": (Severity.ERROR, "hazard with no accident link"),
    "E003": (Severity.ERROR, "UCA with no hazard link"),
    "E004": (Severity.ERROR, "control action sourced from non-controller"),
    "E005": (Severity.ERROR, "rating field out of range"),
    "E006": (Severity.ERROR, "pair both safe-assessed and unsafe"),
    "E007": (Severity.ERROR, "duplicate id"),
    "W001": (Severity.WARNING, "control loop with no feedback"),
    "W002": (Severity.WARNING, "candidate unassessed"),
    "W003": (Severity.WARNING, "UCA with no safety constraint"),
    "W004": (Severity.WARNING, "UCA with no causal factor"),
    "W005": (Severity.WARNING, "hazard with no high-level safety constraint"),
    "W006": (Severity.WARNING, "UCA without a rating"),
}


class _Checker:
    def __init__(self, model: SafetyModel) -> None:
        self.model = model
        self.findings: list[Finding] = []
        self.index: dict[str, Entity] = {}
        for entity in model.entities():
            self.index.setdefault(entity.id, entity)

    def add(self, code: str, subject: str, message: str, span: Optional[SourceSpan]) -> None:
        self.findings.append(Finding(code, CATALOG[code][0], subject, message, span))

    def ref(self, owner, ident: str, expected: tuple[type, ...], what: str) -> Optional[Entity]:
        target = self.index.get(ident)
        if target is None:
            self.add("E001", owner.id, f"{what} {ident!r} is not declared", owner.span)
            return None
        if not isinstance(target, expected):
            self.add(
                "E001", owner.id,
                f"{what} {ident!r} has kind {kind_of(target)}, expected "
                f"{' or '.join(KIND_NAMES[t] for t in expected)}",
                owner.span,
            )
            return None
        return target

    def run(self) -> list[Finding]:
        m = self.model
        seen: set[str] = set()
        for entity in m.entities():
            if entity.id in seen:
                self.add("E007", entity.id, f"{kind_of(entity)} id {entity.id!r} declared more than once",
                         entity.span)
            seen.add(entity.id)

        constrained = {c.source for c in m.constraints}
        for hazard in m.hazards:
            if not hazard.accident_refs:
                self.add("E002", hazard.id, "hazard is not linked to any accident", hazard.span)
            for ref in hazard.accident_refs:
                self.ref(hazard, ref, (Accident,), "accident")
            if hazard.id not in constrained:
                self.add("W005", hazard.id, "no high-level safety constraint derived from this hazard",
                         hazard.span)

        for sc in m.constraints:
            self.ref(sc, sc.source, (Hazard, UnsafeControlAction), "constraint source")

        for action in m.actions:
            source = self.ref(action, action.source, (Component,), "action source")
            self.ref(action, action.target, (Component,), "action target")
            if source is not None and source.kind is not ComponentKind.CONTROLLER:
                self.add("E004", action.id,
                         f"control action issued by {source.id!r}, which is a {source.kind.value}",
                         action.span)

        for fb in m.feedbacks:
            self.ref(fb, fb.source, (Component,), "feedback source")
            target = self.ref(fb, fb.target, (Component,), "feedback target")
            if target is not None and target.kind is not ComponentKind.CONTROLLER:
                self.add("E004", fb.id,
                         f"feedback delivered to {target.id!r}, which is a {target.kind.value}",
                         fb.span)

        for loop in derive_control_loops(m):
            if not loop.feedbacks:
                first = self.index.get(loop.actions[0])
                self.add("W001", loop.name,
                         f"loop {loop.controller} -> {loop.controlled} has no feedback signal",
                         getattr(first, "span", None))

        for candidate in enumerate_candidates(m):
            if candidate.status is Status.UNASSESSED:
                action = self.index.get(candidate.action)
                self.add("W002", candidate.action,
                         f"{candidate.category.value} not yet assessed",
                         getattr(action, "span", None))

        factored = {cf.uca for cf in m.causal_factors}
        for uca in m.ucas:
            self.ref(uca, uca.action, (ControlAction,), "UCA action")
            if not uca.hazard_refs:
                self.add("E003", uca.id, "UCA is not linked to any hazard", uca.span)
            for ref in uca.hazard_refs:
                self.ref(uca, ref, (Hazard,), "hazard")
            if uca.rating is None:
                self.add("W006", uca.id, "UCA has no S/E/C rating", uca.span)
            elif not uca.rating.in_range():
                self.add("E005", uca.id,
                         f"rating {uca.rating} outside S0-S3, E0-E4, C0-C3", uca.span)
            if uca.id not in constrained:
                self.add("W003", uca.id, "no safety constraint recorded for this UCA", uca.span)
            if uca.id not in factored:
                self.add("W004", uca.id, "no causal factor recorded (Step 2 not performed)", uca.span)

        unsafe = {(u.action, u.category.cls) for u in m.ucas}
        for safe in m.safe_assessments:
            if (safe.action, safe.category.cls) in unsafe:
                self.add("E006", safe.action,
                         f"{safe.category.cls.value} is both assessed safe and recorded as a UCA",
                         safe.span)
            elif not isinstance(self.index.get(safe.action), ControlAction):
                self.add("E001", safe.action,
                         f"safe assessment refers to unknown control action {safe.action!r}",
                         safe.span)

        for cf in m.causal_factors:
            self.ref(cf, cf.uca, (UnsafeControlAction,), "causal factor UCA")

        for scn in m.scenarios:
            self.ref(scn, scn.uca, (UnsafeControlAction,), "scenario UCA")
            for fid in scn.factors:
                factor = self.ref(scn, fid, (CausalFactor,), "causal factor")
                if factor is not None and factor.uca != scn.uca:
                    self.add("E001", scn.id,
                             f"causal factor {fid!r} belongs to {factor.uca}, not {scn.uca}",
                             scn.span)

        return sorted(self.findings, key=lambda f: f.severity is Severity.WARNING)


def validate(model: SafetyModel) -> list[Finding]:
    """All findings for ``model``: errors first, then warnings.

    Within a severity, findings follow canonical declaration order.
    """
    return _Checker(model).run()


def error_count(findings: list[Finding]) -> int:
    return sum(f.severity is Severity.ERROR for f in findings)


# --- traceability -----------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TraceNode:
    id: str
    kind: str
    children: tuple["TraceNode", ...] = ()

    def ids(self) -> list[str]:
        out = [self.id]
        for child in self.children:
            out.extend(child.ids())
        return out


@dataclass(frozen=True, slots=True)
class Trace:
    """Traceability around one entity: ``down`` toward accidents, ``up`` toward
    the work products that cite it."""

    root: TraceNode
    down: tuple[TraceNode, ...]
    up: tuple[TraceNode, ...]

    def reached(self) -> set[str]:
        out: set[str] = set()
        for node in self.down + self.up:
            out.update(node.ids())
        return out

    def render(self) -> str:
        lines = [f"{self.root.id} ({self.root.kind})"]

        def walk(node: TraceNode, depth: int, arrow: str) -> None:
            lines.append(f"{'  ' * depth}{arrow} {node.id} ({node.kind})")
            for child in node.children:
                walk(child, depth + 1, arrow)

        for node in self.down:
            walk(node, 1, "->")
        for node in self.up:
            walk(node, 1, "<-")
        return "\n".join(lines) + "\n"


def _downward_links(entity: Entity) -> tuple[str, ...]:
    if isinstance(entity, Hazard):
        return entity.accident_refs
    if isinstance(entity, UnsafeControlAction):
        return entity.hazard_refs
    if isinstance(entity, SafetyConstraint):
        return (entity.source,)
    if isinstance(entity, CausalFactor):
        return (entity.uca,)
    if isinstance(entity, CausalScenario):
        return entity.factors
    return ()


def trace(model: SafetyModel, ident: str) -> Trace:
    """Downward and upward traceability closure of ``ident``.

    Downward follows SCN->CF->UCA->hazard->accident and SC->source links;
    upward follows the same links reversed, plus UCAs issued on a control
    action. Each entity is visited at most once.
    """
    index: dict[str, Entity] = {}
    for entity in model.entities():
        index.setdefault(entity.id, entity)
    if ident not in index:
        raise NotFoundError(ident)

    down_edges: dict[str, list[str]] = {}
    up_edges: dict[str, list[str]] = defaultdict(list)
    for entity in index.values():
        links = [link for link in _downward_links(entity) if link in index]
        down_edges[entity.id] = links
        for link in links:
            up_edges[link].append(entity.id)
    for uca in model.ucas:
        if uca.action in index and uca.id not in up_edges[uca.action]:
            up_edges[uca.action].append(uca.id)

    visited = {ident}

    def expand(node_id: str, edges) -> tuple[TraceNode, ...]:
        children = []
        for nxt in edges.get(node_id, ()):
            if nxt in visited:
                continue
            visited.add(nxt)
            children.append(nxt)
        return tuple(
            TraceNode(nxt, kind_of(index[nxt]), expand(nxt, edges)) for nxt in children
        )

    down = expand(ident, down_edges)
    up = expand(ident, up_edges)
    return Trace(TraceNode(ident, kind_of(index[ident])), down, up)
