"""Deterministic work-product emitters: JSON export, Markdown report, CSV matrix.

JSON schema version 1. Top-level keys, in order::

    schema_version, model, loops, candidates, findings, constraints

``model`` holds ``name`` followed by one array per collection
(accidents, hazards, constraints, components, actions, feedbacks, ucas,
safe_assessments, causal_factors, scenarios). Object keys inside each
array follow the field order of the corresponding declaration. Source
spans only name the file's base name so output does not depend on where
the input was read from.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import PurePath
from typing import Any, Optional

from stpa.engine import (
    Finding,
    Severity,
    Status,
    UcaCandidate,
    compute_asil,
    derive_constraint,
    enumerate_candidates,
    validate,
)
from stpa.model import (
    ControlLoop,
    Rating,
    SafetyConstraint,
    SafetyModel,
    SourceSpan,
    UcaClass,
    derive_control_loops,
)

SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class ReportBundle:
    model: SafetyModel
    candidates: list[UcaCandidate]
    findings: list[Finding]
    derived_constraints: list[SafetyConstraint]
    loops: list[ControlLoop]


def build_bundle(model: SafetyModel) -> ReportBundle:
    return ReportBundle(
        model=model,
        candidates=enumerate_candidates(model),
        findings=validate(model),
        derived_constraints=[derive_constraint(model, u.id) for u in model.ucas],
        loops=derive_control_loops(model),
    )


def _asil_of(rating: Optional[Rating]) -> Optional[str]:
    if rating is None or not rating.in_range():
        return None
    return compute_asil(rating).value


def _span(span: Optional[SourceSpan]) -> Optional[dict[str, Any]]:
    if span is None:
        return None
    return {
        "file": PurePath(span.file).name,
        "line": span.line,
        "column": span.column,
        "length": span.length,
    }


def _constraint(sc: SafetyConstraint) -> dict[str, Any]:
    return {
        "id": sc.id,
        "source": sc.source,
        "text": sc.text,
        "asil": sc.asil.value if sc.asil is not None else None,
    }


def to_document(bundle: ReportBundle) -> dict[str, Any]:
    m = bundle.model
    model = {
        "name": m.name,
        "accidents": [{"id": a.id, "description": a.description} for a in m.accidents],
        "hazards": [
            {"id": h.id, "description": h.description, "accidents": list(h.accident_refs)}
            for h in m.hazards
        ],
        "constraints": [_constraint(c) for c in m.constraints],
        "components": [
            {"id": c.id, "kind": c.kind.value, "label": c.label} for c in m.components
        ],
        "actions": [
            {"id": a.id, "source": a.source, "target": a.target, "label": a.label}
            for a in m.actions
        ],
        "feedbacks": [
            {"id": f.id, "source": f.source, "target": f.target, "label": f.label}
            for f in m.feedbacks
        ],
        "ucas": [
            {
                "id": u.id,
                "action": u.action,
                "category": u.category.cls.value,
                "qualifier": u.category.qualifier.value if u.category.qualifier else None,
                "context": u.context,
                "hazards": list(u.hazard_refs),
                "rating": None
                if u.rating is None
                else {
                    "severity": u.rating.severity,
                    "exposure": u.rating.exposure,
                    "controllability": u.rating.controllability,
                },
                "asil": _asil_of(u.rating),
            }
            for u in m.ucas
        ],
        "safe_assessments": [
            {
                "action": s.action,
                "category": s.category.cls.value,
                "qualifier": s.category.qualifier.value if s.category.qualifier else None,
                "justification": s.justification,
            }
            for s in m.safe_assessments
        ],
        "causal_factors": [
            {"id": c.id, "uca": c.uca, "element": c.element.value, "description": c.description}
            for c in m.causal_factors
        ],
        "scenarios": [
            {"id": s.id, "uca": s.uca, "factors": list(s.factors), "description": s.description}
            for s in m.scenarios
        ],
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "model": model,
        "loops": [
            {
                "controller": lp.controller,
                "controlled": lp.controlled,
                "actions": list(lp.actions),
                "feedbacks": list(lp.feedbacks),
            }
            for lp in bundle.loops
        ],
        "candidates": [
            {"action": c.action, "category": c.category.value, "status": c.status.value}
            for c in bundle.candidates
        ],
        "findings": [
            {
                "code": f.code,
                "severity": f.severity.value,
                "subject": f.subject,
                "message": f.message,
                "span": _span(f.span),
            }
            for f in bundle.findings
        ],
        "constraints": [_constraint(c) for c in bundle.derived_constraints],
    }


def emit_json(bundle: ReportBundle) -> str:
    return json.dumps(to_document(bundle), indent=2, ensure_ascii=False) + "\n"


def matrix_cells(bundle: ReportBundle) -> dict[str, dict[UcaClass, str]]:
    """Per action, the matrix cell text for each category class."""
    rows: dict[str, dict[UcaClass, str]] = {a.id: {} for a in bundle.model.actions}
    for cand in bundle.candidates:
        if cand.status is Status.ASSESSED_UNSAFE:
            cell = f"unsafe({';'.join(cand.uca_ids)})"
        elif cand.status is Status.ASSESSED_SAFE:
            cell = "safe"
        else:
            cell = "unassessed"
        rows.setdefault(cand.action, {})[cand.category] = cell
    return rows


def emit_csv_matrix(bundle: ReportBundle) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["action_id", "action_label"] + [c.value for c in UcaClass])
    cells = matrix_cells(bundle)
    for action in bundle.model.actions:
        row = cells[action.id]
        writer.writerow([action.id, action.label] + [row.get(c, "unassessed") for c in UcaClass])
    return buf.getvalue()


# --- Markdown ---------------------------------------------------------------

NONE = "none recorded"


def _cell(text: str) -> str:
    return text.replace("\\", "\\\\").replace("|", "\\|").replace("\n", " ")


def _table(header: list[str], rows: list[list[str]]) -> list[str]:
    out = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    out.extend("| " + " | ".join(_cell(c) for c in row) + " |" for row in rows)
    return out


def emit_markdown(bundle: ReportBundle) -> str:
    m = bundle.model
    lines: list[str] = [f"# STPA report: {m.name}", ""]

    lines += ["## 1. Accidents & Hazards", ""]
    if m.accidents or m.hazards:
        rows = []
        linked: set[str] = set()
        for acc in m.accidents:
            hazards = [h for h in m.hazards if acc.id in h.accident_refs]
            linked.update(h.id for h in hazards)
            first = f"{acc.id}: {acc.description}"
            if not hazards:
                rows.append([first, ""])
            for i, h in enumerate(hazards):
                rows.append([first if i == 0 else "", f"{h.id}: {h.description}"])
        for h in m.hazards:
            if h.id not in linked:
                rows.append(["(unlinked)", f"{h.id}: {h.description}"])
        lines += _table(["Accident", "Hazard"], rows)
        if m.constraints:
            hl = [c for c in m.constraints if any(h.id == c.source for h in m.hazards)]
            if hl:
                lines += ["", "High-level safety constraints:", ""]
                lines += [f"- {c.id} (from {c.source}): {c.text}" for c in hl]
    else:
        lines.append(NONE)
    lines.append("")

    lines += ["## 2. Control Structure & Loops", ""]
    if m.components:
        lines += _table(
            ["Component", "Kind", "Label"], [[c.id, c.kind.value, c.label] for c in m.components]
        )
        lines.append("")
    if bundle.loops:
        for n, lp in enumerate(bundle.loops, 1):
            fb = ", ".join(lp.feedbacks) if lp.feedbacks else "no feedback"
            lines.append(
                f"{n}. {lp.controller} -> {lp.controlled}: actions {', '.join(lp.actions)}; {fb}"
            )
    else:
        lines.append("No control loops.")
    lines.append("")

    lines += ["## 3. UCA Matrix", ""]
    if m.actions:
        counts = {s: 0 for s in Status}
        for cand in bundle.candidates:
            counts[cand.status] += 1
        lines.append(
            f"{len(bundle.candidates)} candidates: {counts[Status.ASSESSED_UNSAFE]} unsafe, "
            f"{counts[Status.ASSESSED_SAFE]} safe, {counts[Status.UNASSESSED]} unassessed."
        )
        lines.append("")
        cells = matrix_cells(bundle)
        lines += _table(
            ["Action"] + [c.value for c in UcaClass],
            [[a.id] + [cells[a.id].get(c, "unassessed") for c in UcaClass] for a in m.actions],
        )
    else:
        lines.append(NONE)
    lines.append("")

    lines += ["## 4. UCAs, Safety Constraints and ASILs", ""]
    if m.ucas:
        derived = {c.source: c for c in bundle.derived_constraints}
        for uca in m.ucas:
            sc = derived[uca.id]
            declared = [c for c in m.constraints if c.source == uca.id]
            lines += [
                f"### {uca.id}",
                "",
                f"- Action: {uca.action}",
                f"- Category: {uca.category}",
                f"- Context: {uca.context}",
                f"- Hazards: {', '.join(uca.hazard_refs) or 'none'}",
                f"- Rating: {uca.rating if uca.rating is not None else 'unrated'}",
                f"- ASIL: {_asil_of(uca.rating) or 'n/a'}",
                f"- Derived constraint {sc.id}: {sc.text}",
            ]
            for c in declared:
                lines.append(f"- Declared constraint {c.id}: {c.text}")
            lines.append("")
    else:
        lines += [NONE, ""]

    lines += ["## 5. Causal Factors & Scenarios", ""]
    if m.causal_factors or m.scenarios:
        if m.causal_factors:
            lines += _table(
                ["Factor", "UCA", "Element", "Description"],
                [[c.id, c.uca, c.element.value, c.description] for c in m.causal_factors],
            )
            lines.append("")
        for scn in m.scenarios:
            lines.append(f"- {scn.id} on {scn.uca} (requires {' + '.join(scn.factors)}): {scn.description}")
        if m.scenarios:
            lines.append("")
    else:
        lines += [NONE, ""]

    lines += ["## 6. Findings", ""]
    errors = sum(f.severity is Severity.ERROR for f in bundle.findings)
    lines.append(f"{errors} errors, {len(bundle.findings) - errors} warnings.")
    lines.append("")
    for f in bundle.findings:
        where = ""
        if f.span is not None:
            where = f" ({PurePath(f.span.file).name}:{f.span.line}:{f.span.column})"
        lines.append(f"- {f.code} {f.severity.value} `{f.subject}`: {f.message}{where}")
    if bundle.findings:
        lines.append("")
    return "\n".join(lines)
