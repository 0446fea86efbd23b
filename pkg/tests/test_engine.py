import random
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from modelgen import random_model
from stpa import (
    Asil,
    NotFoundError,
    Severity,
    Status,
    derive_constraint,
    enumerate_candidates,
    parse,
    step2_prompts,
    trace,
    validate,
)
from stpa.model import Element, UcaClass

ONE_ACTION = """model "m"
component Ctl kind controller "Brake controller"
component Proc kind controlled_process "Vehicle"
action CA1 Ctl -> Proc "a brake command"
"""


def test_candidates_single_action():
    cands = enumerate_candidates(parse(ONE_ACTION))
    assert [c.category for c in cands] == list(UcaClass)
    assert {c.status for c in cands} == {Status.UNASSESSED}


def test_candidates_empty():
    assert enumerate_candidates(parse('model "m"')) == []


def test_candidates_corpus(corpus_text, corpus):
    n_actions = sum(1 for line in corpus_text.splitlines() if line.startswith("action "))
    assert n_actions == 12
    cands = enumerate_candidates(corpus)
    assert len(cands) == 4 * n_actions
    by_key = {(c.action, c.category): c for c in cands}
    assert by_key["CA3", UcaClass.NOT_PROVIDED].uca_ids == ("UCA1",)
    assert by_key["CA3", UcaClass.PROVIDED].status is Status.ASSESSED_SAFE


@given(st.integers(0, 2**32 - 1))
def test_candidate_cardinality(seed):
    model = random_model(random.Random(seed))
    cands = enumerate_candidates(model)
    assert len(cands) == 4 * len(model.actions)
    assert cands == enumerate_candidates(model)


def test_derive_worked_example(corpus):
    sc = derive_constraint(corpus, "UCA1")
    assert "must provide a reference vehicle" in sc.text
    assert sc.text.startswith("Supervisory controller must provide")
    assert sc.source == "UCA1" and sc.asil is Asil.D
    assert derive_constraint(corpus, "UCA1") == sc


@pytest.mark.parametrize(
    "category,fragment",
    [
        ("provided", "Brake controller must not provide a brake command when wet"),
        ("not_provided", "Brake controller must provide a brake command when wet"),
        ("wrong_timing", "must provide a brake command within required timing and ordering when wet"),
        ("wrong_duration", "must apply a brake command for the required duration when wet"),
    ],
)
def test_derive_templates(category, fragment):
    model = parse(
        ONE_ACTION + f'uca UCA1 on CA1 category {category} context "when wet" hazards H1\n'
    )
    sc = derive_constraint(model, "UCA1")
    assert fragment in sc.text
    assert ("must not provide" in sc.text) == (category == "provided")
    assert sc.asil is None


def test_derived_ids_follow_declared_numbering(corpus):
    ids = [derive_constraint(corpus, u.id).id for u in corpus.ucas]
    assert ids == ["SC13", "SC14", "SC15", "SC16", "SC17"]


def test_declared_uca_constraints_match_templates(corpus):
    for sc in corpus.constraints:
        if sc.source.startswith("UCA"):
            derived = derive_constraint(corpus, sc.source)
            assert derived.text == sc.text
            assert derived.asil is sc.asil


def test_derive_unknown():
    with pytest.raises(NotFoundError):
        derive_constraint(parse(ONE_ACTION), "UCA9")


def test_step2_worked_example(corpus):
    prompts = step2_prompts(corpus, "UCA1")
    assert [p.element for p in prompts] == list(Element)
    answered = {p.element: p.answered_by for p in prompts}
    assert answered[Element.COMMUNICATION_CHANNEL] == ("CF1",)
    assert answered[Element.SENSOR_OR_MEASUREMENT] == ("CF2",)
    assert sum(len(v) for v in answered.values()) == 2
    feedback = next(p for p in prompts if p.element is Element.FEEDBACK_PATH)
    assert "FB2 (active agent status)" in feedback.question


def test_step2_open_loop_flags_missing_feedback():
    model = parse(ONE_ACTION + 'uca UCA1 on CA1 category not_provided context "c" hazards H1\n')
    prompts = step2_prompts(model, "UCA1")
    feedback = next(p for p in prompts if p.element is Element.FEEDBACK_PATH)
    assert "no feedback signal" in feedback.question
    assert len(prompts) == 8


def test_step2_unknown(corpus):
    with pytest.raises(NotFoundError):
        step2_prompts(corpus, "H1")


def test_corpus_validates_without_errors(corpus):
    findings = validate(corpus)
    assert [f for f in findings if f.severity is Severity.ERROR] == []
    assert {f.code for f in findings} == {"W002"}


def test_findings_errors_before_warnings():
    model = parse(
        ONE_ACTION
        + 'hazard H1 "h"\n'
        + 'uca UCA1 on CA1 category provided context "c"\n'
    )
    findings = validate(model)
    severities = [f.severity for f in findings]
    assert severities == sorted(severities, key=lambda s: s is Severity.WARNING)
    codes = {f.code for f in findings}
    assert {"E002", "E003", "W001", "W003", "W004", "W005", "W006"} <= codes


def test_feedback_into_non_controller(corpus):
    bad = replace(corpus, feedbacks=corpus.feedbacks + (
        replace(corpus.feedbacks[0], id="FB99", target="Gateway"),
    ))
    assert [(f.code, f.subject) for f in validate(bad) if f.subject == "FB99"] == [("E004", "FB99")]


def test_scenario_factor_from_other_uca(corpus):
    scn = replace(corpus.scenarios[0], factors=("CF1", "CF3"))
    bad = replace(corpus, scenarios=(scn,))
    errs = [f for f in validate(bad) if f.severity is Severity.ERROR]
    assert [(f.code, f.subject) for f in errs] == [("E001", "SCN1")]


def test_wrong_kind_reference(corpus):
    hazard = replace(corpus.hazards[0], accident_refs=("H2",))
    bad = replace(corpus, hazards=(hazard,) + corpus.hazards[1:])
    (err,) = [f for f in validate(bad) if f.severity is Severity.ERROR]
    assert (err.code, err.subject) == ("E001", "H1")
    assert "has kind hazard, expected accident" in err.message


@given(st.integers(0, 2**32 - 1))
def test_validate_is_total_and_deterministic(seed):
    model = random_model(random.Random(seed))
    findings = validate(model)
    assert findings == validate(model)
    assert all(f.code[0] == ("E" if f.severity is Severity.ERROR else "W") for f in findings)


def test_trace_worked_example(corpus):
    t = trace(corpus, "UCA1")
    down = set()
    for node in t.down:
        down.update(node.ids())
    assert {i for i in down if i.startswith("H")} == {"H1", "H2", "H3"}
    assert {i for i in down if i.startswith("A")} == {"A1"}
    assert [n.id for n in t.down] == ["H1", "H2", "H3"]


def test_trace_accident_upward(corpus):
    t = trace(corpus, "A1")
    assert t.down == ()
    assert [n.id for n in t.up] == ["H1", "H2", "H3"]


def test_trace_isolated_accident():
    t = trace(parse('model "m"\naccident A1 "x"'), "A1")
    assert t.down == () and t.up == ()
    assert t.render() == "A1 (accident)\n"


def test_trace_action_lists_ucas(corpus):
    assert [n.id for n in trace(corpus, "CA8").up] == ["UCA2", "UCA3"]


def test_trace_unknown(corpus):
    with pytest.raises(NotFoundError):
        trace(corpus, "ZZ9")


@given(st.integers(0, 2**32 - 1))
def test_trace_visits_each_entity_once(seed):
    model = random_model(random.Random(seed))
    for entity in model.entities():
        t = trace(model, entity.id)
        ids = [entity.id]
        for node in t.down + t.up:
            ids.extend(node.ids())
        assert len(ids) == len(set(ids))
