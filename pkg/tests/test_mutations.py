from dataclasses import replace

import pytest

from mutations import MUTATIONS, new_findings
from stpa import Severity, parse, validate


@pytest.fixture(scope="module")
def baseline(corpus):
    return validate(corpus)


@pytest.mark.parametrize("mutation", MUTATIONS, ids=[m.name for m in MUTATIONS])
def test_mutation_raises_expected_code(corpus, baseline, mutation):
    added = new_findings(baseline, validate(mutation.apply(corpus)))
    on_subject = [code for code, subject in added if subject == mutation.subject]
    assert on_subject == [mutation.code]


def test_text_mutation_removing_link(corpus_text, corpus):
    line = 'hazard H1 "Inadequate distance to frontal vehicle" -> A1'
    assert line in corpus_text
    model = parse(corpus_text.replace(line, line.removesuffix(" -> A1")))
    errors = [(f.code, f.subject) for f in validate(model) if f.severity is Severity.ERROR]
    assert errors == [("E002", "H1")]


def test_text_mutation_emptying_hazards(corpus_text):
    model = parse(corpus_text.replace("  hazards H1, H2, H3\n", ""))
    errors = [(f.code, f.subject) for f in validate(model) if f.severity is Severity.ERROR]
    assert errors == [("E003", "UCA1")]


def _referrers(model, ident):
    out = []
    for h in model.hazards:
        if ident in h.accident_refs:
            out.append(h.id)
    for c in model.constraints:
        if c.source == ident:
            out.append(c.id)
    for a in model.actions + model.feedbacks:
        if ident in (a.source, a.target):
            out.append(a.id)
    for u in model.ucas:
        if ident == u.action or ident in u.hazard_refs:
            out.append(u.id)
    for s in model.safe_assessments:
        if s.action == ident:
            out.append(s.action)
    for c in model.causal_factors:
        if c.uca == ident:
            out.append(c.id)
    for s in model.scenarios:
        if ident == s.uca or ident in s.factors:
            out.append(s.id)
    return out


def _delete(model, ident):
    fields = {}
    for name in ("accidents", "hazards", "constraints", "components", "actions",
                 "feedbacks", "ucas", "causal_factors", "scenarios"):
        items = getattr(model, name)
        kept = tuple(x for x in items if x.id != ident)
        if len(kept) != len(items):
            fields[name] = kept
    return replace(model, **fields)


def test_deleting_any_referenced_declaration_is_detected(corpus, baseline):
    checked = 0
    for entity in corpus.entities():
        referrers = _referrers(corpus, entity.id)
        if not referrers:
            continue
        added = new_findings(baseline, validate(_delete(corpus, entity.id)))
        subjects = {subject for _, subject in added}
        assert subjects & set(referrers), entity.id
        checked += 1
    assert checked >= 20


def test_deleting_any_sole_link_is_detected(corpus, baseline):
    for hazard in corpus.hazards:
        bad = replace(corpus, hazards=tuple(
            replace(h, accident_refs=()) if h.id == hazard.id else h for h in corpus.hazards
        ))
        assert ("E002", hazard.id) in new_findings(baseline, validate(bad))
    for uca in corpus.ucas:
        bad = replace(corpus, ucas=tuple(
            replace(u, hazard_refs=()) if u.id == uca.id else u for u in corpus.ucas
        ))
        assert ("E003", uca.id) in new_findings(baseline, validate(bad))
