"""Placeholder scanning, letter drafting, and verified fills."""

from __future__ import annotations

import json
import random

import pytest

from rebutkit.drafting import (
    STYLE_INSTRUCTIONS,
    NumeralViolation,
    Placeholder,
    RebuttalDraft,
    assert_placeholder_safe,
    draft_rebuttal,
    fill_placeholder,
    scan_text,
)
from rebutkit.errors import PlaceholderViolation, UnknownPlaceholder
from rebutkit.ingest import parse_reviews
from rebutkit.planning import ConcernPlan, PlanRevision, serialize_plans
from rebutkit.structuring import AtomicConcern, ConcernSource

from conftest import FakeGateway

BASE_LETTER_WORDS = (
    "We thank the reviewers for the careful reading and respond to every point "
    "below with clarifications and planned additions to the camera ready version"
).split()

CLEAN_LETTER = """We thank all reviewers for the careful reading.

## Common Response

The probe batch is drawn once and the 84.2% figure is computed on the held-out split.

## Response to Reviewer R1

**Q1:** The 84.2% claim needs context for the probe batch.

**A1:** The calibration batch never updates adapter weights. A follow-up measurement will be added at [TBD] accuracy.
"""

VIOLATION_LETTER = CLEAN_LETTER.replace("at [TBD] accuracy", "at 91.3% accuracy")

REVIEW_BLOCK = ["Weaknesses:\n- The 84.2% claim needs context for the probe batch.\n"]


def make_concern():
    source = ConcernSource("R1", "weakness", 1, 2, "The 84.2% claim needs context")
    return AtomicConcern("q1", "probe batch context for the accuracy claim", [source], ["Sec.2"], "P2")


def make_revision():
    plan = ConcernPlan("q1", "interpretative_defense", "Covered by the calibration text.", internal_refs=["p3"])
    return PlanRevision(1, [plan], "system")


# --- scanning ---------------------------------------------------------------


def test_marked_example_passes():
    placeholders = assert_placeholder_safe("Our method achieves an accuracy of 85.4%* on ImageNet.", set())
    assert [p.marker for p in placeholders] == ["asterisk"]
    assert placeholders[0].numeral == "85.4"
    assert placeholders[0].raw == "85.4%*"


def test_unmarked_novel_numeral_is_violation():
    _, violations = scan_text("The gap is 3.7% on the split.", {"84.2"})
    assert [v.value for v in violations] == ["3.7"]
    with pytest.raises(PlaceholderViolation):
        assert_placeholder_safe("The gap is 3.7% on the split.", {"84.2"})


def test_known_numerals_pass_unmarked():
    placeholders, violations = scan_text("We keep the 84.2% figure.", {"84.2"})
    assert placeholders == [] and violations == []


def test_tbd_tokens_are_placeholders():
    placeholders, violations = scan_text("Accuracy reaches [TBD] and latency drops to [TBD].", set())
    assert violations == []
    assert [p.marker for p in placeholders] == ["tbd", "tbd"]


def test_structural_references_not_flagged():
    text = "See Table 2, Eq. 3, Sec.4.2 and reviewer R1 for Q1 context (3)."
    placeholders, violations = scan_text(text, set())
    assert placeholders == [] and violations == []


def test_placeholder_completeness_over_injection_trials():
    rng = random.Random(20260825)
    value_pool = [f"{a}.{b}%" for a in range(10, 100) for b in range(1, 10) if f"{a}.{b}" != "84.2"]
    known = {"84.2"}
    for _ in range(100):
        k = rng.randint(1, 20)
        injected = rng.sample(value_pool, k)
        words = list(BASE_LETTER_WORDS)
        for token in injected:
            words.insert(rng.randint(0, len(words)), token)
        text = " ".join(words)

        _, violations = scan_text(text, known)
        assert len(violations) == k
        assert sorted(v.value for v in violations) == sorted(t.rstrip("%") for t in injected)

        marked = list(BASE_LETTER_WORDS)
        for token in injected:
            marked.insert(rng.randint(0, len(marked)), token + "*")
        placeholders, violations = scan_text(" ".join(marked), known)
        assert violations == []
        assert sorted(p.numeral for p in placeholders) == sorted(t.rstrip("%") for t in injected)


# --- drafting ---------------------------------------------------------------


def test_draft_rebuttal_happy_path(small):
    doc, cdoc = small
    reviews = parse_reviews(REVIEW_BLOCK)
    concern, revision = make_concern(), make_revision()
    gw = FakeGateway({"letter_writer": CLEAN_LETTER})
    draft = draft_rebuttal([concern], revision, doc, cdoc, reviews, [], gw)
    assert draft.placeholder_style == "tbd"
    assert [p.marker for p in draft.placeholders] == ["tbd"]
    assert "84.2" in draft.base_known
    binding = gw.calls_for("letter_writer")[0]
    assert binding["placeholder_style"] == STYLE_INSTRUCTIONS["tbd"]
    assert binding["rebuttal_ideas"] == serialize_plans(revision.plans)
    titles = [s.title for s in draft.sections()]
    assert titles == ["Preamble", "Common Response", "Response to Reviewer R1"]
    assert draft.sections()[2].reviewer_id == "R1"


def test_draft_reask_recovers(small):
    doc, cdoc = small
    reviews = parse_reviews(REVIEW_BLOCK)
    gw = FakeGateway({"letter_writer": [VIOLATION_LETTER, CLEAN_LETTER]})
    draft = draft_rebuttal([make_concern()], make_revision(), doc, cdoc, reviews, [], gw)
    assert draft.revalidate() == []
    calls = gw.calls_for("letter_writer")
    assert len(calls) == 2
    assert "[placeholder problems]" in calls[1]["rebuttal_ideas"]
    assert "91.3" in calls[1]["rebuttal_ideas"]


def test_draft_stubborn_violation_raises(small):
    doc, cdoc = small
    reviews = parse_reviews(REVIEW_BLOCK)
    gw = FakeGateway({"letter_writer": VIOLATION_LETTER})
    with pytest.raises(PlaceholderViolation) as err:
        draft_rebuttal([make_concern()], make_revision(), doc, cdoc, reviews, [], gw)
    assert any(v["value"] == "91.3" for v in err.value.violations)
    assert len(gw.calls_for("letter_writer")) == 2


def test_draft_unknown_style_rejected(small):
    doc, cdoc = small
    reviews = parse_reviews(REVIEW_BLOCK)
    with pytest.raises(ValueError):
        draft_rebuttal([make_concern()], make_revision(), doc, cdoc, reviews, [], FakeGateway({}), style="bold")


def test_asterisk_style_letter(small):
    doc, cdoc = small
    reviews = parse_reviews(REVIEW_BLOCK)
    letter = CLEAN_LETTER.replace("at [TBD] accuracy", "at 90.1%* accuracy")
    gw = FakeGateway({"letter_writer": letter})
    draft = draft_rebuttal([make_concern()], make_revision(), doc, cdoc, reviews, [], gw, style="asterisk")
    assert [p.marker for p in draft.placeholders] == ["asterisk"]
    assert draft.placeholders[0].numeral == "90.1"


# --- fills ------------------------------------------------------------------


def build_draft(text, known=("84.2",)):
    placeholders, violations = scan_text(text, set(known))
    assert violations == []
    return RebuttalDraft(text=text, placeholder_style="tbd", placeholders=placeholders, base_known=sorted(known))


def test_fill_placeholder_flow():
    draft = build_draft("We see 84.2% overall and expect 2.4%* plus [TBD] later.")
    star, tbd = draft.placeholders
    assert star.raw == "2.4%*" and tbd.raw == "[TBD]"

    once = fill_placeholder(draft, star.location, "2.1%", "internal run log")
    assert "2.1%" in once.text and "2.4%*" not in once.text
    assert once.revalidate() == []
    assert [p.raw for p in once.placeholders] == ["[TBD]"]
    # the remaining placeholder shifted left by one character
    assert once.text[once.placeholders[0].location:].startswith("[TBD]")

    twice = fill_placeholder(once, once.placeholders[0].location, "16 points", "verified by author")
    assert twice.text == "We see 84.2% overall and expect 2.1% plus 16 points later."
    assert twice.revalidate() == []
    assert twice.placeholders == []
    assert [f["value"] for f in twice.fills] == ["2.1%", "16 points"]
    assert set(twice.verified_numerals) == {"2.1", "16"}

    with pytest.raises(UnknownPlaceholder):
        fill_placeholder(twice, star.location, "9.9%", "again")


def test_fill_requires_evidence_note():
    draft = build_draft("Expect [TBD] soon.", known=())
    with pytest.raises(ValueError):
        fill_placeholder(draft, draft.placeholders[0].location, "5%", "   ")


def test_fill_wrong_location_raises():
    draft = build_draft("Expect [TBD] soon.", known=())
    with pytest.raises(UnknownPlaceholder):
        fill_placeholder(draft, 2, "5%", "note")


def test_draft_round_trip():
    draft = build_draft("We see 84.2% overall and expect 2.4%* plus [TBD] later.")
    filled = fill_placeholder(draft, draft.placeholders[0].location, "2.1%", "log")
    clone = RebuttalDraft.from_dict(json.loads(json.dumps(filled.to_dict())))
    assert clone.to_dict() == filled.to_dict()
    assert clone.revalidate() == []
