"""Letter drafting with mechanical placeholder discipline.

Every numeral in the letter must either appear in a trusted source
(manuscript, reviews, approved plans, evidence briefs) or be marked as a
placeholder: an asterisk directly after an invented value, or a bare [TBD]
token. Unmarked novel numerals are violations and never ship.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .errors import PlaceholderViolation, UnknownPlaceholder
from .evidence.screening import EvidenceBundle
from .gateway.client import LlmGateway
from .ingest import ManuscriptDoc, ReviewSet, format_reviews
from .planning import PlanRevision, known_numeral_pool, serialize_plans
from .structuring import AtomicConcern, CompressedDoc, format_compressed, serialize_concerns
from .textutil import known_numerals, numeral_tokens

log = logging.getLogger(__name__)

TBD_TOKEN = "[TBD]"
_TBD_RE = re.compile(r"\[TBD\]")
_SECTION_HEADER_RE = re.compile(
    r"(?m)^\s*[#*]*\s*(Common Response|Response to Reviewer\s+([A-Za-z0-9]+))\s*[:*#\s]*$"
)

STYLE_INSTRUCTIONS = {
    "asterisk": (
        "Invent plausible values where needed and append a distinct asterisk (*) "
        "immediately after every invented number."
    ),
    "tbd": (
        "Do not invent numbers. Write the placeholder [TBD] wherever a "
        "yet-to-be-verified number would go."
    ),
}
DEFAULT_STYLE = "tbd"


@dataclass(frozen=True)
class Placeholder:
    location: int  # char offset of the marked token
    numeral: str   # canonical value; empty for [TBD]
    marker: str    # asterisk | tbd
    raw: str       # exact text occupying the span, e.g. "85.4%*" or "[TBD]"

    def to_dict(self) -> dict:
        return {"location": self.location, "numeral": self.numeral, "marker": self.marker, "raw": self.raw}

    @classmethod
    def from_dict(cls, payload: dict) -> "Placeholder":
        return cls(payload["location"], payload["numeral"], payload["marker"], payload["raw"])


@dataclass(frozen=True)
class NumeralViolation:
    value: str
    start: int
    end: int
    context: str

    def to_dict(self) -> dict:
        return {"value": self.value, "start": self.start, "end": self.end, "context": self.context}


def scan_text(text: str, known: set[str]) -> tuple[list[Placeholder], list[NumeralViolation]]:
    """Every novel numeral is either a marked placeholder or a violation."""
    placeholders = [
        Placeholder(m.start(), "", "tbd", TBD_TOKEN) for m in _TBD_RE.finditer(text)
    ]
    violations: list[NumeralViolation] = []
    for nm in numeral_tokens(text):
        if nm.value in known:
            continue
        if nm.end < len(text) and text[nm.end] == "*":
            placeholders.append(Placeholder(nm.start, nm.value, "asterisk", nm.raw + "*"))
        else:
            context = text[max(0, nm.start - 30):nm.end + 30].replace("\n", " ")
            violations.append(NumeralViolation(nm.value, nm.start, nm.end, context))
    placeholders.sort(key=lambda p: p.location)
    return placeholders, violations


def assert_placeholder_safe(text: str, known: set[str]) -> list[Placeholder]:
    placeholders, violations = scan_text(text, known)
    if violations:
        raise PlaceholderViolation([v.to_dict() for v in violations])
    return placeholders


@dataclass(frozen=True)
class DraftSection:
    title: str
    reviewer_id: str  # empty for Common Response / preamble
    body: str


@dataclass
class RebuttalDraft:
    text: str
    placeholder_style: str
    placeholders: list[Placeholder]
    base_known: list[str]  # sorted trusted-numeral pool frozen at draft time
    verified_numerals: list[str] = field(default_factory=list)
    fills: list[dict] = field(default_factory=list)

    def known_pool(self) -> set[str]:
        return set(self.base_known) | set(self.verified_numerals)

    def revalidate(self) -> list[NumeralViolation]:
        return scan_text(self.text, self.known_pool())[1]

    def pending(self) -> list[Placeholder]:
        return list(self.placeholders)

    def sections(self) -> list[DraftSection]:
        matches = list(_SECTION_HEADER_RE.finditer(self.text))
        sections: list[DraftSection] = []
        if matches and self.text[: matches[0].start()].strip():
            sections.append(DraftSection("Preamble", "", self.text[: matches[0].start()].strip()))
        if not matches and self.text.strip():
            return [DraftSection("Preamble", "", self.text.strip())]
        for i, m in enumerate(matches):
            title = re.sub(r"\s+", " ", m.group(1)).strip()
            reviewer_id = m.group(2) or ""
            end = matches[i + 1].start() if i + 1 < len(matches) else len(self.text)
            sections.append(DraftSection(title, reviewer_id, self.text[m.end():end].strip()))
        return sections

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "placeholder_style": self.placeholder_style,
            "placeholders": [p.to_dict() for p in self.placeholders],
            "base_known": list(self.base_known),
            "verified_numerals": list(self.verified_numerals),
            "fills": list(self.fills),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RebuttalDraft":
        return cls(
            text=payload["text"],
            placeholder_style=payload["placeholder_style"],
            placeholders=[Placeholder.from_dict(p) for p in payload["placeholders"]],
            base_known=list(payload["base_known"]),
            verified_numerals=list(payload.get("verified_numerals", [])),
            fills=list(payload.get("fills", [])),
        )


def draft_known_pool(
    doc: ManuscriptDoc,
    reviews: ReviewSet,
    concerns: list[AtomicConcern],
    revision: PlanRevision,
    bundles: list[EvidenceBundle],
) -> set[str]:
    by_id = {b.concern_id: b for b in bundles}
    pool = known_numeral_pool(doc, format_reviews(reviews), concerns, by_id)
    # approved plans are author-sanctioned, so their numerals count as known
    return pool | known_numerals(serialize_plans(revision.plans))


def draft_rebuttal(
    concerns: list[AtomicConcern],
    revision: PlanRevision,
    doc: ManuscriptDoc,
    cdoc: CompressedDoc,
    reviews: ReviewSet,
    bundles: list[EvidenceBundle],
    gateway: LlmGateway,
    style: str = DEFAULT_STYLE,
) -> RebuttalDraft:
    """Write the letter; one re-ask on placeholder violations, then fail hard."""
    if style not in STYLE_INSTRUCTIONS:
        raise ValueError(f"unknown placeholder style {style!r}")
    known = draft_known_pool(doc, reviews, concerns, revision, bundles)
    bindings = {
        "placeholder_style": STYLE_INSTRUCTIONS[style],
        "original_paper": format_compressed(cdoc),
        "review_original_text": format_reviews(reviews),
        "review_question": serialize_concerns(concerns),
        "rebuttal_ideas": serialize_plans(revision.plans),
    }
    text = gateway.call("letter_writer", bindings, stage="draft").text
    placeholders, violations = scan_text(text, known)
    if violations:
        listing = "; ".join(f"{v.value} at {v.start}" for v in violations)
        log.warning("draft has %d unmarked numerals; one re-ask (%s)", len(violations), listing)
        retry = dict(bindings)
        retry["rebuttal_ideas"] += (
            f"\n\n[placeholder problems]: these numbers are unsupported and must be marked or removed: {listing}"
        )
        text = gateway.call("letter_writer", retry, stage="draft").text
        placeholders, violations = scan_text(text, known)
        if violations:
            raise PlaceholderViolation([v.to_dict() for v in violations])
    return RebuttalDraft(
        text=text,
        placeholder_style=style,
        placeholders=placeholders,
        base_known=sorted(known),
    )


def fill_placeholder(
    draft: RebuttalDraft, location: int, verified_value: str, evidence_note: str
) -> RebuttalDraft:
    """Replace one placeholder with an author-verified value; pure function.

    The verified value joins the trusted pool, so revalidation stays clean.
    Filling the same location twice raises, because the placeholder is gone.
    """
    target = next((p for p in draft.placeholders if p.location == location), None)
    if target is None:
        raise UnknownPlaceholder(location)
    if not evidence_note.strip():
        raise ValueError("a fill needs an evidence note")
    start, end = location, location + len(target.raw)
    assert draft.text[start:end] == target.raw, "placeholder registry out of sync with text"
    new_text = draft.text[:start] + verified_value + draft.text[end:]
    delta = len(verified_value) - len(target.raw)
    shifted = [
        Placeholder(p.location + delta if p.location > location else p.location, p.numeral, p.marker, p.raw)
        for p in draft.placeholders
        if p.location != location
    ]
    verified = list(draft.verified_numerals)
    for value in sorted(known_numerals(verified_value)):
        if value not in verified:
            verified.append(value)
    fills = draft.fills + [
        {"location": location, "replaced": target.raw, "value": verified_value, "evidence": evidence_note}
    ]
    return RebuttalDraft(
        text=new_text,
        placeholder_style=draft.placeholder_style,
        placeholders=shifted,
        base_known=list(draft.base_known),
        verified_numerals=verified,
        fills=fills,
    )
