"""Input normalization: paragraph-indexed manuscripts and locator-bearing reviews.

The pipeline contract starts at structured text. PDF extraction belongs to an
external preprocessing step; this module accepts markdown-like text or an
already-extracted paragraph list.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .errors import EmptyDocument, NoReviews
from .textutil import collapse_spaces, harvest_hooks, normalize_for_match

log = logging.getLogger(__name__)

# A heading is a markdown heading or a short single line starting with a
# section number ("3.2 Method").
_MD_HEADING_RE = re.compile(r"^(#+)\s*(.+?)\s*$")
_NUMBERED_HEADING_RE = re.compile(r"^(\d+(?:\.\d+)*)[.)]?\s+(\S.*)$")

SEGMENT_TYPES = ("summary", "weakness", "question", "other")
TYPE_CODES = {"summary": "S", "weakness": "W", "question": "Q", "other": "O"}
CODE_TYPES = {code: name for name, code in TYPE_CODES.items()}

_SECTION_KEYWORDS = {
    "summary": "summary",
    "weakness": "weakness",
    "weaknesses": "weakness",
    "question": "question",
    "questions": "question",
    "strength": "other",
    "strengths": "other",
    "limitation": "other",
    "limitations": "other",
    "comment": "other",
    "comments": "other",
    "other": "other",
}
_SECTION_HEADING_RE = re.compile(
    r"^\s*(?:#+\s*)?(" + "|".join(_SECTION_KEYWORDS) + r")\s*:?\s*$", re.IGNORECASE
)
_BULLET_RE = re.compile(r"^\s*(?:[-*+•]|\d+[.)])\s+")


# --- manuscripts ------------------------------------------------------------


@dataclass(frozen=True)
class Paragraph:
    para_id: str
    section_label: str
    text: str


@dataclass
class ManuscriptDoc:
    doc_id: str
    paragraphs: list[Paragraph]
    anchors: dict[str, list[str]] = field(default_factory=dict)

    def paragraph(self, para_id: str) -> Paragraph:
        index = {p.para_id: p for p in self.paragraphs}
        return index[para_id]

    def full_text(self) -> str:
        return "\n\n".join(p.text for p in self.paragraphs)

    def validate(self) -> None:
        expected = [f"p{i}" for i in range(1, len(self.paragraphs) + 1)]
        actual = [p.para_id for p in self.paragraphs]
        if actual != expected:
            raise ValueError(f"para_ids not dense: {actual}")
        if not self.full_text().strip():
            raise EmptyDocument("manuscript has no text")
        known = set(actual)
        for hook, para_ids in self.anchors.items():
            missing = [p for p in para_ids if p not in known]
            if missing:
                raise ValueError(f"anchor {hook!r} points at unknown paragraphs {missing}")

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "paragraphs": [
                {"para_id": p.para_id, "section_label": p.section_label, "text": p.text}
                for p in self.paragraphs
            ],
            "anchors": {hook: list(ids) for hook, ids in sorted(self.anchors.items())},
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ManuscriptDoc":
        doc = cls(
            doc_id=payload["doc_id"],
            paragraphs=[Paragraph(p["para_id"], p["section_label"], p["text"]) for p in payload["paragraphs"]],
            anchors={hook: list(ids) for hook, ids in payload.get("anchors", {}).items()},
        )
        doc.validate()
        return doc


def _heading_label(line: str) -> str | None:
    """Section label when the line is a heading, else None."""
    m = _MD_HEADING_RE.match(line)
    if m:
        inner = m.group(2)
        numbered = _NUMBERED_HEADING_RE.match(inner)
        if numbered:
            return f"Sec.{numbered.group(1)}"
        return inner
    m = _NUMBERED_HEADING_RE.match(line)
    if m and len(line) <= 100:
        return f"Sec.{m.group(1)}"
    return None


def _check_heading_nesting(labels: list[str]) -> None:
    seen: set[str] = set()
    for label in labels:
        if not label.startswith("Sec."):
            continue
        number = label[len("Sec."):]
        parts = number.split(".")
        if len(parts) > 1 and ".".join(parts[:-1]) not in seen:
            log.warning("heading %s appears without parent section %s", label, ".".join(parts[:-1]))
        seen.add(number)


def parse_manuscript(source: str, doc_id: str = "manuscript") -> ManuscriptDoc:
    """Split structured text into paragraphs on blank lines.

    Section labels inherit from the nearest preceding heading ("Global" before
    any heading). Heading lines themselves are not paragraphs, so
    character conservation holds over the text with headings removed.
    """
    if not source or not source.strip():
        raise EmptyDocument("manuscript source is empty")
    paragraphs: list[Paragraph] = []
    heading_labels: list[str] = []
    current_label = "Global"
    block: list[str] = []

    def flush() -> None:
        if not block:
            return
        text = collapse_spaces(" ".join(collapse_spaces(line) for line in block))
        if text:
            paragraphs.append(Paragraph(f"p{len(paragraphs) + 1}", current_label, text))
        block.clear()

    for line in source.splitlines():
        if not line.strip():
            flush()
            continue
        label = _heading_label(line.strip())
        if label is not None:
            flush()
            current_label = label
            heading_labels.append(label)
            continue
        block.append(line)
    flush()
    _check_heading_nesting(heading_labels)
    if not paragraphs:
        raise EmptyDocument("manuscript source contains no paragraph text")
    doc = ManuscriptDoc(doc_id=doc_id, paragraphs=paragraphs, anchors=_harvest_anchors(paragraphs))
    doc.validate()
    return doc


def manuscript_from_paragraphs(items: list[dict], doc_id: str = "manuscript") -> ManuscriptDoc:
    """Build a doc from a pre-extracted list of {section_label, text}."""
    if not items:
        raise EmptyDocument("empty paragraph list")
    paragraphs = [
        Paragraph(f"p{i}", item.get("section_label", "Global"), collapse_spaces(item["text"]))
        for i, item in enumerate(items, start=1)
        if item.get("text", "").strip()
    ]
    if not paragraphs:
        raise EmptyDocument("paragraph list contains no text")
    # Re-number after dropping empty entries so ids stay dense.
    paragraphs = [Paragraph(f"p{i}", p.section_label, p.text) for i, p in enumerate(paragraphs, start=1)]
    doc = ManuscriptDoc(doc_id=doc_id, paragraphs=paragraphs, anchors=_harvest_anchors(paragraphs))
    doc.validate()
    return doc


def _harvest_anchors(paragraphs: list[Paragraph]) -> dict[str, list[str]]:
    anchors: dict[str, list[str]] = {}
    for p in paragraphs:
        for hook in harvest_hooks(p.text):
            ids = anchors.setdefault(hook, [])
            if p.para_id not in ids:
                ids.append(p.para_id)
        # The section label itself anchors its paragraphs.
        if p.section_label.startswith("Sec."):
            ids = anchors.setdefault(p.section_label, [])
            if p.para_id not in ids:
                ids.append(p.para_id)
    return anchors


def conservation_holds(source: str, doc: ManuscriptDoc) -> bool:
    """Concatenated paragraphs equal the source, modulo whitespace and headings."""
    kept_lines = []
    for line in source.splitlines():
        stripped = line.strip()
        if stripped and _heading_label(stripped) is not None:
            continue
        kept_lines.append(line)
    return normalize_for_match("\n".join(kept_lines)) == normalize_for_match(doc.full_text())


# --- reviews ----------------------------------------------------------------


@dataclass(frozen=True)
class ReviewSegment:
    segment_type: str
    locator: int  # 1-based line number within the reviewer's block
    text: str


@dataclass
class Review:
    reviewer_id: str
    segments: list[ReviewSegment]

    def raw_text(self) -> str:
        return "\n".join(s.text for s in self.segments)


@dataclass
class ReviewSet:
    reviews: list[Review]

    def review(self, reviewer_id: str) -> Review:
        for r in self.reviews:
            if r.reviewer_id == reviewer_id:
                return r
        raise KeyError(reviewer_id)

    def all_text(self) -> str:
        return "\n".join(r.raw_text() for r in self.reviews)

    def validate(self) -> None:
        if not self.reviews:
            raise NoReviews("review set is empty")
        ids = [r.reviewer_id for r in self.reviews]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate reviewer ids: {ids}")
        for r in self.reviews:
            locators = [s.locator for s in r.segments]
            if locators != sorted(locators) or len(set(locators)) != len(locators):
                raise ValueError(f"locators not strictly increasing for {r.reviewer_id}")
            if any(not s.text.strip() for s in r.segments):
                raise ValueError(f"empty segment in {r.reviewer_id}")

    def to_dict(self) -> dict:
        return {
            "reviews": [
                {
                    "reviewer_id": r.reviewer_id,
                    "segments": [
                        {"segment_type": s.segment_type, "locator": s.locator, "text": s.text}
                        for s in r.segments
                    ],
                }
                for r in self.reviews
            ]
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ReviewSet":
        reviews = [
            Review(
                reviewer_id=r["reviewer_id"],
                segments=[ReviewSegment(s["segment_type"], s["locator"], s["text"]) for s in r["segments"]],
            )
            for r in payload["reviews"]
        ]
        out = cls(reviews=reviews)
        out.validate()
        return out


def parse_reviews(blocks: list) -> ReviewSet:
    """Normalize per-reviewer text blocks into typed, line-addressed segments.

    Accepts a list of strings or of {reviewer_id, text} dicts. Each nonempty
    non-heading line becomes one segment of the section type currently in
    scope; text before any section heading is typed `other`.
    """
    if not blocks:
        raise NoReviews("no reviewer blocks given")
    reviews: list[Review] = []
    for index, block in enumerate(blocks, start=1):
        if isinstance(block, dict):
            reviewer_id = block.get("reviewer_id") or f"R{index}"
            text = block.get("text", "")
        else:
            reviewer_id = f"R{index}"
            text = str(block)
        segments: list[ReviewSegment] = []
        current_type = "other"
        for line_no, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped:
                continue
            heading = _SECTION_HEADING_RE.match(stripped)
            if heading:
                current_type = _SECTION_KEYWORDS[heading.group(1).lower()]
                continue
            content = collapse_spaces(_BULLET_RE.sub("", stripped))
            if content:
                segments.append(ReviewSegment(current_type, line_no, content))
        if segments:
            reviews.append(Review(reviewer_id=reviewer_id, segments=segments))
    if not reviews:
        raise NoReviews("all reviewer blocks were empty")
    out = ReviewSet(reviews=reviews)
    out.validate()
    return out


def format_reviews(review_set: ReviewSet) -> str:
    """Locator-bearing presentation used as prompt input.

    One line per segment: `R1-W2 (line 23): text`, with per-type indices in
    segment order. This is the text concern sources are quoted from.
    """
    lines: list[str] = []
    for review in review_set.reviews:
        lines.append(f"[Reviewer {review.reviewer_id}]")
        counters = {code: 0 for code in TYPE_CODES.values()}
        for segment in review.segments:
            code = TYPE_CODES[segment.segment_type]
            counters[code] += 1
            lines.append(
                f"{review.reviewer_id}-{code}{counters[code]} (line {segment.locator}): {segment.text}"
            )
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def find_segment(review_set: ReviewSet, reviewer_id: str, type_code: str, type_index: int) -> ReviewSegment | None:
    """Resolve a source reference like (R1, "W", 2) to its segment."""
    try:
        review = review_set.review(reviewer_id)
    except KeyError:
        return None
    wanted_type = CODE_TYPES.get(type_code.upper())
    if wanted_type is None:
        return None
    count = 0
    for segment in review.segments:
        if segment.segment_type == wanted_type:
            count += 1
            if count == type_index:
                return segment
    return None
