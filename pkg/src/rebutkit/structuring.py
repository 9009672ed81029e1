"""Manuscript compression with fidelity checks; atomic concern extraction.

The concern block text (`[qN]` tags, numbered fields, semicolon-separated
sources) is a wire format between model and engine and is parsed exactly as
documented on the extraction prompt.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace

from .errors import DuplicateConcernId, MalformedBlock
from .gateway.client import LlmGateway
from .ingest import CODE_TYPES, TYPE_CODES, ManuscriptDoc, ReviewSet, find_segment, format_reviews
from .textutil import canonical_hook, normalize_for_match

log = logging.getLogger(__name__)

COMPRESS_WINDOW = 3
FIDELITY_MAX_RETRIES = 2

# Review-form noise that must never become a concern; backstop behind the
# prompt's own blacklist instructions.
_BLACKLIST_PATTERNS = [
    re.compile(r"^\s*(ethics?|confidence|soundness|summary)\s*[.:]?\s*$", re.IGNORECASE),
    re.compile(r"no ethical concerns", re.IGNORECASE),
    re.compile(r"^\s*(good|nice|great|interesting|solid)\s+(paper|idea|work)\b[\s.!]*$", re.IGNORECASE),
    re.compile(r"^\s*well[\s-]written\b[\s.!]*$", re.IGNORECASE),
]

PRIORITIES = ("P1", "P2", "P3")


def is_blacklisted(text: str) -> bool:
    return any(p.search(text) for p in _BLACKLIST_PATTERNS)


# --- compressed document ----------------------------------------------------


@dataclass
class CompressedUnit:
    unit_id: str
    section_label: str
    source_para_ids: list[str]
    summary: str
    fidelity: str = "unchecked"  # pass | fail | unchecked


@dataclass
class CompressedDoc:
    doc_id: str
    units: list[CompressedUnit]
    compression_ratio: float

    def unit(self, unit_id: str) -> CompressedUnit:
        for u in self.units:
            if u.unit_id == unit_id:
                return u
        raise KeyError(unit_id)

    def validate(self, doc: ManuscriptDoc) -> None:
        covered: list[str] = []
        for u in self.units:
            if not u.source_para_ids:
                raise ValueError(f"unit {u.unit_id} covers no paragraphs")
            covered.extend(u.source_para_ids)
        expected = [p.para_id for p in doc.paragraphs]
        if covered != expected:
            raise ValueError(f"units do not partition the document in order: {covered}")
        if not 0.0 < self.compression_ratio <= 1.0:
            raise ValueError(f"compression_ratio {self.compression_ratio} outside (0, 1]")

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "compression_ratio": self.compression_ratio,
            "units": [
                {
                    "unit_id": u.unit_id,
                    "section_label": u.section_label,
                    "source_para_ids": list(u.source_para_ids),
                    "summary": u.summary,
                    "fidelity": u.fidelity,
                }
                for u in self.units
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CompressedDoc":
        return cls(
            doc_id=payload["doc_id"],
            compression_ratio=payload["compression_ratio"],
            units=[
                CompressedUnit(
                    unit_id=u["unit_id"],
                    section_label=u["section_label"],
                    source_para_ids=list(u["source_para_ids"]),
                    summary=u["summary"],
                    fidelity=u.get("fidelity", "unchecked"),
                )
                for u in payload["units"]
            ],
        )


def group_paragraphs(doc: ManuscriptDoc, window: int = COMPRESS_WINDOW) -> list[tuple[str, list[str]]]:
    """Section-respecting windows of at most `window` paragraphs, in order."""
    groups: list[tuple[str, list[str]]] = []
    current_label: str | None = None
    current: list[str] = []
    for p in doc.paragraphs:
        if p.section_label != current_label or len(current) >= window:
            if current:
                groups.append((current_label, current))
            current_label, current = p.section_label, []
        current.append(p.para_id)
    if current:
        groups.append((current_label, current))
    return groups


def unit_source_text(unit: CompressedUnit, doc: ManuscriptDoc) -> str:
    return "\n\n".join(doc.paragraph(pid).text for pid in unit.source_para_ids)


def _ratio(units: list[CompressedUnit], doc: ManuscriptDoc) -> float:
    summary_chars = sum(len(u.summary) for u in units)
    source_chars = sum(len(unit_source_text(u, doc)) for u in units)
    return summary_chars / source_chars if source_chars else 1.0


def compress_manuscript(
    doc: ManuscriptDoc, gateway: LlmGateway, window: int = COMPRESS_WINDOW
) -> CompressedDoc:
    units: list[CompressedUnit] = []
    for index, (label, para_ids) in enumerate(group_paragraphs(doc, window), start=1):
        unit = CompressedUnit(f"u{index}", label, para_ids, summary="")
        source = unit_source_text(unit, doc)
        summary = gateway.call(
            "manuscript_compressor",
            {"section_label": label, "paragraphs": source},
            stage="compress",
        ).text.strip()
        # A summary no shorter than its source defeats the purpose; keep the
        # raw text so the ratio invariant holds.
        if not summary or len(summary) >= len(source):
            summary = source
        unit.summary = summary
        units.append(unit)
    cdoc = CompressedDoc(doc_id=doc.doc_id, units=units, compression_ratio=_ratio(units, doc))
    cdoc.validate(doc)
    return cdoc


# --- fidelity ---------------------------------------------------------------


@dataclass(frozen=True)
class Finding:
    target_id: str
    kind: str
    note: str

    def to_dict(self) -> dict:
        return {"target_id": self.target_id, "kind": self.kind, "note": self.note}


@dataclass
class CheckReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "pass" if not self.findings else "revise"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "findings": [f.to_dict() for f in self.findings]}


def _fidelity_verdict(gateway: LlmGateway, source: str, summary: str) -> tuple[bool, str, str]:
    import json

    raw = gateway.call(
        "fidelity_checker", {"source_text": source, "summary_text": summary}, stage="fidelity"
    ).text
    m = re.search(r"\{.*\}", raw, re.DOTALL)
    if not m:
        log.warning("fidelity checker returned no JSON; treating as pass")
        return True, "", ""
    try:
        data = json.loads(m.group(0))
    except json.JSONDecodeError:
        log.warning("fidelity checker returned invalid JSON; treating as pass")
        return True, "", ""
    if data.get("verdict") == "fail":
        return False, data.get("kind", "missing_claim"), data.get("note", "")
    return True, "", ""


def check_fidelity(
    cdoc: CompressedDoc,
    doc: ManuscriptDoc,
    gateway: LlmGateway,
    max_retries: int = FIDELITY_MAX_RETRIES,
) -> tuple[CompressedDoc, CheckReport]:
    report = CheckReport()
    units: list[CompressedUnit] = []
    for unit in cdoc.units:
        source = unit_source_text(unit, doc)
        if unit.summary == source:
            units.append(replace(unit, fidelity="pass"))
            continue
        summary = unit.summary
        ok = False
        for attempt in range(max_retries + 1):
            ok, kind, note = _fidelity_verdict(gateway, source, summary)
            if ok:
                break
            report.findings.append(Finding(unit.unit_id, kind, note))
            if attempt == max_retries:
                break
            retry_input = f"{source}\n\n[fidelity retry {attempt + 1}]: previous summary {kind}: {note}"
            summary = gateway.call(
                "manuscript_compressor",
                {"section_label": unit.section_label, "paragraphs": retry_input},
                stage="compress",
            ).text.strip()
            if not summary or len(summary) >= len(source):
                summary = source
                ok = True
                break
        if not ok:
            # Retries exhausted: raw text cannot lose claims.
            summary = source
        units.append(replace(unit, summary=summary, fidelity="pass"))
    out = CompressedDoc(doc_id=cdoc.doc_id, units=units, compression_ratio=_ratio(units, doc))
    out.validate(doc)
    return out, report


# --- formatting for prompts -------------------------------------------------


def format_compressed(cdoc: CompressedDoc) -> str:
    parts = []
    for u in cdoc.units:
        span = u.source_para_ids[0] if len(u.source_para_ids) == 1 else f"{u.source_para_ids[0]}-{u.source_para_ids[-1]}"
        parts.append(f"[{u.unit_id}] paras {span} ({u.section_label})\n{u.summary}")
    return "\n\n".join(parts)


def format_manuscript(doc: ManuscriptDoc) -> str:
    return "\n\n".join(f"[{p.para_id}] ({p.section_label}) {p.text}" for p in doc.paragraphs)


# --- atomic concerns --------------------------------------------------------


@dataclass(frozen=True)
class ConcernSource:
    reviewer_id: str
    segment_type: str
    type_index: int  # index among same-type segments of this reviewer (the "2" in W2)
    locator: int
    quote: str
    verified: bool = True

    def wire_ref(self) -> str:
        return f"{self.reviewer_id}-{TYPE_CODES[self.segment_type]}{self.type_index}"

    def to_dict(self) -> dict:
        return {
            "reviewer_id": self.reviewer_id,
            "segment_type": self.segment_type,
            "type_index": self.type_index,
            "locator": self.locator,
            "quote": self.quote,
            "verified": self.verified,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ConcernSource":
        return cls(
            reviewer_id=payload["reviewer_id"],
            segment_type=payload["segment_type"],
            type_index=payload["type_index"],
            locator=payload["locator"],
            quote=payload["quote"],
            verified=payload.get("verified", True),
        )


@dataclass
class AtomicConcern:
    concern_id: str
    issue: str
    sources: list[ConcernSource]
    paper_hooks: list[str]
    priority: str

    def reviewer_ids(self) -> list[str]:
        seen: list[str] = []
        for s in self.sources:
            if s.reviewer_id not in seen:
                seen.append(s.reviewer_id)
        return seen

    def to_dict(self) -> dict:
        return {
            "concern_id": self.concern_id,
            "issue": self.issue,
            "sources": [s.to_dict() for s in self.sources],
            "paper_hooks": list(self.paper_hooks),
            "priority": self.priority,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "AtomicConcern":
        return cls(
            concern_id=payload["concern_id"],
            issue=payload["issue"],
            sources=[ConcernSource.from_dict(s) for s in payload["sources"]],
            paper_hooks=list(payload["paper_hooks"]),
            priority=payload["priority"],
        )


def serialize_concerns(concerns: list[AtomicConcern]) -> str:
    blocks = []
    for c in concerns:
        sources = "; ".join(f'{s.wire_ref()} (line {s.locator}): "{s.quote}"' for s in c.sources)
        hooks = ", ".join(c.paper_hooks)
        blocks.append(
            f"[{c.concern_id}]\n"
            f"(1) Issue: {c.issue}\n"
            f"(2) Sources: {sources}\n"
            f"(3) Paper hooks: {hooks}\n"
            f"(4) Priority: {c.priority}\n"
            f"[{c.concern_id}]"
        )
    return "\n\n".join(blocks)


_BLOCK_RE = re.compile(r"\[q(\d+)\]\s*(.*?)\s*\[q\1\]", re.DOTALL)
_TAG_RE = re.compile(r"\[q\d+\]")
_FIELD_RE = re.compile(r"^\((\d)\)\s*([A-Za-z ]+?)\s*:\s*(.*)$")
_SOURCE_RE = re.compile(
    r"(R\d+)-([SWQO])(\d+)\s*\(\s*(?:line|para)\s*(\d+)\s*\)\s*:\s*\"(.*?)\"(?=\s*;|\s*$)",
    re.DOTALL,
)


def _parse_block(original_id: str, body: str, problems: list[MalformedBlock]) -> AtomicConcern | None:
    fields: dict[str, str] = {}
    current_key: str | None = None
    for line in body.splitlines():
        m = _FIELD_RE.match(line.strip())
        if m:
            current_key = m.group(2).strip().lower()
            fields[current_key] = m.group(3).strip()
        elif current_key and line.strip():
            fields[current_key] += " " + line.strip()

    issue = fields.get("issue", "").strip()
    if not issue:
        problems.append(MalformedBlock(body, f"q{original_id}: missing issue"))
        return None
    sources = []
    for m in _SOURCE_RE.finditer(fields.get("sources", "")):
        reviewer_id, code, type_index, locator, quote = m.groups()
        sources.append(
            ConcernSource(
                reviewer_id=reviewer_id,
                segment_type=CODE_TYPES[code],
                type_index=int(type_index),
                locator=int(locator),
                quote=quote,
            )
        )
    if not sources:
        problems.append(MalformedBlock(body, f"q{original_id}: no parsable sources"))
        return None
    hooks = []
    for token in fields.get("paper hooks", "").split(","):
        hook = canonical_hook(token)
        if hook and hook not in hooks:
            hooks.append(hook)
    if not hooks:
        hooks = ["Global"]
    priority_match = re.search(r"\bP([123])\b", fields.get("priority", ""))
    if not priority_match:
        problems.append(MalformedBlock(body, f"q{original_id}: missing or invalid priority"))
        return None
    return AtomicConcern(
        concern_id=f"q{original_id}",
        issue=issue,
        sources=sources,
        paper_hooks=hooks,
        priority=f"P{priority_match.group(1)}",
    )


def parse_concern_blocks_detailed(text: str) -> tuple[list[AtomicConcern], list[MalformedBlock]]:
    """Parse `[qN]...[qN]` blocks; malformed ones are collected, not fatal.

    Concern ids are renumbered densely (q1..qK) in block order; a repeated
    original id is a real model error and raises.
    """
    problems: list[MalformedBlock] = []
    concerns: list[AtomicConcern] = []
    seen_ids: set[str] = set()
    matched_spans: list[tuple[int, int]] = []
    for m in _BLOCK_RE.finditer(text):
        matched_spans.append(m.span())
        original_id = m.group(1)
        if original_id in seen_ids:
            raise DuplicateConcernId(f"q{original_id}")
        seen_ids.add(original_id)
        concern = _parse_block(original_id, m.group(2), problems)
        if concern:
            concerns.append(concern)
    for m in _TAG_RE.finditer(text):
        if not any(start <= m.start() < end for start, end in matched_spans):
            problems.append(MalformedBlock(m.group(0), "unpaired concern tag"))
    return (
        [replace_concern_id(c, f"q{i}") for i, c in enumerate(concerns, start=1)],
        problems,
    )


def replace_concern_id(concern: AtomicConcern, new_id: str) -> AtomicConcern:
    return AtomicConcern(
        concern_id=new_id,
        issue=concern.issue,
        sources=list(concern.sources),
        paper_hooks=list(concern.paper_hooks),
        priority=concern.priority,
    )


def parse_concern_blocks(text: str) -> list[AtomicConcern]:
    concerns, problems = parse_concern_blocks_detailed(text)
    for problem in problems:
        log.warning("dropped concern block: %s", problem)
    return concerns


# --- extraction and coverage ------------------------------------------------


def build_review_binding(reviews: ReviewSet, prior_rounds: str | None = None) -> str:
    text = format_reviews(reviews)
    if prior_rounds:
        return f"Previous Discussion Context:\n{prior_rounds.rstrip()}\n\nCurrent round reviews:\n{text}"
    return text


def extract_concerns(
    reviews: ReviewSet,
    cdoc: CompressedDoc,
    gateway: LlmGateway,
    prior_rounds: str | None = None,
) -> str:
    """First-pass extraction; returns the raw block text for the checker."""
    return gateway.call(
        "rebuttal_strategist",
        {
            "compressed_paper": format_compressed(cdoc),
            "review_original_text": build_review_binding(reviews, prior_rounds),
        },
        stage="extract",
    ).text


def verify_sources(concerns: list[AtomicConcern], reviews: ReviewSet) -> list[Finding]:
    """Mechanically enforce the quote-substring invariant; fix drifted locators."""
    findings: list[Finding] = []
    for concern in concerns:
        fixed: list[ConcernSource] = []
        for source in concern.sources:
            segment = find_segment(reviews, source.reviewer_id, TYPE_CODES[source.segment_type], source.type_index)
            if segment is None:
                findings.append(
                    Finding(concern.concern_id, "missed_point", f"source {source.wire_ref()} does not resolve")
                )
                fixed.append(replace(source, verified=False))
                continue
            if normalize_for_match(source.quote) not in normalize_for_match(segment.text):
                findings.append(
                    Finding(
                        concern.concern_id,
                        "missed_point",
                        f"quote not found verbatim in {source.wire_ref()}",
                    )
                )
                fixed.append(replace(source, verified=False))
                continue
            if segment.locator != source.locator:
                log.info(
                    "correcting locator for %s %s: %d -> %d",
                    concern.concern_id,
                    source.wire_ref(),
                    source.locator,
                    segment.locator,
                )
                source = replace(source, locator=segment.locator)
            fixed.append(replace(source, verified=True))
        concern.sources = fixed
    return findings


def blacklist_filter(concerns: list[AtomicConcern]) -> list[AtomicConcern]:
    kept = []
    for concern in concerns:
        if is_blacklisted(concern.issue):
            log.info("blacklist gate dropped %s: %r", concern.concern_id, concern.issue)
            continue
        kept.append(concern)
    return [replace_concern_id(c, f"q{i}") for i, c in enumerate(kept, start=1)]


def coverage_findings(concerns: list[AtomicConcern], reviews: ReviewSet) -> list[Finding]:
    """Weakness/question segments no concern quotes from; blacklisted text exempt."""
    cited: set[tuple[str, str, int]] = {
        (s.reviewer_id, s.segment_type, s.type_index) for c in concerns for s in c.sources
    }
    findings: list[Finding] = []
    for review in reviews.reviews:
        counters = {name: 0 for name in TYPE_CODES}
        for segment in review.segments:
            counters[segment.segment_type] += 1
            if segment.segment_type not in ("weakness", "question"):
                continue
            if is_blacklisted(segment.text):
                continue
            key = (review.reviewer_id, segment.segment_type, counters[segment.segment_type])
            if key not in cited:
                ref = f"{review.reviewer_id}-{TYPE_CODES[segment.segment_type]}{counters[segment.segment_type]}"
                findings.append(Finding(ref, "missed_point", f"no concern cites {ref}"))
    return findings


def check_concern_coverage(
    concerns: list[AtomicConcern],
    reviews: ReviewSet,
    cdoc: CompressedDoc,
    gateway: LlmGateway,
    prior_rounds: str | None = None,
) -> tuple[list[AtomicConcern], CheckReport]:
    """Checker pass over the student output, then mechanical validation."""
    student = serialize_concerns(concerns)
    revised_text = gateway.call(
        "rebuttal_strategist_checker",
        {
            "compressed_paper": format_compressed(cdoc),
            "review_original_text": build_review_binding(reviews, prior_rounds),
            "student_output": student,
        },
        stage="coverage",
    ).text
    revised, problems = parse_concern_blocks_detailed(revised_text)
    if not revised and concerns:
        # A checker that destroys every block is worse than the student pass.
        if problems:
            raise problems[0]
        raise MalformedBlock(revised_text[:200], "checker output contained no concern blocks")

    report = CheckReport()
    quote_findings = verify_sources(revised, reviews)
    if quote_findings:
        # One targeted re-ask naming the bad quotes, then mark unverified.
        note = "; ".join(f"{f.target_id}: {f.note}" for f in quote_findings)
        retry_text = gateway.call(
            "rebuttal_strategist_checker",
            {
                "compressed_paper": format_compressed(cdoc),
                "review_original_text": build_review_binding(reviews, prior_rounds),
                "student_output": f"{serialize_concerns(revised)}\n\n[quote problems to fix]: {note}",
            },
            stage="coverage",
        ).text
        retried, _ = parse_concern_blocks_detailed(retry_text)
        if retried:
            revised = retried
        quote_findings = verify_sources(revised, reviews)
    report.findings.extend(quote_findings)
    revised = blacklist_filter(revised)
    report.findings.extend(coverage_findings(revised, reviews))
    return revised, report
