"""Candidate screening and evidence-brief extraction."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ..errors import SchemaViolation
from ..gateway.client import LlmGateway
from ..ingest import ManuscriptDoc
from ..structuring import AtomicConcern, CompressedDoc, format_compressed, serialize_concerns
from ..textutil import word_count
from .arxiv import HttpGet
from .hybrid import HybridContext, build_hybrid_context
from .search import CandidatePaper, SearchPlan, extract_json_object, fetch_candidates, plan_search

log = logging.getLogger(__name__)

SCREENING_CAP = 6
BRIEF_WORD_LIMIT = 600
BLANK_SENTINEL = "This reference is blank. Please skip it"

_BRIEF_FIELDS = (
    "title",
    "summary_paragraph",
    "relevance_to_concern",
    "citable_content",
    "limitations",
    "url",
)

_FIELD_LABELS = {
    "title": {"title"},
    "summary_paragraph": {"summary", "summary paragraph"},
    "relevance_to_concern": {"relevance", "relevance to concern", "relevance to the concern"},
    "citable_content": {"citable content", "citable"},
    "limitations": {"limitations", "limitation"},
    "url": {"url", "link"},
}


@dataclass
class ScreeningDecision:
    selected_ids: list[int]
    reason: str = ""

    def to_dict(self) -> dict:
        return {"selected_ids": list(self.selected_ids), "reason": self.reason}

    @classmethod
    def from_dict(cls, payload: dict) -> "ScreeningDecision":
        return cls(selected_ids=list(payload["selected_ids"]), reason=payload.get("reason", ""))


@dataclass
class EvidenceBrief:
    brief_id: str
    title: str
    summary_paragraph: str
    relevance_to_concern: str
    citable_content: str
    limitations: str
    url: str

    def body_word_count(self) -> int:
        return sum(
            word_count(getattr(self, name))
            for name in ("title", "summary_paragraph", "relevance_to_concern", "citable_content", "limitations")
        )

    def to_text(self) -> str:
        return (
            f"1. Title: {self.title}\n"
            f"2. Summary: {self.summary_paragraph}\n"
            f"3. Relevance: {self.relevance_to_concern}\n"
            f"4. Citable content: {self.citable_content}\n"
            f"5. Limitations: {self.limitations}\n"
            f"6. URL: {self.url}"
        )

    def to_dict(self) -> dict:
        return {
            "brief_id": self.brief_id,
            "title": self.title,
            "summary_paragraph": self.summary_paragraph,
            "relevance_to_concern": self.relevance_to_concern,
            "citable_content": self.citable_content,
            "limitations": self.limitations,
            "url": self.url,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "EvidenceBrief":
        return cls(**{k: payload[k] for k in ("brief_id",) + _BRIEF_FIELDS})


@dataclass
class EvidenceBundle:
    """Everything gathered for one concern, ready for planning."""

    concern_id: str
    context: HybridContext
    plan: SearchPlan
    candidates: list[CandidatePaper] = field(default_factory=list)
    decision: ScreeningDecision | None = None
    briefs: list[EvidenceBrief] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "concern_id": self.concern_id,
            "context": self.context.to_dict(),
            "plan": self.plan.to_dict(),
            "candidates": [c.to_dict() for c in self.candidates],
            "decision": self.decision.to_dict() if self.decision else None,
            "briefs": [b.to_dict() for b in self.briefs],
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "EvidenceBundle":
        return cls(
            concern_id=payload["concern_id"],
            context=HybridContext.from_dict(payload["context"]),
            plan=SearchPlan.from_dict(payload["plan"]),
            candidates=[CandidatePaper.from_dict(c) for c in payload.get("candidates", [])],
            decision=ScreeningDecision.from_dict(payload["decision"]) if payload.get("decision") else None,
            briefs=[EvidenceBrief.from_dict(b) for b in payload.get("briefs", [])],
            notes=list(payload.get("notes", [])),
        )


def format_candidates(candidates: list[CandidatePaper]) -> str:
    lines = []
    for cand in candidates:
        lines.append(f"[{cand.candidate_id}] Title: {cand.title or '(untitled)'}")
        lines.append(f"    Abstract: {cand.abstract or '(none)'}")
        lines.append(f"    URL: {cand.url}")
    return "\n".join(lines)


def _coerce_decision(data: dict, valid_ids: set[int]) -> ScreeningDecision:
    selected = data.get("selected_papers")
    if not isinstance(selected, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in selected):
        raise SchemaViolation("selected_papers", "must be a list of integers")
    out_of_range = [i for i in selected if i not in valid_ids]
    if out_of_range:
        raise SchemaViolation("selected_papers", f"unknown candidate ids: {sorted(out_of_range)}")
    deduped: list[int] = []
    for i in selected:
        if i not in deduped:
            deduped.append(i)
    reason = data.get("reason", "")
    if not isinstance(reason, str):
        raise SchemaViolation("reason", "must be a string")
    return ScreeningDecision(selected_ids=deduped, reason=reason)


def screen_candidates(
    concern: AtomicConcern,
    cdoc: CompressedDoc,
    plan: SearchPlan,
    candidates: list[CandidatePaper],
    gateway: LlmGateway,
) -> ScreeningDecision:
    """Pick at most 6 search hits; reviewer-provided links bypass the screen."""
    bypass_ids = [c.candidate_id for c in candidates if c.source == "direct_link"]
    screened = [c for c in candidates if c.source == "arxiv"]
    if not screened:
        return ScreeningDecision(selected_ids=bypass_ids, reason="reviewer-provided links only")

    bindings = {
        "compressed_paper": format_compressed(cdoc),
        "review_question": serialize_concerns([concern]),
        "query_reason": plan.reason,
        "candidate_list": format_candidates(screened),
    }
    valid_ids = {c.candidate_id for c in screened}
    raw = gateway.call("candidate_screening", bindings, stage="screening").text
    decision = None
    try:
        decision = _coerce_decision(extract_json_object(raw), valid_ids)
        if len(decision.selected_ids) > SCREENING_CAP:
            raise SchemaViolation("selected_papers", f"{len(decision.selected_ids)} selections exceed cap {SCREENING_CAP}")
    except SchemaViolation as first:
        log.warning("screening re-ask for %s: %s", concern.concern_id, first)
        retry_bindings = dict(bindings)
        retry_bindings["candidate_list"] += (
            f"\n\n[format reminder]: select at most {SCREENING_CAP} papers, listed ids only, strict JSON."
        )
        raw = gateway.call("candidate_screening", retry_bindings, stage="screening").text
        decision = _coerce_decision(extract_json_object(raw), valid_ids)
        if len(decision.selected_ids) > SCREENING_CAP:
            log.warning(
                "screening still over cap after re-ask (%d); truncating to %d",
                len(decision.selected_ids),
                SCREENING_CAP,
            )
            decision = ScreeningDecision(decision.selected_ids[:SCREENING_CAP], decision.reason)
    decision.selected_ids = decision.selected_ids + [i for i in bypass_ids if i not in decision.selected_ids]
    return decision


def _parse_brief_fields(text: str) -> dict[str, str] | None:
    """Parse the 6 numbered brief fields; None means unusable output."""
    values: dict[str, str] = {}
    current: str | None = None
    for line in text.splitlines():
        stripped = line.strip()
        matched = False
        for idx, name in enumerate(_BRIEF_FIELDS, start=1):
            prefix = f"{idx}."
            if stripped.startswith(prefix):
                current = name
                values[name] = stripped[len(prefix):].lstrip()
                # drop a leading "Title:" style label when present
                head, sep, tail = values[name].partition(":")
                if sep and head.strip().lower() in _FIELD_LABELS[name]:
                    values[name] = tail.strip()
                matched = True
                break
        if not matched and current and stripped:
            values[current] += " " + stripped
    if set(values) != set(_BRIEF_FIELDS):
        return None
    return values


def extract_brief(
    concern: AtomicConcern,
    cdoc: CompressedDoc,
    candidate: CandidatePaper,
    brief_id: str,
    gateway: LlmGateway,
) -> EvidenceBrief | None:
    """Summarize one reference; None when the reference is blank or unusable."""
    reference_paper = "\n\n".join(part for part in (candidate.title, candidate.abstract) if part)
    if not reference_paper.strip():
        log.info("skipping blank reference %s (%s)", brief_id, candidate.url)
        return None
    bindings = {
        "compressed_paper": format_compressed(cdoc),
        "review_question": serialize_concerns([concern]),
        "reference_paper": reference_paper,
        "reference_url": candidate.url,
    }
    raw = gateway.call("reference_extractor", bindings, stage="briefs").text
    if BLANK_SENTINEL.lower() in raw.lower():
        log.info("extractor reported blank reference %s", brief_id)
        return None
    fields = _parse_brief_fields(raw)
    over = fields is not None and sum(word_count(fields[n]) for n in _BRIEF_FIELDS[:5]) > BRIEF_WORD_LIMIT
    if fields is None or over:
        why = "unparseable" if fields is None else f"over {BRIEF_WORD_LIMIT} words"
        log.warning("brief %s %s; one re-ask", brief_id, why)
        retry_bindings = dict(bindings)
        retry_bindings["reference_paper"] += (
            f"\n\n[format reminder]: six numbered fields, at most {BRIEF_WORD_LIMIT} words total."
        )
        raw = gateway.call("reference_extractor", retry_bindings, stage="briefs").text
        if BLANK_SENTINEL.lower() in raw.lower():
            return None
        fields = _parse_brief_fields(raw)
        if fields is None or sum(word_count(fields[n]) for n in _BRIEF_FIELDS[:5]) > BRIEF_WORD_LIMIT:
            log.warning("brief %s dropped after re-ask", brief_id)
            return None
    return EvidenceBrief(
        brief_id=brief_id,
        title=fields["title"],
        summary_paragraph=fields["summary_paragraph"],
        relevance_to_concern=fields["relevance_to_concern"],
        citable_content=fields["citable_content"],
        limitations=fields["limitations"],
        url=fields["url"] or candidate.url,
    )


def format_briefs(briefs: list[EvidenceBrief]) -> str:
    chunks = [f"[{b.brief_id}] ({b.url})\n{b.to_text()}" for b in briefs]
    return "\n\n".join(chunks)


def gather_evidence(
    concern: AtomicConcern,
    doc: ManuscriptDoc,
    cdoc: CompressedDoc,
    gateway: LlmGateway,
    review_text: str,
    token_budget: int | None = None,
    http_get: HttpGet | None = None,
) -> EvidenceBundle:
    """Run the whole per-concern evidence pipeline: context, search, screen, briefs."""
    kwargs = {} if token_budget is None else {"token_budget": token_budget}
    context = build_hybrid_context(concern, cdoc, doc, **kwargs)
    plan = plan_search(concern, cdoc, gateway, review_text)
    bundle = EvidenceBundle(concern_id=concern.concern_id, context=context, plan=plan)
    if not plan.need_search:
        return bundle
    candidates, notes = fetch_candidates(plan, http_get=http_get)
    bundle.candidates = candidates
    bundle.notes.extend(notes)
    if not candidates:
        return bundle
    bundle.decision = screen_candidates(concern, cdoc, plan, candidates, gateway)
    by_id = {c.candidate_id: c for c in candidates}
    seq = 0
    for cid in bundle.decision.selected_ids:
        seq += 1
        brief = extract_brief(concern, cdoc, by_id[cid], f"{concern.concern_id}-b{seq}", gateway)
        if brief is None:
            seq -= 1
            continue
        bundle.briefs.append(brief)
    return bundle
