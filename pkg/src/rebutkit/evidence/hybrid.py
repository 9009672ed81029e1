"""Concern-conditioned hybrid context: focal units raw, the rest summarized."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from ..errors import BudgetTooSmall
from ..ingest import ManuscriptDoc
from ..structuring import AtomicConcern, CompressedDoc, CompressedUnit, unit_source_text
from ..textutil import estimate_tokens, tf_cosine

log = logging.getLogger(__name__)

DEFAULT_TOKEN_BUDGET = 24_000
RELEVANCE_TOP_K = 2


@dataclass(frozen=True)
class HybridSegment:
    kind: str  # summary | raw
    unit_id: str
    source_para_ids: tuple[str, ...]
    text: str


@dataclass
class HybridContext:
    concern_id: str
    segments: list[HybridSegment]
    focal_unit_ids: set[str]
    token_budget: int
    token_estimate: int

    def to_dict(self) -> dict:
        return {
            "concern_id": self.concern_id,
            "segments": [
                {
                    "kind": s.kind,
                    "unit_id": s.unit_id,
                    "source_para_ids": list(s.source_para_ids),
                    "text": s.text,
                }
                for s in self.segments
            ],
            "focal_unit_ids": sorted(self.focal_unit_ids),
            "token_budget": self.token_budget,
            "token_estimate": self.token_estimate,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "HybridContext":
        return cls(
            concern_id=payload["concern_id"],
            segments=[
                HybridSegment(s["kind"], s["unit_id"], tuple(s["source_para_ids"]), s["text"])
                for s in payload["segments"]
            ],
            focal_unit_ids=set(payload["focal_unit_ids"]),
            token_budget=payload["token_budget"],
            token_estimate=payload["token_estimate"],
        )


def hook_matched_units(concern: AtomicConcern, cdoc: CompressedDoc, doc: ManuscriptDoc) -> list[str]:
    """Units whose paragraphs the concern's hooks anchor to, in unit order."""
    hook_para_ids: set[str] = set()
    for hook in concern.paper_hooks:
        if hook == "Global":
            continue
        hook_para_ids.update(doc.anchors.get(hook, []))
    return [u.unit_id for u in cdoc.units if hook_para_ids & set(u.source_para_ids)]


def relevance_ranking(concern: AtomicConcern, cdoc: CompressedDoc) -> dict[str, float]:
    return {u.unit_id: tf_cosine(concern.issue, u.summary) for u in cdoc.units}


def _estimate(units: list[CompressedUnit], focal: set[str], doc: ManuscriptDoc) -> int:
    total = 0
    for u in units:
        text = unit_source_text(u, doc) if u.unit_id in focal else u.summary
        total += estimate_tokens(text)
    return total


def build_hybrid_context(
    concern: AtomicConcern,
    cdoc: CompressedDoc,
    doc: ManuscriptDoc,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
    top_k: int = RELEVANCE_TOP_K,
) -> HybridContext:
    """Expand hook-matched units plus the top-k lexically relevant ones to raw
    text; drop lowest-scoring expansions (hook-matched last) if over budget."""
    floor = _estimate(cdoc.units, set(), doc)
    if token_budget < floor:
        raise BudgetTooSmall(token_budget, floor)

    hooked = hook_matched_units(concern, cdoc, doc)
    scores = relevance_ranking(concern, cdoc)
    extra = [
        unit_id
        for unit_id, _ in sorted(scores.items(), key=lambda kv: (-kv[1], int(kv[0][1:])))
        if unit_id not in hooked and scores[unit_id] > 0.0
    ][:top_k]
    focal = set(hooked) | set(extra)

    # Drop order: non-hook expansions by ascending score, then hook-matched
    # by ascending score.
    drop_order = sorted(extra, key=lambda uid: scores[uid]) + sorted(hooked, key=lambda uid: scores[uid])
    while focal and _estimate(cdoc.units, focal, doc) > token_budget:
        dropped = drop_order.pop(0)
        focal.discard(dropped)
        log.info("budget drop: %s reverts to summary for %s", dropped, concern.concern_id)

    segments = []
    for u in cdoc.units:
        if u.unit_id in focal:
            segments.append(HybridSegment("raw", u.unit_id, tuple(u.source_para_ids), unit_source_text(u, doc)))
        else:
            segments.append(HybridSegment("summary", u.unit_id, tuple(u.source_para_ids), u.summary))
    return HybridContext(
        concern_id=concern.concern_id,
        segments=segments,
        focal_unit_ids=focal,
        token_budget=token_budget,
        token_estimate=_estimate(cdoc.units, focal, doc),
    )


def format_hybrid(context: HybridContext, cdoc: CompressedDoc, doc: ManuscriptDoc) -> str:
    """Prompt rendering; raw units show per-paragraph ids so plans can cite them."""
    parts = []
    for segment in context.segments:
        unit = cdoc.unit(segment.unit_id)
        if segment.kind == "raw":
            body = "\n\n".join(f"[{pid}] {doc.paragraph(pid).text}" for pid in segment.source_para_ids)
            parts.append(f"[{segment.unit_id}] ({unit.section_label}, raw)\n{body}")
        else:
            parts.append(f"[{segment.unit_id}] ({unit.section_label}, compressed)\n{segment.text}")
    return "\n\n".join(parts)
