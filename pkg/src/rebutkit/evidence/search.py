"""Search planning and candidate retrieval for on-demand external evidence."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from ..errors import FeedParseError, NetworkError, SchemaViolation
from ..gateway.client import LlmGateway
from ..storage import extract_json_object
from ..structuring import AtomicConcern, CompressedDoc, format_compressed, serialize_concerns
from ..textutil import normalize_for_match
from .arxiv import HttpGet, fetch_link_metadata, search_arxiv

log = logging.getLogger(__name__)

GENERATED_QUERY_CAP = 4
DEFAULT_MAX_RESULTS = 10

_URL_RE = re.compile(r"https?://\S+")


@dataclass
class SearchPlan:
    need_search: bool
    queries: list[str] = field(default_factory=list)
    links: list[str] = field(default_factory=list)
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "need_search": self.need_search,
            "queries": list(self.queries),
            "links": list(self.links),
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SearchPlan":
        return cls(
            need_search=payload["need_search"],
            queries=list(payload.get("queries", [])),
            links=list(payload.get("links", [])),
            reason=payload.get("reason", ""),
        )


@dataclass(frozen=True)
class CandidatePaper:
    candidate_id: int
    title: str
    abstract: str
    url: str
    source: str  # arxiv | direct_link

    def to_dict(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "title": self.title,
            "abstract": self.abstract,
            "url": self.url,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CandidatePaper":
        return cls(
            candidate_id=payload["candidate_id"],
            title=payload["title"],
            abstract=payload["abstract"],
            url=payload["url"],
            source=payload["source"],
        )


def _coerce_plan(data: dict) -> SearchPlan:
    if not isinstance(data.get("need_search"), bool):
        raise SchemaViolation("need_search", "missing or not a boolean")
    queries = data.get("queries", [])
    links = data.get("links", [])
    if not isinstance(queries, list) or not all(isinstance(q, str) for q in queries):
        raise SchemaViolation("queries", "must be a list of strings")
    if not isinstance(links, list) or not all(isinstance(l, str) for l in links):
        raise SchemaViolation("links", "must be a list of strings")
    reason = data.get("reason", "")
    if not isinstance(reason, str):
        raise SchemaViolation("reason", "must be a string")
    return SearchPlan(need_search=data["need_search"], queries=list(queries), links=list(links), reason=reason)


def sanitize_plan(plan: SearchPlan, review_text: str) -> SearchPlan:
    """Enforce plan invariants mechanically, whatever the model produced.

    Links must appear verbatim in the review text; queries that are URLs or
    that duplicate a link are dropped (the link wins); generated queries are
    capped at 4, reviewer-quoted titles exempt.
    """
    if not plan.need_search:
        if plan.queries or plan.links:
            log.info("need_search=false: clearing %d queries, %d links", len(plan.queries), len(plan.links))
        return SearchPlan(False, [], [], plan.reason)

    normalized_review = normalize_for_match(review_text)
    links: list[str] = []
    for link in plan.links:
        link = link.strip()
        if not link:
            continue
        if link in normalized_review:
            if link not in links:
                links.append(link)
        else:
            log.warning("dropping fabricated link (not in review text): %s", link)

    reviewer_quoted: list[str] = []
    generated: list[str] = []
    for query in plan.queries:
        query = query.strip()
        if not query:
            continue
        if _URL_RE.search(query):
            log.info("dropping URL-bearing query (links carry URLs): %r", query)
            continue
        if any(link in query or query in link for link in links):
            log.info("dropping query duplicating a link: %r", query)
            continue
        if normalize_for_match(query) in normalized_review:
            reviewer_quoted.append(query)
        else:
            generated.append(query)
    if len(generated) > GENERATED_QUERY_CAP:
        log.warning("truncating %d generated queries to %d", len(generated), GENERATED_QUERY_CAP)
        generated = generated[:GENERATED_QUERY_CAP]
    return SearchPlan(True, reviewer_quoted + generated, links, plan.reason)


def plan_search(
    concern: AtomicConcern,
    cdoc: CompressedDoc,
    gateway: LlmGateway,
    review_text: str,
) -> SearchPlan:
    bindings = {
        "compressed_paper": format_compressed(cdoc),
        "review_question": serialize_concerns([concern]),
    }
    raw = gateway.call("literature_retrieval", bindings, stage="search_plan").text
    try:
        plan = _coerce_plan(extract_json_object(raw))
    except SchemaViolation as first:
        log.warning("search plan re-ask for %s: %s", concern.concern_id, first)
        retry_bindings = dict(bindings)
        retry_bindings["review_question"] += "\n\n[format reminder]: return only the strict JSON object."
        raw = gateway.call("literature_retrieval", retry_bindings, stage="search_plan").text
        plan = _coerce_plan(extract_json_object(raw))
    return sanitize_plan(plan, review_text)


def fetch_candidates(
    plan: SearchPlan,
    max_results: int = DEFAULT_MAX_RESULTS,
    http_get: HttpGet | None = None,
) -> tuple[list[CandidatePaper], list[str]]:
    """Run the plan's queries and links; degrade per-query on network trouble.

    Returns candidates with dense ids (arXiv results in query order, then
    direct links) plus run-log notes for anything skipped.
    """
    notes: list[str] = []
    gathered: list[tuple[str, str, str, str]] = []  # (title, abstract, url, source)
    for query in plan.queries:
        try:
            entries = search_arxiv(query, max_results=max_results, http_get=http_get)
        except (NetworkError, FeedParseError) as exc:
            notes.append(f"query skipped: {query!r}: {exc}")
            log.warning("query skipped: %r (%s)", query, exc)
            continue
        for entry in entries:
            gathered.append((entry["title"], entry["abstract"], entry["url"], "arxiv"))
    for link in plan.links:
        meta = fetch_link_metadata(link, http_get=http_get)
        if not meta["title"] and not meta["abstract"]:
            notes.append(f"link metadata unavailable, URL-only candidate: {link}")
        gathered.append((meta["title"], meta["abstract"], meta["url"], "direct_link"))

    candidates: list[CandidatePaper] = []
    seen_titles: set[str] = set()
    seen_urls: set[str] = set()
    for title, abstract, url, source in gathered:
        title_key = normalize_for_match(title).casefold()
        if title_key and title_key in seen_titles:
            continue
        if not title_key and url in seen_urls:
            continue
        seen_titles.add(title_key) if title_key else seen_urls.add(url)
        candidates.append(CandidatePaper(len(candidates) + 1, title, abstract, url, source))
    return candidates, notes
