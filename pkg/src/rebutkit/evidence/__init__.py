"""External evidence gathering: hybrid context, arXiv search, screening, briefs."""

from .arxiv import build_query_url, fetch_link_metadata, parse_atom_feed, search_arxiv
from .hybrid import (
    DEFAULT_TOKEN_BUDGET,
    HybridContext,
    HybridSegment,
    build_hybrid_context,
    format_hybrid,
    hook_matched_units,
)
from .screening import (
    BLANK_SENTINEL,
    BRIEF_WORD_LIMIT,
    SCREENING_CAP,
    EvidenceBrief,
    EvidenceBundle,
    ScreeningDecision,
    extract_brief,
    format_briefs,
    format_candidates,
    gather_evidence,
    screen_candidates,
)
from .search import (
    GENERATED_QUERY_CAP,
    CandidatePaper,
    SearchPlan,
    fetch_candidates,
    plan_search,
    sanitize_plan,
)

__all__ = [
    "BLANK_SENTINEL",
    "BRIEF_WORD_LIMIT",
    "DEFAULT_TOKEN_BUDGET",
    "GENERATED_QUERY_CAP",
    "SCREENING_CAP",
    "CandidatePaper",
    "EvidenceBrief",
    "EvidenceBundle",
    "HybridContext",
    "HybridSegment",
    "ScreeningDecision",
    "SearchPlan",
    "build_hybrid_context",
    "build_query_url",
    "extract_brief",
    "fetch_candidates",
    "fetch_link_metadata",
    "format_briefs",
    "format_candidates",
    "format_hybrid",
    "gather_evidence",
    "hook_matched_units",
    "parse_atom_feed",
    "plan_search",
    "sanitize_plan",
    "screen_candidates",
    "search_arxiv",
]
