"""Hybrid context exactness, search-plan policy, screening cap, briefs."""

from __future__ import annotations

import json
import random
import re

import pytest

from rebutkit.errors import BudgetTooSmall, FeedParseError, NetworkError, SchemaViolation
from rebutkit.evidence.arxiv import (
    build_id_url,
    build_query_url,
    fetch_link_metadata,
    parse_atom_feed,
    search_arxiv,
)
from rebutkit.evidence.hybrid import build_hybrid_context, format_hybrid, hook_matched_units
from rebutkit.evidence.screening import (
    BLANK_SENTINEL,
    SCREENING_CAP,
    EvidenceBundle,
    extract_brief,
    format_briefs,
    format_candidates,
    gather_evidence,
    screen_candidates,
)
from rebutkit.evidence.search import (
    GENERATED_QUERY_CAP,
    CandidatePaper,
    SearchPlan,
    extract_json_object,
    fetch_candidates,
    plan_search,
    sanitize_plan,
)
from rebutkit.structuring import AtomicConcern, ConcernSource, compress_manuscript, unit_source_text
from rebutkit.textutil import estimate_tokens

from conftest import FIXTURES, FakeGateway

FEED_XML = (FIXTURES / "arxiv_feed.xml").read_text(encoding="utf-8")

# The retrieval prompt's own output examples, used verbatim as parse oracles.
EXAMPLE_SEARCH_TRUE = """```json
{
  "need_search": true,
  "queries": [
    "domain adaptation segmentation Cityscapes",
    "unsupervised domain adaptation transformer baseline"
  ],
  "links": [
    "https://arxiv.org/abs/2409.13074v1",
    "https://openaccess.thecvf.com/content/ICCV2025/papers/Li_CoA-VLA_Improving_Vision-Language-Action_Models_via_Visual-Text_Chain-of-Affordance_ICCV_2025_paper.pdf"
  ],
  "reason": "Reviewer requests additional comparisons related to domain adaptation on Cityscapes and transformer baselines."
}
```"""

EXAMPLE_SEARCH_FALSE = """```json
{
  "need_search": false,
  "queries": [],
  "links": [],
  "reason": "there is no need to search, because... "
}
```"""

def first_sentence_compressor(bindings):
    paragraphs = bindings["paragraphs"].split("\n\n")
    return " ".join(p.split(". ")[0].rstrip(".") + "." for p in paragraphs if p.strip())


def make_concern(concern_id="q1", issue="why this design", hooks=("Global",), priority="P2"):
    source = ConcernSource("R1", "weakness", 1, 2, issue[:40])
    return AtomicConcern(concern_id, issue, [source], list(hooks), priority)


@pytest.fixture(scope="module")
def fixture_cdoc(doc):
    gw = FakeGateway({"manuscript_compressor": first_sentence_compressor})
    return compress_manuscript(doc, gw)


# --- arXiv client -----------------------------------------------------------


def test_query_url_exact_shape():
    assert (
        build_query_url("low rank adaptation")
        == "http://export.arxiv.org/api/query?search_query=all:%22low+rank+adaptation%22&start=0&max_results=10"
    )


def test_query_url_respects_max_results():
    assert build_query_url("x", max_results=3).endswith("&start=0&max_results=3")


def test_parse_atom_feed_fixture():
    entries = parse_atom_feed(FEED_XML)
    assert len(entries) == 3
    assert entries[0]["title"] == "Low-Rank Residual Adapters for Frozen Language Backbones"
    assert entries[0]["url"] == "http://arxiv.org/abs/2401.00001v2"
    assert entries[0]["abstract"].startswith("We study parameter-efficient transfer")
    assert "\n" not in entries[0]["abstract"]
    assert entries[1]["title"] == "Mutual Information Probes for Layer Selection in Adapter Tuning"


def test_parse_atom_feed_rejects_garbage():
    with pytest.raises(FeedParseError):
        parse_atom_feed("this is not xml")
    with pytest.raises(FeedParseError):
        parse_atom_feed("<html><body>nope</body></html>")


def test_search_arxiv_hits_exact_url():
    seen = []

    def recorder(url):
        seen.append(url)
        return 200, FEED_XML

    entries = search_arxiv("low rank adaptation", http_get=recorder)
    assert seen == [
        "http://export.arxiv.org/api/query?search_query=all:%22low+rank+adaptation%22&start=0&max_results=10"
    ]
    assert len(entries) == 3


def test_search_arxiv_retries_once_then_fails():
    replies = [(500, ""), (200, FEED_XML)]
    entries = search_arxiv("x", http_get=lambda url: replies.pop(0))
    assert len(entries) == 3

    calls = []

    def always_down(url):
        calls.append(url)
        return 503, ""

    with pytest.raises(NetworkError):
        search_arxiv("x", http_get=always_down)
    assert len(calls) == 2


def test_link_metadata_arxiv_id_path():
    seen = []

    def recorder(url):
        seen.append(url)
        return 200, FEED_XML

    meta = fetch_link_metadata("https://arxiv.org/abs/2401.00001v2", http_get=recorder)
    assert seen == [build_id_url("2401.00001v2")]
    assert meta["title"] == "Low-Rank Residual Adapters for Frozen Language Backbones"
    # original link preserved, not the API URL
    assert meta["url"] == "https://arxiv.org/abs/2401.00001v2"


def test_link_metadata_html_title_fallback():
    html = "<html><head><title>Probe  Depth | OpenReview</title></head><body></body></html>"
    meta = fetch_link_metadata("https://openreview.example/forum?id=xyz", http_get=lambda url: (200, html))
    assert meta == {"title": "Probe Depth | OpenReview", "abstract": "", "url": "https://openreview.example/forum?id=xyz"}


def test_link_metadata_degrades_to_url_only():
    def broken(url):
        raise ValueError("socket reset")

    meta = fetch_link_metadata("https://example.org/paper", http_get=broken)
    assert meta == {"title": "", "abstract": "", "url": "https://example.org/paper"}
    meta = fetch_link_metadata("https://arxiv.org/abs/2401.00001v2", http_get=broken)
    assert meta == {"title": "", "abstract": "", "url": "https://arxiv.org/abs/2401.00001v2"}


# --- search planning --------------------------------------------------------


def test_extract_json_object_fenced_and_bare():
    assert extract_json_object('noise ```json\n{"a": 1}\n``` more')["a"] == 1
    assert extract_json_object('prefix {"a": 2} suffix')["a"] == 2
    with pytest.raises(SchemaViolation):
        extract_json_object("no object here")


def test_prompt_example_search_true_parses(small):
    doc, cdoc = small
    review_text = (
        "Please compare against https://arxiv.org/abs/2409.13074v1 and "
        "https://openaccess.thecvf.com/content/ICCV2025/papers/Li_CoA-VLA_Improving_Vision-Language-Action_Models_via_Visual-Text_Chain-of-Affordance_ICCV_2025_paper.pdf"
    )
    gw = FakeGateway({"literature_retrieval": EXAMPLE_SEARCH_TRUE})
    plan = plan_search(make_concern(), cdoc, gw, review_text)
    assert plan.need_search is True
    assert plan.queries == [
        "domain adaptation segmentation Cityscapes",
        "unsupervised domain adaptation transformer baseline",
    ]
    assert len(plan.links) == 2
    assert plan.links[0] == "https://arxiv.org/abs/2409.13074v1"
    assert plan.reason.startswith("Reviewer requests")


def test_prompt_example_search_false_parses(small):
    doc, cdoc = small
    gw = FakeGateway({"literature_retrieval": EXAMPLE_SEARCH_FALSE})
    plan = plan_search(make_concern(), cdoc, gw, "minor formatting comment")
    assert plan.need_search is False
    assert plan.queries == [] and plan.links == []


def test_adversarial_seven_queries_and_fabricated_link_clamped(small):
    doc, cdoc = small
    adversarial = json.dumps(
        {
            "need_search": True,
            "queries": [f"invented topic number {i}" for i in range(7)],
            "links": ["https://arxiv.org/abs/9999.99999"],
            "reason": "cover everything",
        }
    )
    gw = FakeGateway({"literature_retrieval": adversarial})
    plan = plan_search(make_concern(), cdoc, gw, "a review that mentions no links at all")
    assert len(plan.queries) == GENERATED_QUERY_CAP
    assert plan.queries == [f"invented topic number {i}" for i in range(4)]
    assert plan.links == []


def test_reviewer_quoted_queries_exempt_from_cap():
    review_text = 'You should cite "Deep Residual Learning for Image Recognition" when discussing depth.'
    plan = SearchPlan(
        True,
        ["Deep Residual Learning for Image Recognition"] + [f"generated {i}" for i in range(6)],
        [],
        "r",
    )
    out = sanitize_plan(plan, review_text)
    assert out.queries[0] == "Deep Residual Learning for Image Recognition"
    assert len(out.queries) == 1 + GENERATED_QUERY_CAP


def test_link_wins_over_query():
    review_text = "see https://arxiv.org/abs/2401.00001v2 please"
    plan = SearchPlan(
        True,
        ["find https://arxiv.org/abs/2401.00001v2", "https://arxiv.org/abs/2401.00001v2", "adapter tuning"],
        ["https://arxiv.org/abs/2401.00001v2"],
        "r",
    )
    out = sanitize_plan(plan, review_text)
    assert out.links == ["https://arxiv.org/abs/2401.00001v2"]
    assert out.queries == ["adapter tuning"]


def test_need_search_false_forces_empty_lists():
    out = sanitize_plan(SearchPlan(False, ["leftover"], ["https://x"], "no"), "text")
    assert out.queries == [] and out.links == []


def test_generated_cap_holds_over_randomized_plans():
    rng = random.Random(20260825)
    review_text = 'The phrase "frozen backbone probes" appears here, with https://arxiv.org/abs/2312.04455v1 linked.'
    for _ in range(100):
        queries = []
        for i in range(rng.randint(0, 10)):
            kind = rng.random()
            if kind < 0.2:
                queries.append("frozen backbone probes")
            elif kind < 0.3:
                queries.append("check https://arxiv.org/abs/2312.04455v1")
            else:
                queries.append(f"generated query {rng.randint(0, 999)} term")
        links = ["https://arxiv.org/abs/2312.04455v1"] if rng.random() < 0.5 else []
        out = sanitize_plan(SearchPlan(True, queries, links, "r"), review_text)
        generated = [q for q in out.queries if q != "frozen backbone probes"]
        assert len(generated) <= GENERATED_QUERY_CAP
        assert all("http" not in q for q in out.queries)


def test_plan_search_reask_then_succeeds(small):
    doc, cdoc = small
    gw = FakeGateway({"literature_retrieval": ["not json at all", EXAMPLE_SEARCH_FALSE]})
    plan = plan_search(make_concern(), cdoc, gw, "text")
    assert plan.need_search is False
    calls = gw.calls_for("literature_retrieval")
    assert len(calls) == 2
    assert "[format reminder]" in calls[1]["review_question"]


def test_plan_search_reask_then_raises(small):
    doc, cdoc = small
    gw = FakeGateway({"literature_retrieval": ["garbage", '{"need_search": "yes"}']})
    with pytest.raises(SchemaViolation):
        plan_search(make_concern(), cdoc, gw, "text")


# --- candidate fetching -----------------------------------------------------


def test_fetch_candidates_dedup_and_dense_ids():
    html = "<html><title>Probe Depth | OpenReview</title></html>"

    def http_get(url):
        if "openreview.example" in url:
            return 200, html
        return 200, FEED_XML

    plan = SearchPlan(True, ["low rank adaptation", "adapter survey"], ["https://openreview.example/forum?id=xyz"], "r")
    candidates, notes = fetch_candidates(plan, http_get=http_get)
    # both queries return the same three entries; duplicates collapse
    assert [c.candidate_id for c in candidates] == [1, 2, 3, 4]
    assert [c.source for c in candidates] == ["arxiv", "arxiv", "arxiv", "direct_link"]
    assert candidates[3].title == "Probe Depth | OpenReview"
    assert notes == []


def test_fetch_candidates_skips_failing_query():
    def http_get(url):
        if "alpha" in url:
            raise ValueError("down")
        return 200, FEED_XML

    plan = SearchPlan(True, ["alpha topic", "beta topic"], [], "r")
    candidates, notes = fetch_candidates(plan, http_get=http_get)
    assert len(candidates) == 3
    assert len(notes) == 1 and "alpha topic" in notes[0]


def test_fetch_candidates_notes_url_only_link():
    def http_get(url):
        raise ValueError("down")

    plan = SearchPlan(True, [], ["https://example.org/paper"], "r")
    candidates, notes = fetch_candidates(plan, http_get=http_get)
    assert len(candidates) == 1
    assert candidates[0].source == "direct_link" and candidates[0].title == ""
    assert any("URL-only" in n for n in notes)


# --- screening --------------------------------------------------------------


def arxiv_cands(n, offset=0):
    return [
        CandidatePaper(offset + i, f"Paper number {offset + i} title", f"Abstract {offset + i}", f"http://x/{offset + i}", "arxiv")
        for i in range(1, n + 1)
    ]


def test_adversarial_eight_selection_rejected(small):
    doc, cdoc = small
    cands = arxiv_cands(10)
    eight = json.dumps({"selected_papers": [1, 2, 3, 4, 5, 6, 7, 8], "reason": "all good"})
    valid = json.dumps({"selected_papers": [2, 5, 9], "reason": "focused"})
    gw = FakeGateway({"candidate_screening": [eight, valid]})
    decision = screen_candidates(make_concern(), cdoc, SearchPlan(True, ["q"], [], "r"), cands, gw)
    assert decision.selected_ids == [2, 5, 9]
    calls = gw.calls_for("candidate_screening")
    assert len(calls) == 2
    assert "[format reminder]" in calls[1]["candidate_list"]


def test_stubborn_over_cap_truncated_to_six(small):
    doc, cdoc = small
    cands = arxiv_cands(10)
    eight = json.dumps({"selected_papers": [3, 1, 4, 5, 9, 2, 6, 8], "reason": "all"})
    gw = FakeGateway({"candidate_screening": eight})
    decision = screen_candidates(make_concern(), cdoc, SearchPlan(True, ["q"], [], "r"), cands, gw)
    assert decision.selected_ids == [3, 1, 4, 5, 9, 2]
    assert len(decision.selected_ids) == SCREENING_CAP


def test_unknown_ids_reask_then_raise(small):
    doc, cdoc = small
    cands = arxiv_cands(3)
    bad = json.dumps({"selected_papers": [99], "reason": "?"})
    gw = FakeGateway({"candidate_screening": bad})
    with pytest.raises(SchemaViolation):
        screen_candidates(make_concern(), cdoc, SearchPlan(True, ["q"], [], "r"), cands, gw)
    assert len(gw.calls_for("candidate_screening")) == 2


def test_direct_links_bypass_screen(small):
    doc, cdoc = small
    cands = [CandidatePaper(1, "Linked paper", "", "http://l/1", "direct_link")]
    gw = FakeGateway({})
    decision = screen_candidates(make_concern(), cdoc, SearchPlan(True, [], ["http://l/1"], "r"), cands, gw)
    assert decision.selected_ids == [1]
    assert gw.calls == []


def test_screening_cap_holds_over_randomized_trials(small):
    doc, cdoc = small
    rng = random.Random(20260825)
    concern = make_concern()
    plan = SearchPlan(True, ["q"], [], "r")
    for _ in range(50):
        n_arxiv = rng.randint(1, 12)
        n_direct = rng.randint(0, 2)
        cands = arxiv_cands(n_arxiv)
        for j in range(n_direct):
            cands.append(CandidatePaper(n_arxiv + 1 + j, f"Linked {j}", "", f"http://l/{j}", "direct_link"))

        def select_some(bindings):
            ids = [int(m) for m in re.findall(r"^\[(\d+)\]", bindings["candidate_list"], re.M)]
            return json.dumps({"selected_papers": rng.sample(ids, rng.randint(0, len(ids))), "reason": "t"})

        gw = FakeGateway({"candidate_screening": select_some})
        decision = screen_candidates(concern, cdoc, plan, cands, gw)
        from_search = [i for i in decision.selected_ids if i <= n_arxiv]
        assert len(from_search) <= SCREENING_CAP
        for j in range(n_direct):
            assert n_arxiv + 1 + j in decision.selected_ids
        assert len(decision.selected_ids) == len(set(decision.selected_ids))


def test_format_candidates_numbering():
    text = format_candidates(arxiv_cands(2))
    assert text.startswith("[1] Title: Paper number 1 title")
    assert "\n    Abstract: Abstract 2" in text
    assert "\n    URL: http://x/2" in text


# --- evidence briefs --------------------------------------------------------

GOOD_BRIEF = """1. Title: Mutual Information Probes for Layer Selection in Adapter Tuning
2. Summary: The paper predicts the best adapter insertion depth from a mutual-information probe over frozen activations, replacing grid search.
3. Relevance: Directly supports the choice of an information-theoretic probe for layer selection raised by the reviewer.
4. Citable content: Probe-selected depths match exhaustive search on 9 of 10 tasks at one tenth the cost.
5. Limitations: Results cover classification heads only.
6. URL: http://arxiv.org/abs/2312.04455v1"""


def test_extract_brief_parses_fields(small):
    doc, cdoc = small
    cand = CandidatePaper(1, "Mutual Information Probes", "An abstract.", "http://arxiv.org/abs/2312.04455v1", "arxiv")
    gw = FakeGateway({"reference_extractor": GOOD_BRIEF})
    brief = extract_brief(make_concern(), cdoc, cand, "q1-b1", gw)
    assert brief is not None
    assert brief.brief_id == "q1-b1"
    assert brief.title.startswith("Mutual Information Probes")
    assert brief.citable_content.startswith("Probe-selected depths")
    assert brief.url == "http://arxiv.org/abs/2312.04455v1"
    assert "[q1-b1] (http://arxiv.org/abs/2312.04455v1)" in format_briefs([brief])


def test_extract_brief_blank_sentinel(small):
    doc, cdoc = small
    cand = CandidatePaper(1, "Ghost paper", "x", "http://x/1", "arxiv")
    gw = FakeGateway({"reference_extractor": BLANK_SENTINEL})
    assert extract_brief(make_concern(), cdoc, cand, "q1-b1", gw) is None
    assert len(gw.calls_for("reference_extractor")) == 1


def test_extract_brief_empty_reference_skipped_without_call(small):
    doc, cdoc = small
    cand = CandidatePaper(1, "", "", "http://x/1", "direct_link")
    gw = FakeGateway({})
    assert extract_brief(make_concern(), cdoc, cand, "q1-b1", gw) is None
    assert gw.calls == []


def test_extract_brief_over_limit_reask_then_recovers(small):
    doc, cdoc = small
    cand = CandidatePaper(1, "Long paper", "x", "http://x/1", "arxiv")
    bloated = GOOD_BRIEF.replace("2. Summary: ", "2. Summary: " + "padding " * 650)
    gw = FakeGateway({"reference_extractor": [bloated, GOOD_BRIEF]})
    brief = extract_brief(make_concern(), cdoc, cand, "q1-b1", gw)
    assert brief is not None
    calls = gw.calls_for("reference_extractor")
    assert len(calls) == 2
    assert "[format reminder]" in calls[1]["reference_paper"]


def test_extract_brief_dropped_after_stubborn_overflow(small):
    doc, cdoc = small
    cand = CandidatePaper(1, "Long paper", "x", "http://x/1", "arxiv")
    bloated = GOOD_BRIEF.replace("2. Summary: ", "2. Summary: " + "padding " * 650)
    gw = FakeGateway({"reference_extractor": bloated})
    assert extract_brief(make_concern(), cdoc, cand, "q1-b1", gw) is None
    assert len(gw.calls_for("reference_extractor")) == 2


# --- hybrid context ---------------------------------------------------------


def test_hybrid_exactness_on_fixture_random_concerns(doc, fixture_cdoc):
    cdoc = fixture_cdoc
    rng = random.Random(20260825)
    hook_pool = sorted(doc.anchors)
    word_pool = sorted({w for p in doc.paragraphs for w in p.text.split() if w.isalpha()})
    floor = sum(estimate_tokens(u.summary) for u in cdoc.units)
    for trial in range(10):
        hooks = rng.sample(hook_pool, rng.randint(0, 2)) or ["Global"]
        issue = " ".join(rng.sample(word_pool, rng.randint(3, 6)))
        concern = make_concern(f"q{trial + 1}", issue=issue, hooks=hooks)
        budget = 100_000 if trial % 2 == 0 else floor + 60
        ctx = build_hybrid_context(concern, cdoc, doc, token_budget=budget)
        assert ctx.token_estimate <= budget
        for seg in ctx.segments:
            unit = cdoc.unit(seg.unit_id)
            if seg.kind == "raw":
                assert seg.text == unit_source_text(unit, doc)
                assert seg.unit_id in ctx.focal_unit_ids
            else:
                assert seg.text == unit.summary
                assert seg.unit_id not in ctx.focal_unit_ids
        if budget == 100_000:
            # generous budget keeps every hook-matched unit raw
            assert set(hook_matched_units(concern, cdoc, doc)) <= ctx.focal_unit_ids
        rendered = format_hybrid(ctx, cdoc, doc)
        for seg in ctx.segments:
            marker = "raw" if seg.kind == "raw" else "compressed"
            assert f"[{seg.unit_id}] ({cdoc.unit(seg.unit_id).section_label}, {marker})" in rendered


def test_hybrid_budget_drop_order_by_hand(small):
    doc, cdoc = small
    concern = make_concern(issue="probe calibration sensitivity check", hooks=["Sec.1"])
    u1, u2, u3 = cdoc.units

    generous = build_hybrid_context(concern, cdoc, doc, token_budget=100_000)
    assert generous.focal_unit_ids == {"u1", "u2"}

    # room for raw u1 only: the non-hook expansion u2 is dropped first
    mid_budget = (
        estimate_tokens(unit_source_text(u1, doc))
        + estimate_tokens(u2.summary)
        + estimate_tokens(u3.summary)
    )
    mid = build_hybrid_context(concern, cdoc, doc, token_budget=mid_budget)
    assert mid.focal_unit_ids == {"u1"}
    assert mid.token_estimate == mid_budget

    floor = sum(estimate_tokens(u.summary) for u in cdoc.units)
    bare = build_hybrid_context(concern, cdoc, doc, token_budget=floor)
    assert bare.focal_unit_ids == set()
    assert bare.token_estimate == floor

    with pytest.raises(BudgetTooSmall) as err:
        build_hybrid_context(concern, cdoc, doc, token_budget=floor - 1)
    assert err.value.minimum == floor


def test_hybrid_global_no_relevance_is_all_summaries(small):
    doc, cdoc = small
    concern = make_concern(issue="probe calibration", hooks=["Global"])
    ctx = build_hybrid_context(concern, cdoc, doc, top_k=0)
    assert ctx.focal_unit_ids == set()
    assert [s.kind for s in ctx.segments] == ["summary", "summary", "summary"]
    assert [s.text for s in ctx.segments] == [u.summary for u in cdoc.units]


def test_format_hybrid_shows_paragraph_ids(small):
    doc, cdoc = small
    concern = make_concern(issue="probe calibration depth", hooks=["Sec.2"])
    ctx = build_hybrid_context(concern, cdoc, doc)
    rendered = format_hybrid(ctx, cdoc, doc)
    assert "[u2] (Sec.2, raw)" in rendered
    assert "[p3] Probe calibration draws a batch" in rendered
    assert "[u3] (Sec.3, compressed)\nClosing remarks." in rendered


def test_hybrid_context_round_trip(small):
    doc, cdoc = small
    ctx = build_hybrid_context(make_concern(hooks=["Sec.1"]), cdoc, doc)
    from rebutkit.evidence.hybrid import HybridContext

    clone = HybridContext.from_dict(json.loads(json.dumps(ctx.to_dict())))
    assert clone.to_dict() == ctx.to_dict()


# --- gather_evidence --------------------------------------------------------


def test_gather_evidence_end_to_end(small):
    doc, cdoc = small
    link = "https://openreview.example/forum?id=xyz"
    review_text = f"Please compare with mutual information probes and see {link} for details."
    html = "<html><title>Probe Depth | OpenReview</title></html>"

    def http_get(url):
        if "openreview.example" in url:
            return 200, html
        return 200, FEED_XML

    plan_json = json.dumps(
        {"need_search": True, "queries": ["mutual information layer selection"], "links": [link], "reason": "compare"}
    )
    screen_json = json.dumps({"selected_papers": [1, 2], "reason": "on topic"})
    gw = FakeGateway(
        {
            "literature_retrieval": plan_json,
            "candidate_screening": screen_json,
            "reference_extractor": GOOD_BRIEF,
        }
    )
    concern = make_concern(issue="compare with mutual information probes", hooks=["Sec.2"])
    bundle = gather_evidence(concern, doc, cdoc, gw, review_text, http_get=http_get)

    assert bundle.concern_id == "q1"
    assert bundle.plan.links == [link]
    assert [c.source for c in bundle.candidates] == ["arxiv", "arxiv", "arxiv", "direct_link"]
    # screen picked 1 and 2; the reviewer link (4) bypasses the screen
    assert bundle.decision.selected_ids == [1, 2, 4]
    assert [b.brief_id for b in bundle.briefs] == ["q1-b1", "q1-b2", "q1-b3"]
    assert bundle.context.focal_unit_ids >= {"u2"}
    assert gw.stages().count("screening") == 1

    clone = EvidenceBundle.from_dict(json.loads(json.dumps(bundle.to_dict())))
    assert clone.to_dict() == bundle.to_dict()


def test_gather_evidence_no_search_short_circuits(small):
    doc, cdoc = small
    gw = FakeGateway({"literature_retrieval": EXAMPLE_SEARCH_FALSE})
    bundle = gather_evidence(make_concern(), doc, cdoc, gw, "minor wording issue")
    assert bundle.plan.need_search is False
    assert bundle.candidates == [] and bundle.briefs == [] and bundle.decision is None
    assert gw.calls_for("candidate_screening") == []
