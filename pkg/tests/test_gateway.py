"""Template rendering, cache keys, record/replay, and retry behavior."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rebutkit.errors import MissingSlot, ProviderError, RateLimited, ReplayMiss, UnknownTemplate
from rebutkit.gateway import (
    LlmGateway,
    ModelProfile,
    PromptTemplate,
    ProviderReply,
    TokenUsage,
    cache_key_for,
    list_templates,
    load_template,
    render_prompt,
)

PROFILE = ModelProfile("testprov", "test-model", {"temperature": 0.2, "max_tokens": 2048})

# Frozen inventory: template id -> required slot names.
EXPECTED_SLOTS = {
    "rebuttal_strategist": {"compressed_paper", "review_original_text"},
    "rebuttal_strategist_checker": {"compressed_paper", "review_original_text", "student_output"},
    "literature_retrieval": {"compressed_paper", "review_question"},
    "candidate_screening": {"compressed_paper", "review_question", "query_reason", "candidate_list"},
    "reference_extractor": {"compressed_paper", "review_question", "reference_paper", "reference_url"},
    "strategy_revisor": {
        "original_paper",
        "review_question",
        "reference_summaries",
        "current_strategy",
        "human_feedback",
    },
    "letter_writer": {
        "placeholder_style",
        "original_paper",
        "review_original_text",
        "review_question",
        "rebuttal_ideas",
    },
    "unified_evaluation": {"review_text", "rebuttal_text", "context"},
    "manuscript_compressor": {"section_label", "paragraphs"},
    "fidelity_checker": {"source_text", "summary_text"},
    "plan_strategist": {"concern_block", "hybrid_context", "evidence_briefs"},
    "plan_auditor": {"concerns_text", "plans_text"},
    "sentiment_classifier": {"followup_text"},
    "baseline_rebuttal": {"paper_text", "review_text", "prior_abstract"},
    "round_summarizer": {"rebuttal_text"},
}


def ok_transport(text="ok", prompt_tokens=10, completion_tokens=5):
    calls = []

    def transport(request):
        calls.append(request)
        return ProviderReply(200, text=text, prompt_tokens=prompt_tokens, completion_tokens=completion_tokens)

    transport.calls = calls
    return transport


def scripted_status_transport(statuses):
    """Replies with the given statuses in order; 200 entries carry a body."""
    calls = []
    remaining = list(statuses)

    def transport(request):
        calls.append(request)
        status = remaining.pop(0)
        if status == 200:
            return ProviderReply(200, text="recovered", prompt_tokens=3, completion_tokens=2)
        return ProviderReply(status, body=f"err {status}")

    transport.calls = calls
    return transport


class SleepLog:
    def __init__(self):
        self.delays = []

    def __call__(self, seconds):
        self.delays.append(seconds)


# --- templates --------------------------------------------------------------


def test_template_inventory_matches_assets():
    assert set(list_templates()) == set(EXPECTED_SLOTS)
    for template_id, slots in EXPECTED_SLOTS.items():
        assert load_template(template_id).required_slots == frozenset(slots), template_id


def test_strategist_renders_with_paper_opening():
    text = render_prompt(
        "rebuttal_strategist",
        {"compressed_paper": "A summary.", "review_original_text": "R1: too slow."},
    )
    assert text.startswith("You are the **Lead Rebuttal Strategist**")
    assert "A summary." in text
    assert "R1: too slow." in text
    assert "{{" not in text


def test_zero_slot_template_renders_unchanged():
    template = PromptTemplate.from_body("static", "No slots here.")
    assert template.required_slots == frozenset()
    assert template.render({}) == "No slots here."


def test_each_missing_slot_is_reported():
    for template_id, slots in EXPECTED_SLOTS.items():
        full = {name: "x" for name in slots}
        for omitted in slots:
            partial = {k: v for k, v in full.items() if k != omitted}
            with pytest.raises(MissingSlot) as err:
                render_prompt(template_id, partial)
            assert err.value.names == [omitted]
            assert err.value.template_id == template_id


def test_unknown_template_errors():
    with pytest.raises(UnknownTemplate):
        render_prompt("no_such_template", {})


def test_substitution_is_literal():
    template = PromptTemplate.from_body("t", "value: {{v}} end")
    rendered = template.render({"v": r"a\n{b} \1 {{not_a_slot"})
    assert rendered == r"value: a\n{b} \1 {{not_a_slot end"


def test_extra_bindings_are_ignored():
    template = PromptTemplate.from_body("t", "hi {{name}}")
    assert template.render({"name": "there", "unused": "x"}) == "hi there"


# --- cache keys -------------------------------------------------------------


def test_cache_key_stable_and_sensitive():
    key1 = cache_key_for("prompt", PROFILE)
    key2 = cache_key_for("prompt", PROFILE)
    assert key1 == key2
    assert cache_key_for("prompt2", PROFILE) != key1
    other = ModelProfile("testprov", "test-model", {"temperature": 0.3})
    assert cache_key_for("prompt", other) != key1


# --- record / replay --------------------------------------------------------

_binding_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), min_size=0, max_size=80
)


@settings(max_examples=25, deadline=None)
@given(paper=_binding_text, review=_binding_text)
def test_record_then_replay_round_trip(tmp_path_factory, paper, review):
    store = tmp_path_factory.mktemp("store")
    prompt = render_prompt(
        "rebuttal_strategist",
        {"compressed_paper": paper, "review_original_text": review},
    )
    recorder = LlmGateway(PROFILE, "record", store_dir=store, transport=ok_transport(text="answer: " + paper[:10]))
    recorded = recorder.complete(prompt, stage="s")

    replayer = LlmGateway(PROFILE, "replay", store_dir=store)
    replayed = replayer.complete(prompt, stage="s")
    assert replayed == recorded
    assert replayed.cache_key == recorded.cache_key


def test_replay_miss_raises_with_key(tmp_path):
    gateway = LlmGateway(PROFILE, "replay", store_dir=tmp_path)
    with pytest.raises(ReplayMiss) as err:
        gateway.complete("never recorded")
    assert err.value.cache_key == cache_key_for("never recorded", PROFILE)


def test_replay_never_touches_transport(tmp_path):
    def forbidden(request):
        raise AssertionError("network activity in replay mode")

    recorder = LlmGateway(PROFILE, "record", store_dir=tmp_path, transport=ok_transport())
    recorder.complete("hello")

    replayer = LlmGateway(PROFILE, "replay", store_dir=tmp_path, transport=forbidden)
    completion = replayer.complete("hello")
    assert completion.text == "ok"


def test_live_mode_persists_nothing(tmp_path):
    gateway = LlmGateway(PROFILE, "live", transport=ok_transport())
    gateway.complete("hello")
    assert list(tmp_path.iterdir()) == []


# --- retries ----------------------------------------------------------------


def test_persistent_500_exhausts_retries():
    transport = scripted_status_transport([500, 500, 500])
    sleeper = SleepLog()
    gateway = LlmGateway(PROFILE, "live", transport=transport, sleeper=sleeper)
    with pytest.raises(ProviderError) as err:
        gateway.complete("p")
    assert not isinstance(err.value, RateLimited)
    assert err.value.status == 500
    assert len(transport.calls) == 3
    assert sleeper.delays == [1.0, 2.0]


def test_persistent_429_surfaces_rate_limited():
    transport = scripted_status_transport([429, 429, 429])
    sleeper = SleepLog()
    gateway = LlmGateway(PROFILE, "live", transport=transport, sleeper=sleeper)
    with pytest.raises(RateLimited):
        gateway.complete("p")
    assert sleeper.delays == [1.0, 2.0]


def test_client_error_is_not_retried():
    transport = scripted_status_transport([400])
    sleeper = SleepLog()
    gateway = LlmGateway(PROFILE, "live", transport=transport, sleeper=sleeper)
    with pytest.raises(ProviderError) as err:
        gateway.complete("p")
    assert err.value.status == 400
    assert len(transport.calls) == 1
    assert sleeper.delays == []


def test_transient_failure_then_recovery():
    transport = scripted_status_transport([500, 503, 200])
    gateway = LlmGateway(PROFILE, "live", transport=transport, sleeper=SleepLog())
    completion = gateway.complete("p")
    assert completion.text == "recovered"
    assert len(transport.calls) == 3


# --- token accounting -------------------------------------------------------


def test_usage_total_equals_stage_sum(tmp_path):
    gateway = LlmGateway(PROFILE, "live", transport=ok_transport(prompt_tokens=7, completion_tokens=3))
    for stage in ["compress", "compress", "extract", "plan", "draft"]:
        gateway.complete(f"prompt for {stage} {len(gateway.usage_log)}", stage=stage)
    total = gateway.usage_total()
    by_stage = gateway.usage_by_stage()
    assert total.prompt_tokens == sum(u.prompt_tokens for u in by_stage.values())
    assert total.completion_tokens == sum(u.completion_tokens for u in by_stage.values())
    assert total.total == 5 * 10
    assert set(by_stage) == {"compress", "extract", "plan", "draft"}


def test_negative_token_counts_rejected():
    with pytest.raises(ValueError):
        TokenUsage(-1, 0)
    with pytest.raises(ValueError):
        TokenUsage(0, -2)


def test_mode_validation(tmp_path):
    with pytest.raises(ValueError):
        LlmGateway(PROFILE, "stream")
    with pytest.raises(ValueError):
        LlmGateway(PROFILE, "record")
