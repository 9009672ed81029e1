"""Shared fixtures: fixture manuscript/reviews and a scriptable fake gateway."""

from __future__ import annotations

from pathlib import Path

import pytest

from rebutkit.gateway.client import Completion, TokenUsage, cache_key_for, ModelProfile
from rebutkit.gateway.templates import render_prompt
from rebutkit.ingest import parse_manuscript, parse_reviews
from rebutkit.textutil import estimate_tokens

FIXTURES = Path(__file__).parent / "fixtures"

FAKE_PROFILE = ModelProfile("fake", "fake-model", {"temperature": 0.0})

# Verdict lines registered by the acceptance suite; printed after capture ends
# so every run closes with one line per criterion.
ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for verdict, name in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{verdict}] {name}")


class FakeGateway:
    """Gateway double driven by per-template handlers.

    A handler may be a string (always returned), a list (consumed in order,
    last entry repeated), or a callable taking the bindings dict.
    """

    def __init__(self, handlers: dict | None = None, default: str = "ok"):
        self.handlers = dict(handlers or {})
        self.default = default
        self.calls: list[tuple[str, dict, str]] = []
        self.usage_log: list[dict] = []
        self.profile = FAKE_PROFILE

    def calls_for(self, template_id: str) -> list[dict]:
        return [bindings for tid, bindings, _ in self.calls if tid == template_id]

    def stages(self) -> list[str]:
        return [stage for _, _, stage in self.calls]

    def call(self, template_id: str, bindings, *, stage: str = "") -> Completion:
        prompt = render_prompt(template_id, bindings)
        self.calls.append((template_id, dict(bindings), stage or template_id))
        handler = self.handlers.get(template_id, self.default)
        if callable(handler):
            text = handler(dict(bindings))
        elif isinstance(handler, list):
            text = handler.pop(0) if len(handler) > 1 else handler[0]
        else:
            text = handler
        usage = TokenUsage(estimate_tokens(prompt), estimate_tokens(text))
        self.usage_log.append(
            {
                "stage": stage or template_id,
                "cache_key": cache_key_for(prompt, self.profile),
                "prompt_tokens": usage.prompt_tokens,
                "completion_tokens": usage.completion_tokens,
            }
        )
        return Completion(text=text, token_usage=usage, cache_key=cache_key_for(prompt, self.profile))


@pytest.fixture(scope="session")
def fixture_manuscript_text() -> str:
    return (FIXTURES / "manuscript.md").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def doc(fixture_manuscript_text):
    return parse_manuscript(fixture_manuscript_text, doc_id="fixture")


REVIEW_BLOCKS = [
    """Summary:
The paper proposes CrossMap, a layer-mapping adapter method with a mutual information objective.

Weaknesses:
- No comparison with parameter-efficient methods like LoRA is provided.
- The motivation for using mutual information in Eq. 3 is unclear to me.

Questions:
- How sensitive is CrossMap to the probe set size used in Sec.3.1?
""",
    """Summary:
Solid study of adapter placement for transfer learning.

Weaknesses:
- Missing comparison against LoRA and similar low-rank baselines.

Questions:
- Why choose MI for layer mapping instead of simpler similarity scores?
""",
]


@pytest.fixture(scope="session")
def reviews():
    return parse_reviews(REVIEW_BLOCKS)


SMALL_MANUSCRIPT = """1. Mapping

Mapping layers are assigned by a probe over frozen activations collected from a small calibration batch.

The assignment stays fixed during training and the adapter only learns residual weights.

2. Probe

Probe calibration draws a batch from the training split and records activations at every candidate depth before any adapter weight is updated.

The recorded activations feed the selection objective once per run.

3. Closing

Future work remains.

The code will be released."""

SMALL_SUMMARIES = {
    "Sec.1": "Mapping design overview.",
    "Sec.2": "Probe calibration details.",
    "Sec.3": "Closing remarks.",
}


def small_compressor(bindings):
    return SMALL_SUMMARIES[bindings["section_label"]]


@pytest.fixture(scope="session")
def small():
    from rebutkit.structuring import compress_manuscript

    doc = parse_manuscript(SMALL_MANUSCRIPT, doc_id="small")
    cdoc = compress_manuscript(doc, FakeGateway({"manuscript_compressor": small_compressor}))
    return doc, cdoc
