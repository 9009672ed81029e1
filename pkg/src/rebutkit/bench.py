"""Benchmark toolkit: labeled thread corpus, tier stratification, baseline runs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingSignal, SchemaViolation
from .gateway.client import LlmGateway
from .judge import BatchStats, batch_stats, judge_rebuttal
from .storage import extract_json_object, read_json
from .textutil import content_terms, word_count

log = logging.getLogger(__name__)

STATUS_ORDER = ("reject", "weak_reject", "borderline", "weak_accept", "accept")
TIER2_CONFIDENCE = 0.7
TIER3_CONFIDENCE = 0.4
ABSTRACT_WORD_LIMIT = 200
CHALLENGE_SIZE = 20


@dataclass(frozen=True)
class ThreadInstance:
    """One review -> rebuttal (-> follow-up) exchange from a discussion thread."""

    instance_id: str
    paper_id: str
    reviewer_id: str
    review_text: str
    rebuttal_text: str
    followup_text: str = ""
    initial_score: float | None = None
    final_score: float | None = None
    initial_status: str = ""
    final_status: str = ""
    revision_flag: bool = False

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "paper_id": self.paper_id,
            "reviewer_id": self.reviewer_id,
            "review_text": self.review_text,
            "rebuttal_text": self.rebuttal_text,
            "followup_text": self.followup_text,
            "initial_score": self.initial_score,
            "final_score": self.final_score,
            "initial_status": self.initial_status,
            "final_status": self.final_status,
            "revision_flag": self.revision_flag,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ThreadInstance":
        return cls(
            instance_id=payload["instance_id"],
            paper_id=payload["paper_id"],
            reviewer_id=payload["reviewer_id"],
            review_text=payload["review_text"],
            rebuttal_text=payload["rebuttal_text"],
            followup_text=payload.get("followup_text", ""),
            initial_score=payload.get("initial_score"),
            final_score=payload.get("final_score"),
            initial_status=payload.get("initial_status", ""),
            final_status=payload.get("final_status", ""),
            revision_flag=bool(payload.get("revision_flag", False)),
        )


def classify_outcome(instance: ThreadInstance) -> str:
    """'positive' when the reviewer moved up, 'negative' otherwise.

    Only hard signals count: a score change, or an acceptance-status change.
    Equal on every available signal means the rebuttal did not move the
    reviewer, which is a negative example. No hard signal at all raises.
    """
    has_scores = instance.initial_score is not None and instance.final_score is not None
    if has_scores:
        if instance.final_score > instance.initial_score:
            return "positive"
        if instance.final_score < instance.initial_score:
            return "negative"
    has_status = instance.initial_status in STATUS_ORDER and instance.final_status in STATUS_ORDER
    if has_status:
        delta = STATUS_ORDER.index(instance.final_status) - STATUS_ORDER.index(instance.initial_status)
        if delta > 0:
            return "positive"
        if delta < 0:
            return "negative"
    if has_scores or has_status:
        return "negative"
    raise MissingSignal()


def stratify_tier(
    initial_score: float | None,
    final_score: float | None,
    revision_flag: bool,
    confidence: float | None,
) -> str:
    """Reliability tier for a labeled instance.

    tier1: hard outcome evidence (score moved, or a revised-review flag).
    tier2/tier3: sentiment-only label at high/medium confidence.
    rejected: nothing trustworthy enough to train or evaluate on.
    """
    if revision_flag:
        return "tier1"
    if initial_score is not None and final_score is not None and initial_score != final_score:
        return "tier1"
    if confidence is not None and confidence >= TIER2_CONFIDENCE:
        return "tier2"
    if confidence is not None and confidence >= TIER3_CONFIDENCE:
        return "tier3"
    return "rejected"


@dataclass(frozen=True)
class SentimentSignal:
    label: str
    confidence: float
    explicit_score_change: bool

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "confidence": self.confidence,
            "explicit_score_change": self.explicit_score_change,
        }


def _coerce_sentiment(data: dict) -> SentimentSignal:
    label = data.get("label")
    if label not in ("positive", "negative", "neutral"):
        raise SchemaViolation("label", f"unknown label {label!r}")
    try:
        confidence = float(data["confidence"])
    except (KeyError, TypeError, ValueError):
        raise SchemaViolation("confidence", "missing or not a number") from None
    if not 0.0 <= confidence <= 1.0:
        raise SchemaViolation("confidence", f"{confidence} outside [0, 1]")
    explicit = data.get("explicit_score_change")
    if not isinstance(explicit, bool):
        raise SchemaViolation("explicit_score_change", "must be a boolean")
    return SentimentSignal(label, confidence, explicit)


def classify_followup(followup_text: str, gateway: LlmGateway) -> SentimentSignal:
    if not followup_text.strip():
        raise MissingSignal()
    bindings = {"followup_text": followup_text}
    raw = gateway.call("sentiment_classifier", bindings, stage="sentiment").text
    try:
        return _coerce_sentiment(extract_json_object(raw))
    except SchemaViolation as first:
        log.warning("sentiment output invalid (%s); one re-ask", first)
        retry = dict(bindings)
        retry["followup_text"] += "\n\n[format reminder]: return the strict JSON object only."
        raw = gateway.call("sentiment_classifier", retry, stage="sentiment").text
        return _coerce_sentiment(extract_json_object(raw))


# --- corpus -----------------------------------------------------------------


@dataclass(frozen=True)
class LabeledInstance:
    instance: ThreadInstance
    label: str  # positive | negative

    def to_dict(self) -> dict:
        return {"instance": self.instance.to_dict(), "label": self.label}

    @classmethod
    def from_dict(cls, payload: dict) -> "LabeledInstance":
        return cls(ThreadInstance.from_dict(payload["instance"]), payload["label"])


@dataclass
class PaperGroup:
    paper_id: str
    instances: list[LabeledInstance]

    @property
    def positives(self) -> int:
        return sum(1 for li in self.instances if li.label == "positive")

    @property
    def negatives(self) -> int:
        return sum(1 for li in self.instances if li.label == "negative")

    @property
    def mixed_count(self) -> int:
        """Papers where the same rebuttal context produced both outcomes are
        the discriminative ones; min(pos, neg) measures that head-to-head depth."""
        return min(self.positives, self.negatives)

    def to_dict(self) -> dict:
        return {"paper_id": self.paper_id, "instances": [li.to_dict() for li in self.instances]}

    @classmethod
    def from_dict(cls, payload: dict) -> "PaperGroup":
        return cls(payload["paper_id"], [LabeledInstance.from_dict(li) for li in payload["instances"]])


@dataclass
class BenchCorpus:
    papers: list[PaperGroup]
    skipped: list[str] = field(default_factory=list)  # instance ids with no hard signal

    def instances(self) -> list[LabeledInstance]:
        return [li for group in self.papers for li in group.instances]

    def to_dict(self) -> dict:
        return {"papers": [g.to_dict() for g in self.papers], "skipped": list(self.skipped)}

    @classmethod
    def from_dict(cls, payload: dict) -> "BenchCorpus":
        return cls(
            papers=[PaperGroup.from_dict(g) for g in payload["papers"]],
            skipped=list(payload.get("skipped", [])),
        )


def build_corpus(
    instances: list[ThreadInstance],
    challenge_size: int = CHALLENGE_SIZE,
    min_instances: int = 0,
) -> BenchCorpus:
    """Label every instance and keep the most discriminative papers.

    Ranking: mixed_count desc, then total instance count desc, then paper_id
    asc so the cut is reproducible. Fewer papers than requested is allowed
    with a warning, never padded.
    """
    skipped: list[str] = []
    by_paper: dict[str, list[LabeledInstance]] = {}
    for instance in instances:
        try:
            label = classify_outcome(instance)
        except MissingSignal:
            skipped.append(instance.instance_id)
            continue
        by_paper.setdefault(instance.paper_id, []).append(LabeledInstance(instance, label))
    groups = [PaperGroup(paper_id, items) for paper_id, items in by_paper.items()]
    if min_instances > 0:
        groups = [g for g in groups if len(g.instances) >= min_instances]
    groups.sort(key=lambda g: (-g.mixed_count, -len(g.instances), g.paper_id))
    if len(groups) < challenge_size:
        log.warning("only %d papers available for a challenge set of %d", len(groups), challenge_size)
    return BenchCorpus(papers=groups[:challenge_size], skipped=skipped)


def corpus_stats(corpus: BenchCorpus, top_terms: int = 10) -> dict:
    labeled = corpus.instances()
    terms = content_terms(" ".join(li.instance.review_text for li in labeled))
    return {
        "papers": len(corpus.papers),
        "instances": len(labeled),
        "positive": sum(1 for li in labeled if li.label == "positive"),
        "negative": sum(1 for li in labeled if li.label == "negative"),
        "mixed_total": sum(g.mixed_count for g in corpus.papers),
        "skipped": len(corpus.skipped),
        "top_terms": terms.most_common(top_terms),
    }


def load_instances(path: Path) -> list[ThreadInstance]:
    payload = read_json(path)
    if not isinstance(payload, list):
        raise SchemaViolation("corpus", "expected a JSON list of instances")
    return [ThreadInstance.from_dict(row) for row in payload]


# --- baseline protocol ------------------------------------------------------


@dataclass(frozen=True)
class BaselineRound:
    round_index: int
    letter: str
    abstract: str

    def to_dict(self) -> dict:
        return {"round_index": self.round_index, "letter": self.letter, "abstract": self.abstract}

    @classmethod
    def from_dict(cls, payload: dict) -> "BaselineRound":
        return cls(payload["round_index"], payload["letter"], payload["abstract"])


def summarize_round(letter: str, gateway: LlmGateway) -> str:
    """Abstract under 200 words; one re-ask, then a hard cut at 199."""
    bindings = {"rebuttal_text": letter}
    abstract = gateway.call("round_summarizer", bindings, stage="bench_summary").text.strip()
    if word_count(abstract) < ABSTRACT_WORD_LIMIT:
        return abstract
    log.warning("round abstract has %d words; one re-ask", word_count(abstract))
    retry = dict(bindings)
    retry["rebuttal_text"] += f"\n\n[format reminder]: fewer than {ABSTRACT_WORD_LIMIT} words, no exceptions."
    abstract = gateway.call("round_summarizer", retry, stage="bench_summary").text.strip()
    if word_count(abstract) < ABSTRACT_WORD_LIMIT:
        return abstract
    log.warning("round abstract still over limit; truncating to %d words", ABSTRACT_WORD_LIMIT - 1)
    return " ".join(abstract.split()[: ABSTRACT_WORD_LIMIT - 1])


def run_baseline(
    paper_text: str,
    review_text: str,
    gateway: LlmGateway,
    rounds: int = 2,
) -> list[BaselineRound]:
    """Multi-round single-pass baseline; each round sees only the prior
    round's abstract, mirroring how discussion threads actually carry state."""
    out: list[BaselineRound] = []
    prior = "none"
    for round_index in range(1, rounds + 1):
        bindings = {
            "paper_text": paper_text,
            "review_text": review_text,
            "prior_abstract": prior,
        }
        letter = gateway.call("baseline_rebuttal", bindings, stage="baseline").text
        abstract = summarize_round(letter, gateway)
        out.append(BaselineRound(round_index, letter, abstract))
        prior = abstract
    return out


def score_rounds(
    review_text: str,
    rounds: list[BaselineRound],
    gateway: LlmGateway,
    repeats: int = 1,
) -> list[BatchStats]:
    """Judge each round's letter; failed judgments count as unscorable."""
    stats: list[BatchStats] = []
    for rnd in rounds:
        results = []
        for attempt in range(repeats):
            context = f"baseline round {rnd.round_index}, judgment {attempt + 1}"
            try:
                results.append(judge_rebuttal(review_text, rnd.letter, gateway, context=context))
            except Exception as exc:
                log.warning("round %d judgment %d unscorable: %s", rnd.round_index, attempt + 1, exc)
                results.append(None)
        stats.append(batch_stats(results))
    return stats
