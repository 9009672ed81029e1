"""Nine-component rubric judge: strict score grid, exact aggregation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

from .errors import IllegalUpgrade, MissingComponent, OffGrid, SchemaViolation
from .gateway.client import LlmGateway
from .storage import extract_json_object

log = logging.getLogger(__name__)

COMPONENT_GROUPS: dict[str, tuple[str, ...]] = {
    "R": ("R1_coverage", "R2_semantic_alignment", "R3_specificity"),
    "A": ("A1_logic_consistency", "A2_evidence_support", "A3_response_engagement"),
    "C": ("C1_professional_tone", "C2_clarity", "C3_constructiveness"),
}
ALL_COMPONENTS: tuple[str, ...] = sum(COMPONENT_GROUPS.values(), ())

# Integers 0-5 plus the two sanctioned upgrade marks. Nothing else is a score.
LEGAL_GRID: frozenset[Fraction] = frozenset(
    [Fraction(n) for n in range(6)] + [Fraction(7, 2), Fraction(9, 2)]
)
# Half steps that look like upgrades applied where the rubric forbids them.
ILLEGAL_UPGRADES: frozenset[Fraction] = frozenset(
    [Fraction(1, 2), Fraction(3, 2), Fraction(5, 2), Fraction(11, 2)]
)

_GROUP_KEYS = {"R": "R_scores", "A": "A_scores", "C": "C_scores"}


def coerce_score(key: str, value) -> Fraction:
    """Grid membership check; the error type tells the caller what went wrong."""
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise OffGrid(key, value)
    try:
        fraction = Fraction(str(value))
    except (ValueError, ZeroDivisionError):
        raise OffGrid(key, value) from None
    if fraction in LEGAL_GRID:
        return fraction
    if fraction in ILLEGAL_UPGRADES:
        raise IllegalUpgrade(key, value)
    raise OffGrid(key, value)


@dataclass
class JudgeScores:
    scores: dict[str, Fraction]
    warnings: tuple[str, ...] = ()
    explanation: str = ""

    def component_mean(self, group: str) -> Fraction:
        keys = COMPONENT_GROUPS[group]
        return sum(self.scores[k] for k in keys) / Fraction(len(keys))

    def final(self) -> Fraction:
        return sum(self.component_mean(g) for g in COMPONENT_GROUPS) / Fraction(3)

    def summary(self) -> dict[str, str]:
        parts = {g: display(self.component_mean(g)) for g in COMPONENT_GROUPS}
        parts["final"] = display(self.final())
        return parts

    def to_dict(self) -> dict:
        return {
            "scores": {k: str(v) for k, v in self.scores.items()},
            "warnings": list(self.warnings),
            "explanation": self.explanation,
            "summary": self.summary(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "JudgeScores":
        return cls(
            scores={k: Fraction(v) for k, v in payload["scores"].items()},
            warnings=tuple(payload.get("warnings", [])),
            explanation=payload.get("explanation", ""),
        )


def display(value: Fraction) -> str:
    """Two-decimal half-up rendering, e.g. 71/18 -> '3.94'."""
    decimal = Decimal(value.numerator) / Decimal(value.denominator)
    return str(decimal.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def validate_scores(raw: dict) -> dict[str, Fraction]:
    """All nine components present and on the grid, or a typed error."""
    merged: dict = {}
    for group, group_key in _GROUP_KEYS.items():
        block = raw.get(group_key)
        if not isinstance(block, dict):
            raise MissingComponent(group_key)
        merged.update(block)
    scores: dict[str, Fraction] = {}
    for key in ALL_COMPONENTS:
        if key not in merged:
            raise MissingComponent(key)
        scores[key] = coerce_score(key, merged[key])
    return scores


def parse_judge_output(text: str) -> JudgeScores:
    data = extract_json_object(text)
    scores = validate_scores(data)
    warnings = data.get("quality_warnings", data.get("red_flags", []))
    if not isinstance(warnings, list):
        warnings = []
    explanation = data.get("explanation", "")
    if not isinstance(explanation, str):
        explanation = ""
    return JudgeScores(scores=scores, warnings=tuple(str(w) for w in warnings), explanation=explanation)


def judge_rebuttal(
    review_text: str,
    rebuttal_text: str,
    gateway: LlmGateway,
    context: str = "",
) -> JudgeScores:
    bindings = {
        "review_text": review_text,
        "rebuttal_text": rebuttal_text,
        "context": context or "none",
    }
    raw = gateway.call("unified_evaluation", bindings, stage="judge").text
    try:
        return parse_judge_output(raw)
    except (SchemaViolation, MissingComponent, OffGrid, IllegalUpgrade) as first:
        log.warning("judge output invalid (%s); one re-ask", first)
        retry = dict(bindings)
        retry["context"] = (retry["context"] + "\n\n[format reminder]: return the strict JSON scores object only.")
        raw = gateway.call("unified_evaluation", retry, stage="judge").text
        return parse_judge_output(raw)


@dataclass
class BatchStats:
    total: int
    unscorable: int
    mean_scores: dict[str, Fraction] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"total": self.total, "scored": self.total - self.unscorable, "unscorable": self.unscorable}
        out["means"] = {k: display(v) for k, v in self.mean_scores.items()}
        return out


def batch_stats(results: list[JudgeScores | None]) -> BatchStats:
    """Aggregate repeated judgments; failed parses count as unscorable.

    Means are sums over the scored subset, so ordering cannot matter.
    """
    scored = [r for r in results if r is not None]
    stats = BatchStats(total=len(results), unscorable=len(results) - len(scored))
    if not scored:
        return stats
    n = Fraction(len(scored))
    for group in COMPONENT_GROUPS:
        stats.mean_scores[group] = sum(r.component_mean(group) for r in scored) / n
    stats.mean_scores["final"] = sum(r.final() for r in scored) / n
    return stats
