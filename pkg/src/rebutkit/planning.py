"""Response planning: per-concern strategy blocks, mechanical checks, revision."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .errors import MalformedBlock
from .evidence.screening import EvidenceBundle, format_briefs
from .gateway.client import LlmGateway
from .storage import extract_json_object
from .ingest import ManuscriptDoc
from .structuring import (
    AtomicConcern,
    CheckReport,
    CompressedDoc,
    Finding,
    format_compressed,
    serialize_concerns,
)
from .evidence.hybrid import format_hybrid
from .textutil import known_numerals, numeral_tokens

log = logging.getLogger(__name__)

PLAN_KINDS = ("interpretative_defense", "intervention")

# Concern phrasings that demand new work rather than a pointer to existing text.
INTERVENTION_TRIGGERS = (
    "compare with",
    "compare against",
    "comparison with",
    "ablation",
    "baseline",
    "additional experiment",
)

# Findings the strategist gets one shot at repairing before human review.
REPAIRABLE_KINDS = frozenset(
    {"unsupported_claim", "wrong_strategy", "scope_creep", "unsafe_commitment", "broken_link"}
)

_PLAN_BLOCK_RE = re.compile(r"\[plan q(\d+)\]\s*(.*?)\s*\[plan q\1\]", re.DOTALL)
_PLAN_TAG_RE = re.compile(r"\[plan q\d+\]")
_PLAN_FIELD_RE = re.compile(r"^\((\d)\)\s*([A-Za-z ]+?)\s*:\s*(.*)$")
_EVIDENCE_REF_RE = re.compile(r"\b(internal|external)\s*:\s*([A-Za-z0-9_.-]+)")

_SCHEDULE_RE = re.compile(
    r"(?:\bday\s*\d+\b)"
    r"|(?:<\s*\d+\s*(?:day|week|hour)s?\b)"
    r"|(?:\b(?:strictly\s+)?(?:less\s+than|within|under|at\s+most|in)\s+\d+\s+(?:day|week|hour)s?\b)"
    r"|(?:\b\d+\s*(?:day|week|hour)s?\b)",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class ActionItem:
    description: str
    rationale: str = ""
    scope: str = ""

    def to_wire(self) -> str:
        return f"- {self.description} | rationale: {self.rationale} | scope: {self.scope}"

    def to_dict(self) -> dict:
        return {"description": self.description, "rationale": self.rationale, "scope": self.scope}

    @classmethod
    def from_dict(cls, payload: dict) -> "ActionItem":
        return cls(payload["description"], payload.get("rationale", ""), payload.get("scope", ""))


@dataclass
class ConcernPlan:
    concern_id: str
    kind: str
    argument: str
    internal_refs: list[str] = field(default_factory=list)
    external_refs: list[str] = field(default_factory=list)
    action_items: list[ActionItem] = field(default_factory=list)
    deliverables: list[str] = field(default_factory=list)
    feasibility: str = ""

    def to_dict(self) -> dict:
        return {
            "concern_id": self.concern_id,
            "kind": self.kind,
            "argument": self.argument,
            "internal_refs": list(self.internal_refs),
            "external_refs": list(self.external_refs),
            "action_items": [a.to_dict() for a in self.action_items],
            "deliverables": list(self.deliverables),
            "feasibility": self.feasibility,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ConcernPlan":
        return cls(
            concern_id=payload["concern_id"],
            kind=payload["kind"],
            argument=payload["argument"],
            internal_refs=list(payload.get("internal_refs", [])),
            external_refs=list(payload.get("external_refs", [])),
            action_items=[ActionItem.from_dict(a) for a in payload.get("action_items", [])],
            deliverables=list(payload.get("deliverables", [])),
            feasibility=payload.get("feasibility", ""),
        )


@dataclass
class PlanRevision:
    version: int
    plans: list[ConcernPlan]
    provenance: str  # system | human_feedback
    author_feedback: str = ""

    def plan_for(self, concern_id: str) -> ConcernPlan | None:
        for plan in self.plans:
            if plan.concern_id == concern_id:
                return plan
        return None

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "plans": [p.to_dict() for p in self.plans],
            "provenance": self.provenance,
            "author_feedback": self.author_feedback,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PlanRevision":
        return cls(
            version=payload["version"],
            plans=[ConcernPlan.from_dict(p) for p in payload["plans"]],
            provenance=payload["provenance"],
            author_feedback=payload.get("author_feedback", ""),
        )


# --- wire format ------------------------------------------------------------


def serialize_plans(plans: list[ConcernPlan]) -> str:
    blocks = []
    for p in plans:
        refs = [f"internal:{r}" for r in p.internal_refs] + [f"external:{r}" for r in p.external_refs]
        evidence = "; ".join(refs) if refs else "none"
        items = "".join(f"\n{a.to_wire()}" for a in p.action_items)
        blocks.append(
            f"[plan {p.concern_id}]\n"
            f"(1) Strategy: {p.kind}\n"
            f"(2) Argument: {p.argument}\n"
            f"(3) Evidence: {evidence}\n"
            f"(4) Action items:{items}\n"
            f"(5) Deliverables: {'; '.join(p.deliverables)}\n"
            f"(6) Feasibility: {p.feasibility}\n"
            f"[plan {p.concern_id}]"
        )
    return "\n\n".join(blocks)


def _parse_action_item(line: str) -> ActionItem:
    parts = [p.strip() for p in line.lstrip("-").strip().split("|")]
    description = parts[0]
    rationale = scope = ""
    for part in parts[1:]:
        low = part.lower()
        if low.startswith("rationale:"):
            rationale = part.partition(":")[2].strip()
        elif low.startswith("scope:"):
            scope = part.partition(":")[2].strip()
        elif description:
            description += " | " + part
    return ActionItem(description, rationale, scope)


def _normalize_kind(raw: str) -> str:
    token = raw.strip().lower().replace(" ", "_")
    if token in ("interpretive_defense", "defense", "interpretative_defence"):
        return "interpretative_defense"
    return token


def _parse_plan_body(plan_id: str, body: str, problems: list[MalformedBlock]) -> ConcernPlan | None:
    fields: dict[str, list[str]] = {}
    current_key: str | None = None
    for line in body.splitlines():
        m = _PLAN_FIELD_RE.match(line.strip())
        if m:
            current_key = m.group(2).strip().lower()
            fields[current_key] = [m.group(3).strip()] if m.group(3).strip() else []
        elif current_key and line.strip():
            fields[current_key].append(line.strip())

    kind = _normalize_kind(" ".join(fields.get("strategy", [])))
    if kind not in PLAN_KINDS:
        problems.append(MalformedBlock(body, f"{plan_id}: unknown strategy {kind!r}"))
        return None
    argument = " ".join(fields.get("argument", [])).strip()
    if not argument:
        problems.append(MalformedBlock(body, f"{plan_id}: missing argument"))
        return None

    internal: list[str] = []
    external: list[str] = []
    evidence_text = " ".join(fields.get("evidence", []))
    if evidence_text.strip().lower() != "none":
        for m in _EVIDENCE_REF_RE.finditer(evidence_text):
            target = internal if m.group(1) == "internal" else external
            if m.group(2) not in target:
                target.append(m.group(2))

    items = [_parse_action_item(line) for line in fields.get("action items", []) if line.startswith("-")]
    deliverables = [d.strip() for d in " ".join(fields.get("deliverables", [])).split(";") if d.strip()]
    feasibility = " ".join(fields.get("feasibility", [])).strip()
    return ConcernPlan(
        concern_id=plan_id,
        kind=kind,
        argument=argument,
        internal_refs=internal,
        external_refs=external,
        action_items=items,
        deliverables=deliverables,
        feasibility=feasibility,
    )


def parse_plan_blocks_detailed(text: str) -> tuple[list[ConcernPlan], list[MalformedBlock]]:
    """Parse `[plan qN]...[plan qN]` blocks; ids are kept, not renumbered,
    because they must line up with existing concern ids."""
    problems: list[MalformedBlock] = []
    plans: list[ConcernPlan] = []
    matched_spans: list[tuple[int, int]] = []
    for m in _PLAN_BLOCK_RE.finditer(text):
        matched_spans.append(m.span())
        plan = _parse_plan_body(f"q{m.group(1)}", m.group(2), problems)
        if plan:
            plans.append(plan)
    for m in _PLAN_TAG_RE.finditer(text):
        if not any(start <= m.start() < end for start, end in matched_spans):
            problems.append(MalformedBlock(m.group(0), "unpaired plan tag"))
    return plans, problems


def parse_plan_blocks(text: str) -> list[ConcernPlan]:
    plans, problems = parse_plan_blocks_detailed(text)
    for problem in problems:
        log.warning("dropped malformed plan block: %s", problem.reason)
    return plans


# --- mechanical gates -------------------------------------------------------


def schedule_phrase(text: str) -> str | None:
    m = _SCHEDULE_RE.search(text)
    return m.group(0) if m else None


def scrub_schedules(text: str) -> str:
    cleaned = _SCHEDULE_RE.sub("", text)
    cleaned = re.sub(r"\(\s*\)", "", cleaned)
    cleaned = re.sub(r"[ \t]{2,}", " ", cleaned)
    cleaned = re.sub(r"\s+([,.;])", r"\1", cleaned)
    return cleaned.strip()


def plan_text_fields(plan: ConcernPlan) -> list[tuple[str, str]]:
    """(label, text) pairs for every prose field of the plan, for gating."""
    pairs = [("argument", plan.argument), ("feasibility", plan.feasibility)]
    for i, item in enumerate(plan.action_items, start=1):
        pairs.append((f"action item {i}", f"{item.description} | {item.rationale} | {item.scope}"))
    for i, deliverable in enumerate(plan.deliverables, start=1):
        pairs.append((f"deliverable {i}", deliverable))
    return pairs


def wants_intervention(concern: AtomicConcern) -> bool:
    text = " ".join([concern.issue] + [s.quote for s in concern.sources]).lower()
    return any(trigger in text for trigger in INTERVENTION_TRIGGERS)


def novel_argument_numerals(
    plan: ConcernPlan, known: set[str]
) -> list[str]:
    return sorted({m.value for m in numeral_tokens(plan.argument) if m.value not in known})


def known_numeral_pool(
    doc: ManuscriptDoc,
    review_text: str,
    concerns: list[AtomicConcern],
    bundles: dict[str, EvidenceBundle],
) -> set[str]:
    briefs_text = " ".join(b.to_text() for bundle in bundles.values() for b in bundle.briefs)
    return known_numerals(doc.full_text(), review_text, serialize_concerns(concerns), briefs_text)


def check_plans(
    concerns: list[AtomicConcern],
    plans: list[ConcernPlan],
    bundles: dict[str, EvidenceBundle],
    doc: ManuscriptDoc,
    gateway: LlmGateway,
    review_text: str,
) -> CheckReport:
    """Mechanical gates first, then the LLM audit; both feed one report."""
    findings: list[Finding] = []
    plan_ids = [p.concern_id for p in plans]
    concern_ids = {c.concern_id for c in concerns}
    known = known_numeral_pool(doc, review_text, concerns, bundles)

    for concern in concerns:
        if concern.concern_id not in plan_ids:
            findings.append(Finding(concern.concern_id, "coverage_gap", "concern has no plan"))
    seen: set[str] = set()
    for plan in plans:
        if plan.concern_id in seen:
            findings.append(Finding(plan.concern_id, "contradiction", "duplicate plan for one concern"))
            continue
        seen.add(plan.concern_id)
        if plan.concern_id not in concern_ids:
            findings.append(Finding(plan.concern_id, "broken_link", "plan targets no known concern"))
            continue
        bundle = bundles.get(plan.concern_id)

        if plan.kind == "intervention" and not plan.action_items:
            findings.append(Finding(plan.concern_id, "unsafe_commitment", "intervention plan without action items"))
        if plan.kind == "interpretative_defense" and not (plan.internal_refs or plan.external_refs):
            findings.append(Finding(plan.concern_id, "unsupported_claim", "defense plan cites no evidence"))

        focal_paras: set[str] = set()
        if bundle is not None:
            for seg in bundle.context.segments:
                if seg.kind == "raw":
                    focal_paras.update(seg.source_para_ids)
        for pid in plan.internal_refs:
            if pid not in {p.para_id for p in doc.paragraphs}:
                findings.append(Finding(plan.concern_id, "broken_link", f"internal ref {pid} not in manuscript"))
            elif bundle is not None and pid not in focal_paras:
                findings.append(Finding(plan.concern_id, "broken_link", f"internal ref {pid} not shown raw in context"))
        brief_ids = {b.brief_id for b in bundle.briefs} if bundle else set()
        for bid in plan.external_refs:
            if bid not in brief_ids:
                findings.append(Finding(plan.concern_id, "broken_link", f"external ref {bid} not among retained briefs"))

        for label, text in plan_text_fields(plan):
            phrase = schedule_phrase(text)
            if phrase:
                findings.append(Finding(plan.concern_id, "unsafe_commitment", f"schedule phrase {phrase!r} in {label}"))
        novel = novel_argument_numerals(plan, known)
        if novel:
            findings.append(
                Finding(plan.concern_id, "unsupported_claim", f"argument introduces numerals {novel} with no source")
            )

    findings.extend(_audit_plans(concerns, plans, gateway))
    deduped: list[Finding] = []
    seen_keys: set[tuple[str, str, str]] = set()
    for f in findings:
        key = (f.target_id, f.kind, f.note)
        if key not in seen_keys:
            seen_keys.add(key)
            deduped.append(f)
    return CheckReport(findings=deduped)


_AUDIT_KINDS = frozenset({"unsupported_claim", "wrong_strategy", "missing_concern", "scope_creep"})


def _audit_plans(
    concerns: list[AtomicConcern], plans: list[ConcernPlan], gateway: LlmGateway
) -> list[Finding]:
    bindings = {
        "concerns_text": serialize_concerns(concerns),
        "plans_text": serialize_plans(plans),
    }
    raw = gateway.call("plan_auditor", bindings, stage="plan_check").text
    try:
        data = extract_json_object(raw)
        rows = data["findings"]
        assert isinstance(rows, list)
    except Exception:
        log.warning("plan audit output unusable; retrying once")
        retry = dict(bindings)
        retry["plans_text"] += "\n\n[format reminder]: return the strict JSON findings object only."
        raw = gateway.call("plan_auditor", retry, stage="plan_check").text
        try:
            data = extract_json_object(raw)
            rows = data["findings"]
            assert isinstance(rows, list)
        except Exception:
            log.warning("plan audit skipped: output unusable after retry")
            return []
    known_ids = {c.concern_id for c in concerns} | {p.concern_id for p in plans}
    findings = []
    for row in rows:
        if not isinstance(row, dict):
            continue
        target = row.get("concern_id", "")
        kind = row.get("kind", "")
        if target not in known_ids or kind not in _AUDIT_KINDS:
            log.info("dropping audit row with unknown target/kind: %r", row)
            continue
        mapped = "coverage_gap" if kind == "missing_concern" else kind
        findings.append(Finding(target, mapped, str(row.get("detail", ""))))
    return findings


# --- strategist calls -------------------------------------------------------


def _strategist_call(
    concern: AtomicConcern,
    bundle: EvidenceBundle,
    doc: ManuscriptDoc,
    cdoc: CompressedDoc,
    gateway: LlmGateway,
    guidance: str = "",
) -> ConcernPlan:
    concern_block = serialize_concerns([concern])
    if guidance:
        concern_block += f"\n\n[notes to address]: {guidance}"
    bindings = {
        "concern_block": concern_block,
        "hybrid_context": format_hybrid(bundle.context, cdoc, doc),
        "evidence_briefs": format_briefs(bundle.briefs) or "none",
    }
    raw = gateway.call("plan_strategist", bindings, stage="plan").text
    plans, problems = parse_plan_blocks_detailed(raw)
    if not plans:
        log.warning("plan for %s unparseable; one re-ask", concern.concern_id)
        retry = dict(bindings)
        retry["concern_block"] += "\n\n[format reminder]: output exactly one [plan qN] block."
        raw = gateway.call("plan_strategist", retry, stage="plan").text
        plans, problems = parse_plan_blocks_detailed(raw)
        if not plans:
            raise MalformedBlock(raw[:200], f"no parsable plan for {concern.concern_id}: " + "; ".join(p.reason for p in problems))
    plan = plans[0]
    plan.concern_id = concern.concern_id
    return plan


def strategize_one(
    concern: AtomicConcern,
    bundle: EvidenceBundle,
    doc: ManuscriptDoc,
    cdoc: CompressedDoc,
    gateway: LlmGateway,
    known: set[str],
    guidance: str = "",
) -> ConcernPlan:
    """One plan for one concern, with single re-asks for the cheap-to-fix
    failure modes (wrong strategy kind, fabricated numerals)."""
    plan = _strategist_call(concern, bundle, doc, cdoc, gateway, guidance)
    if wants_intervention(concern) and plan.kind != "intervention":
        hint = "this concern asks for new experimental work; produce an intervention plan with concrete action items"
        plan = _strategist_call(concern, bundle, doc, cdoc, gateway, (guidance + "; " if guidance else "") + hint)
    novel = novel_argument_numerals(plan, known)
    if novel:
        hint = f"remove unsupported numbers {novel} from the argument; cite evidence or drop them"
        plan = _strategist_call(concern, bundle, doc, cdoc, gateway, (guidance + "; " if guidance else "") + hint)
    return plan


def plan_stage(
    concerns: list[AtomicConcern],
    bundles: list[EvidenceBundle],
    doc: ManuscriptDoc,
    cdoc: CompressedDoc,
    gateway: LlmGateway,
    review_text: str,
) -> tuple[PlanRevision, CheckReport]:
    """Strategize every concern, check, repair flagged plans once, re-check.

    Returns revision 1 plus the final report; remaining findings go to the
    human checkpoint rather than blocking."""
    by_id = {b.concern_id: b for b in bundles}
    known = known_numeral_pool(doc, review_text, concerns, by_id)
    plans = [strategize_one(c, by_id[c.concern_id], doc, cdoc, gateway, known) for c in concerns]
    report = check_plans(concerns, plans, by_id, doc, gateway, review_text)

    flagged: dict[str, list[str]] = {}
    for f in report.findings:
        if f.kind in REPAIRABLE_KINDS:
            flagged.setdefault(f.target_id, []).append(f.note)
    if flagged:
        repaired = []
        for concern, plan in zip(concerns, plans):
            if concern.concern_id in flagged:
                notes = "; ".join(flagged[concern.concern_id])
                repaired.append(
                    strategize_one(concern, by_id[concern.concern_id], doc, cdoc, gateway, known, guidance=notes)
                )
            else:
                repaired.append(plan)
        plans = repaired
        report = check_plans(concerns, plans, by_id, doc, gateway, review_text)
    return PlanRevision(version=1, plans=plans, provenance="system"), report


def revise_plans(
    current: PlanRevision,
    feedback: str,
    concerns: list[AtomicConcern],
    bundles: list[EvidenceBundle],
    cdoc: CompressedDoc,
    gateway: LlmGateway,
) -> PlanRevision:
    """Fold author feedback into a new revision; schedule phrases are scrubbed
    mechanically because the human cannot approve what the style guide bans."""
    briefs = format_briefs([b for bundle in bundles for b in bundle.briefs]) or "none"
    bindings = {
        "original_paper": format_compressed(cdoc),
        "review_question": serialize_concerns(concerns),
        "reference_summaries": briefs,
        "current_strategy": serialize_plans(current.plans),
        "human_feedback": feedback,
    }
    raw = gateway.call("strategy_revisor", bindings, stage="revise").text
    plans, problems = parse_plan_blocks_detailed(raw)
    if not plans:
        log.warning("revised plans unparseable; one re-ask")
        retry = dict(bindings)
        retry["human_feedback"] += "\n\n[format reminder]: keep the [plan qN] block format exactly."
        raw = gateway.call("strategy_revisor", retry, stage="revise").text
        plans, problems = parse_plan_blocks_detailed(raw)
        if not plans:
            raise MalformedBlock(raw[:200], "revision produced no parsable plans: " + "; ".join(p.reason for p in problems))
    for plan in plans:
        plan.argument = scrub_schedules(plan.argument) if schedule_phrase(plan.argument) else plan.argument
        plan.feasibility = scrub_schedules(plan.feasibility) if schedule_phrase(plan.feasibility) else plan.feasibility
        plan.deliverables = [scrub_schedules(d) if schedule_phrase(d) else d for d in plan.deliverables]
        plan.action_items = [
            ActionItem(
                scrub_schedules(a.description) if schedule_phrase(a.description) else a.description,
                scrub_schedules(a.rationale) if schedule_phrase(a.rationale) else a.rationale,
                scrub_schedules(a.scope) if schedule_phrase(a.scope) else a.scope,
            )
            for a in plan.action_items
        ]
    return PlanRevision(
        version=current.version + 1,
        plans=plans,
        provenance="human_feedback",
        author_feedback=feedback,
    )
