"""Run lifecycle: staged execution with persisted artifacts and a hard
human checkpoint between planning and drafting.

Every stage writes its full output as one JSON artifact before the run state
moves forward, so a killed process resumes by re-running the pending stage;
with a replay gateway that recomputation is byte-identical. Stage artifacts
carry no run ids and no timestamps, which keeps runs comparable.
"""

from __future__ import annotations

import json
import logging
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from ..drafting import DEFAULT_STYLE, RebuttalDraft, draft_rebuttal, fill_placeholder
from ..errors import CorruptArtifact, NotReady, StaleVersion, UnknownRun, WrongStage
from ..evidence.hybrid import DEFAULT_TOKEN_BUDGET
from ..evidence.screening import gather_evidence
from ..gateway.client import LlmGateway
from ..ingest import ManuscriptDoc, ReviewSet, format_reviews, parse_manuscript, parse_reviews
from ..planning import PlanRevision, check_plans, plan_stage, revise_plans
from ..storage import read_json, write_json
from ..structuring import (
    AtomicConcern,
    CompressedDoc,
    check_concern_coverage,
    check_fidelity,
    compress_manuscript,
    extract_concerns,
    parse_concern_blocks_detailed,
)

log = logging.getLogger(__name__)

STAGE_ORDER = (
    "created",
    "structured",
    "evidence_built",
    "planned",
    "awaiting_approval",
    "approved",
    "drafted",
)

# Stage -> artifact written when that stage completes.
ARTIFACT_FOR_STAGE = {
    "created": "inputs",
    "structured": "structured",
    "evidence_built": "evidence",
    "planned": "plans",
    "drafted": "draft",
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunConfig:
    style: str = DEFAULT_STYLE
    auto_approve: bool = False
    token_budget: int = DEFAULT_TOKEN_BUDGET
    prior_rounds: str = ""

    def to_dict(self) -> dict:
        return {
            "style": self.style,
            "auto_approve": self.auto_approve,
            "token_budget": self.token_budget,
            "prior_rounds": self.prior_rounds,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RunConfig":
        return cls(
            style=payload.get("style", DEFAULT_STYLE),
            auto_approve=bool(payload.get("auto_approve", False)),
            token_budget=int(payload.get("token_budget", DEFAULT_TOKEN_BUDGET)),
            prior_rounds=payload.get("prior_rounds", ""),
        )


@dataclass
class RunState:
    run_id: str
    stage: str = "created"
    plan_version: int = 0
    failure: str = ""
    config: RunConfig = field(default_factory=RunConfig)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "stage": self.stage,
            "plan_version": self.plan_version,
            "failure": self.failure,
            "config": self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RunState":
        return cls(
            run_id=payload["run_id"],
            stage=payload["stage"],
            plan_version=int(payload.get("plan_version", 0)),
            failure=payload.get("failure", ""),
            config=RunConfig.from_dict(payload.get("config", {})),
        )


class RunStore:
    """One directory per run: run.json, events.jsonl, artifacts/<name>.json."""

    def __init__(self, root: Path | str):
        self.root = Path(root)

    def _dir(self, run_id: str) -> Path:
        return self.root / run_id

    def create(self, config: RunConfig) -> RunState:
        run_id = uuid.uuid4().hex[:12]
        state = RunState(run_id=run_id, config=config)
        (self._dir(run_id) / "artifacts").mkdir(parents=True)
        self.save_state(state)
        return state

    def save_state(self, state: RunState) -> None:
        payload = state.to_dict()
        payload["updated_at"] = _now()
        write_json(self._dir(state.run_id) / "run.json", payload)

    def load(self, run_id: str) -> RunState:
        path = self._dir(run_id) / "run.json"
        if not path.is_file():
            raise UnknownRun(run_id)
        return RunState.from_dict(read_json(path))

    def list_runs(self) -> list[str]:
        if not self.root.is_dir():
            return []
        return sorted(p.name for p in self.root.iterdir() if (p / "run.json").is_file())

    def artifact_path(self, run_id: str, name: str) -> Path:
        return self._dir(run_id) / "artifacts" / f"{name}.json"

    def has_artifact(self, run_id: str, name: str) -> bool:
        return self.artifact_path(run_id, name).is_file()

    def write_artifact(self, run_id: str, name: str, payload: dict) -> None:
        write_json(self.artifact_path(run_id, name), payload)

    def read_artifact(self, run_id: str, name: str) -> dict:
        path = self.artifact_path(run_id, name)
        if not path.is_file():
            raise CorruptArtifact(name, "artifact file missing")
        try:
            return read_json(path)
        except (json.JSONDecodeError, OSError) as exc:
            raise CorruptArtifact(name, str(exc)) from exc

    def append_event(self, run_id: str, event: str, **detail) -> None:
        line = json.dumps({"ts": _now(), "event": event, **detail}, ensure_ascii=False)
        with open(self._dir(run_id) / "events.jsonl", "a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def events(self, run_id: str) -> list[dict]:
        path = self._dir(run_id) / "events.jsonl"
        if not path.is_file():
            return []
        return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]


class RunEngine:
    """Drives a run through the stage machine against an injected gateway."""

    def __init__(self, store: RunStore, gateway: LlmGateway, http_get=None):
        self.store = store
        self.gateway = gateway
        self.http_get = http_get

    # -- creation ------------------------------------------------------------

    def create_run(
        self,
        manuscript_text: str,
        review_blocks: list[str],
        config: RunConfig | None = None,
    ) -> RunState:
        # fail fast on unusable input, before anything is persisted
        parse_manuscript(manuscript_text, doc_id="probe")
        parse_reviews(review_blocks)
        state = self.store.create(config or RunConfig())
        self.store.write_artifact(
            state.run_id, "inputs", {"manuscript": manuscript_text, "reviews": list(review_blocks)}
        )
        self.store.append_event(state.run_id, "create")
        return state

    # -- stage machine -------------------------------------------------------

    def advance(self, run_id: str) -> RunState:
        state = self.store.load(run_id)
        handlers = {
            "created": self._stage_structured,
            "structured": self._stage_evidence,
            "evidence_built": self._stage_planned,
            "planned": self._stage_checkpoint,
            "awaiting_approval": self._stage_auto_approve,
            "approved": self._stage_drafted,
        }
        handler = handlers.get(state.stage)
        if handler is None:
            raise WrongStage(state.stage, "an advanceable stage")
        try:
            handler(state)
        except (NotReady, WrongStage, StaleVersion):
            raise
        except Exception as exc:
            state.failure = f"{type(exc).__name__}: {exc}"
            self.store.save_state(state)
            self.store.append_event(run_id, "error", stage=state.stage, detail=state.failure)
            raise
        return self.store.load(run_id)

    def run_until_checkpoint(self, run_id: str) -> RunState:
        state = self.store.load(run_id)
        while state.stage in ("created", "structured", "evidence_built", "planned"):
            state = self.advance(run_id)
        return state

    def run_to_completion(self, run_id: str) -> RunState:
        state = self.store.load(run_id)
        while state.stage != "drafted":
            state = self.advance(run_id)
        return state

    def _finish_stage(self, state: RunState, new_stage: str) -> None:
        state.stage = new_stage
        state.failure = ""
        self.store.save_state(state)
        self.store.append_event(state.run_id, "advance", stage=new_stage)

    def _stage_structured(self, state: RunState) -> None:
        inputs = self.store.read_artifact(state.run_id, "inputs")
        doc = parse_manuscript(inputs["manuscript"], doc_id="manuscript")
        reviews = parse_reviews(inputs["reviews"])
        prior = state.config.prior_rounds or None
        cdoc = compress_manuscript(doc, self.gateway)
        cdoc, fidelity_report = check_fidelity(cdoc, doc, self.gateway)
        student_text = extract_concerns(reviews, cdoc, self.gateway, prior)
        student, problems = parse_concern_blocks_detailed(student_text)
        concerns, coverage_report = check_concern_coverage(student, reviews, cdoc, self.gateway, prior)
        self.store.write_artifact(
            state.run_id,
            "structured",
            {
                "doc": doc.to_dict(),
                "reviews": reviews.to_dict(),
                "cdoc": cdoc.to_dict(),
                "concerns": [c.to_dict() for c in concerns],
                "fidelity_report": fidelity_report.to_dict(),
                "coverage_report": coverage_report.to_dict(),
                "extraction_problems": [p.reason for p in problems],
            },
        )
        self._finish_stage(state, "structured")

    def _load_structured(self, run_id: str):
        data = self.store.read_artifact(run_id, "structured")
        doc = ManuscriptDoc.from_dict(data["doc"])
        reviews = ReviewSet.from_dict(data["reviews"])
        cdoc = CompressedDoc.from_dict(data["cdoc"])
        concerns = [AtomicConcern.from_dict(c) for c in data["concerns"]]
        return doc, reviews, cdoc, concerns

    def _load_bundles(self, run_id: str):
        from ..evidence.screening import EvidenceBundle

        data = self.store.read_artifact(run_id, "evidence")
        return [EvidenceBundle.from_dict(b) for b in data["bundles"]]

    def _stage_evidence(self, state: RunState) -> None:
        doc, reviews, cdoc, concerns = self._load_structured(state.run_id)
        review_text = format_reviews(reviews)
        bundles = [
            gather_evidence(
                concern,
                doc,
                cdoc,
                self.gateway,
                review_text,
                token_budget=state.config.token_budget,
                http_get=self.http_get,
            )
            for concern in concerns
        ]
        self.store.write_artifact(
            state.run_id, "evidence", {"bundles": [b.to_dict() for b in bundles]}
        )
        self._finish_stage(state, "evidence_built")

    def _stage_planned(self, state: RunState) -> None:
        doc, reviews, cdoc, concerns = self._load_structured(state.run_id)
        bundles = self._load_bundles(state.run_id)
        revision, report = plan_stage(
            concerns, bundles, doc, cdoc, self.gateway, format_reviews(reviews)
        )
        self.store.write_artifact(
            state.run_id,
            "plans",
            {"revisions": [revision.to_dict()], "report": report.to_dict()},
        )
        state.plan_version = revision.version
        self._finish_stage(state, "planned")

    def _stage_checkpoint(self, state: RunState) -> None:
        self.store.append_event(state.run_id, "checkpoint", version=state.plan_version)
        self._finish_stage(state, "awaiting_approval")

    def _stage_auto_approve(self, state: RunState) -> None:
        if not state.config.auto_approve:
            raise NotReady()
        self.approve(state.run_id, state.plan_version, provenance="auto_approve")

    def _stage_drafted(self, state: RunState) -> None:
        events = self.store.events(state.run_id)
        if not any(e.get("event") == "approve" for e in events):
            # stage machine should make this unreachable; keep the hard gate anyway
            raise NotReady()
        doc, reviews, cdoc, concerns = self._load_structured(state.run_id)
        bundles = self._load_bundles(state.run_id)
        revision = self.latest_revision(state.run_id)
        draft = draft_rebuttal(
            concerns, revision, doc, cdoc, reviews, bundles, self.gateway, style=state.config.style
        )
        self.store.write_artifact(state.run_id, "draft", draft.to_dict())
        self._finish_stage(state, "drafted")

    # -- checkpoint operations -----------------------------------------------

    def latest_revision(self, run_id: str) -> PlanRevision:
        data = self.store.read_artifact(run_id, "plans")
        return PlanRevision.from_dict(data["revisions"][-1])

    def submit_feedback(self, run_id: str, feedback: str) -> RunState:
        state = self.store.load(run_id)
        if state.stage != "awaiting_approval":
            raise WrongStage(state.stage, "awaiting_approval")
        if not feedback.strip():
            raise ValueError("feedback must not be empty")
        doc, reviews, cdoc, concerns = self._load_structured(run_id)
        bundles = self._load_bundles(run_id)
        data = self.store.read_artifact(run_id, "plans")
        current = PlanRevision.from_dict(data["revisions"][-1])
        revision = revise_plans(current, feedback, concerns, bundles, cdoc, self.gateway)
        report = check_plans(
            concerns,
            revision.plans,
            {b.concern_id: b for b in bundles},
            doc,
            self.gateway,
            format_reviews(reviews),
        )
        data["revisions"].append(revision.to_dict())
        data["report"] = report.to_dict()
        self.store.write_artifact(run_id, "plans", data)
        state.plan_version = revision.version
        self.store.save_state(state)
        self.store.append_event(run_id, "feedback", version=revision.version)
        return state

    def approve(self, run_id: str, version: int, provenance: str = "human") -> RunState:
        state = self.store.load(run_id)
        if state.stage != "awaiting_approval":
            raise WrongStage(state.stage, "awaiting_approval")
        if version != state.plan_version:
            raise StaleVersion(version, state.plan_version)
        self.store.append_event(run_id, "approve", version=version, provenance=provenance)
        self._finish_stage(state, "approved")
        return state

    def fill(self, run_id: str, location: int, value: str, note: str) -> RebuttalDraft:
        state = self.store.load(run_id)
        if state.stage != "drafted":
            raise WrongStage(state.stage, "drafted")
        draft = RebuttalDraft.from_dict(self.store.read_artifact(run_id, "draft"))
        draft = fill_placeholder(draft, location, value, note)
        self.store.write_artifact(run_id, "draft", draft.to_dict())
        self.store.append_event(run_id, "fill", location=location)
        return draft

    # -- views ---------------------------------------------------------------

    def status(self, run_id: str) -> dict:
        state = self.store.load(run_id)
        return {
            "run_id": state.run_id,
            "stage": state.stage,
            "plan_version": state.plan_version,
            "failure": state.failure,
            "config": state.config.to_dict(),
            "events": len(self.store.events(run_id)),
        }

    def plan_view(self, run_id: str) -> dict:
        state = self.store.load(run_id)
        if not self.store.has_artifact(run_id, "plans"):
            raise NotReady()
        _doc, _reviews, _cdoc, concerns = self._load_structured(run_id)
        bundles = self._load_bundles(run_id)
        data = self.store.read_artifact(run_id, "plans")
        revision = PlanRevision.from_dict(data["revisions"][-1])
        approved = any(e.get("event") == "approve" for e in self.store.events(run_id))
        return {
            "run_id": run_id,
            "stage": state.stage,
            "version": revision.version,
            "provenance": revision.provenance,
            "author_feedback": revision.author_feedback,
            "approved": approved,
            "concerns": [
                {
                    "concern_id": c.concern_id,
                    "issue": c.issue,
                    "priority": c.priority,
                    "hooks": list(c.paper_hooks),
                    "sources": [
                        {
                            "ref": s.wire_ref(),
                            "locator": s.locator,
                            "quote": s.quote,
                            "reviewer_id": s.reviewer_id,
                            "verified": s.verified,
                        }
                        for s in c.sources
                    ],
                }
                for c in concerns
            ],
            "plans": [p.to_dict() for p in revision.plans],
            "findings": data["report"]["findings"],
            "briefs": [
                {
                    "concern_id": b.concern_id,
                    "brief_id": brief.brief_id,
                    "title": brief.title,
                    "url": brief.url,
                }
                for b in bundles
                for brief in b.briefs
            ],
        }

    def draft_view(self, run_id: str) -> dict:
        state = self.store.load(run_id)
        if not self.store.has_artifact(run_id, "draft"):
            raise NotReady()
        draft = RebuttalDraft.from_dict(self.store.read_artifact(run_id, "draft"))
        return {
            "run_id": run_id,
            "stage": state.stage,
            "text": draft.text,
            "placeholder_style": draft.placeholder_style,
            "placeholders": [p.to_dict() for p in draft.placeholders],
            "pending": [p.to_dict() for p in draft.pending()],
            "fills": list(draft.fills),
            "sections": [
                {"title": sec.title, "reviewer_id": sec.reviewer_id, "body": sec.body}
                for sec in draft.sections()
            ],
        }
