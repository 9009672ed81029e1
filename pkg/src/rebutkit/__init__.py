"""rebutkit: evidence-linked rebuttal planning, drafting, and scoring.

The package splits into ingest/structuring (manuscript and review parsing,
compression, concern extraction), evidence (search, screening, briefs, hybrid
context), planning (strategy, audit, revision), drafting (placeholder-safe
letters), judge (nine-component rubric), bench (thread labeling, corpus
construction, multi-round baseline), gateway (templated LLM calls with
record/replay plus a deterministic scripted provider), and orchestrator
(checkpointed run state machine with an HTTP API).
"""

from . import errors
from .bench import ThreadInstance, build_corpus, classify_outcome, run_baseline, stratify_tier
from .drafting import RebuttalDraft, draft_rebuttal, fill_placeholder, scan_text
from .evidence.hybrid import build_hybrid_context
from .evidence.screening import EvidenceBundle, gather_evidence
from .gateway.client import LlmGateway, ModelProfile
from .gateway.scripted import scripted_gateway
from .ingest import ManuscriptDoc, ReviewSet, parse_manuscript, parse_reviews
from .judge import JudgeScores, judge_rebuttal
from .orchestrator import RunConfig, RunEngine, RunStore
from .planning import PlanRevision, check_plans, plan_stage, revise_plans
from .structuring import AtomicConcern, compress_manuscript, extract_concerns

__version__ = "0.1.0"

__all__ = [
    "AtomicConcern",
    "EvidenceBundle",
    "JudgeScores",
    "LlmGateway",
    "ManuscriptDoc",
    "ModelProfile",
    "PlanRevision",
    "RebuttalDraft",
    "ReviewSet",
    "RunConfig",
    "RunEngine",
    "RunStore",
    "ThreadInstance",
    "build_corpus",
    "build_hybrid_context",
    "check_plans",
    "classify_outcome",
    "compress_manuscript",
    "draft_rebuttal",
    "errors",
    "extract_concerns",
    "fill_placeholder",
    "gather_evidence",
    "judge_rebuttal",
    "parse_manuscript",
    "parse_reviews",
    "plan_stage",
    "revise_plans",
    "run_baseline",
    "scan_text",
    "scripted_gateway",
    "stratify_tier",
    "__version__",
]
