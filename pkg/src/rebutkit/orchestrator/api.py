"""HTTP surface over the run engine; the review UI is a client of this API."""

from __future__ import annotations

from contextlib import contextmanager

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from ..errors import (
    CorruptArtifact,
    EmptyDocument,
    NoReviews,
    NotReady,
    PlaceholderViolation,
    RebutkitError,
    StaleVersion,
    UnknownPlaceholder,
    UnknownRun,
    WrongStage,
)
from .runs import RunConfig, RunEngine


class CreateRunBody(BaseModel):
    manuscript: str
    reviews: list[str]
    style: str = "tbd"
    auto_approve: bool = False
    token_budget: int | None = None
    prior_rounds: str = ""


class FeedbackBody(BaseModel):
    feedback: str = Field(min_length=1)


class ApproveBody(BaseModel):
    version: int


class FillBody(BaseModel):
    location: int
    value: str = Field(min_length=1)
    note: str = Field(min_length=1)


@contextmanager
def _translated():
    try:
        yield
    except UnknownRun as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc
    except (WrongStage, NotReady, StaleVersion, PlaceholderViolation) as exc:
        detail = str(exc) or "run is not ready for this operation"
        raise HTTPException(status_code=409, detail=detail) from exc
    except (EmptyDocument, NoReviews, UnknownPlaceholder, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    except CorruptArtifact as exc:
        raise HTTPException(status_code=500, detail=str(exc)) from exc
    except RebutkitError as exc:
        raise HTTPException(status_code=500, detail=str(exc)) from exc


def create_app(engine: RunEngine) -> FastAPI:
    app = FastAPI(title="rebutkit", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/runs")
    def list_runs() -> dict:
        return {"runs": [engine.status(run_id) for run_id in engine.store.list_runs()]}

    @app.post("/runs", status_code=201)
    def create_run(body: CreateRunBody) -> dict:
        config = RunConfig(
            style=body.style,
            auto_approve=body.auto_approve,
            prior_rounds=body.prior_rounds,
        )
        if body.token_budget is not None:
            config.token_budget = body.token_budget
        with _translated():
            state = engine.create_run(body.manuscript, body.reviews, config)
            return engine.status(state.run_id)

    @app.get("/runs/{run_id}")
    def run_status(run_id: str) -> dict:
        with _translated():
            return engine.status(run_id)

    @app.post("/runs/{run_id}/advance")
    def advance(run_id: str) -> dict:
        with _translated():
            engine.advance(run_id)
            return engine.status(run_id)

    @app.post("/runs/{run_id}/checkpoint")
    def to_checkpoint(run_id: str) -> dict:
        with _translated():
            engine.run_until_checkpoint(run_id)
            return engine.status(run_id)

    @app.get("/runs/{run_id}/plan")
    def plan_view(run_id: str) -> dict:
        with _translated():
            return engine.plan_view(run_id)

    @app.post("/runs/{run_id}/feedback")
    def feedback(run_id: str, body: FeedbackBody) -> dict:
        with _translated():
            engine.submit_feedback(run_id, body.feedback)
            return engine.plan_view(run_id)

    @app.post("/runs/{run_id}/approve")
    def approve(run_id: str, body: ApproveBody) -> dict:
        with _translated():
            engine.approve(run_id, body.version)
            return engine.status(run_id)

    @app.get("/runs/{run_id}/draft")
    def draft_view(run_id: str) -> dict:
        with _translated():
            return engine.draft_view(run_id)

    @app.post("/runs/{run_id}/draft/fill")
    def fill(run_id: str, body: FillBody) -> dict:
        with _translated():
            engine.fill(run_id, body.location, body.value, body.note)
            return engine.draft_view(run_id)

    return app
