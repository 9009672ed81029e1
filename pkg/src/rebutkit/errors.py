"""Exception types shared across the pipeline."""

from __future__ import annotations


class RebutkitError(Exception):
    """Base class for all pipeline errors."""


# --- gateway ---------------------------------------------------------------


class UnknownTemplate(RebutkitError):
    def __init__(self, template_id: str):
        super().__init__(f"unknown prompt template: {template_id!r}")
        self.template_id = template_id


class MissingSlot(RebutkitError):
    def __init__(self, template_id: str, names: list[str]):
        super().__init__(f"template {template_id!r} missing slots: {sorted(names)}")
        self.template_id = template_id
        self.names = sorted(names)


class ProviderError(RebutkitError):
    def __init__(self, status: int, body: str):
        super().__init__(f"provider error {status}: {body[:200]}")
        self.status = status
        self.body = body


class RateLimited(ProviderError):
    pass


class ReplayMiss(RebutkitError):
    def __init__(self, cache_key: str):
        super().__init__(f"no recording for cache key {cache_key}")
        self.cache_key = cache_key


# --- ingest ----------------------------------------------------------------


class EmptyDocument(RebutkitError):
    pass


class NoReviews(RebutkitError):
    pass


# --- structuring -----------------------------------------------------------


class MalformedBlock(RebutkitError):
    def __init__(self, span: str, reason: str):
        super().__init__(f"malformed block ({reason}): {span[:120]!r}")
        self.span = span
        self.reason = reason


class DuplicateConcernId(RebutkitError):
    def __init__(self, concern_id: str):
        super().__init__(f"duplicate concern id {concern_id}")
        self.concern_id = concern_id


# --- evidence --------------------------------------------------------------


class BudgetTooSmall(RebutkitError):
    def __init__(self, budget: int, minimum: int):
        super().__init__(f"token budget {budget} below compressed-doc size {minimum}")
        self.budget = budget
        self.minimum = minimum


class SchemaViolation(RebutkitError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"schema violation in {field!r}: {reason}")
        self.field = field
        self.reason = reason


class NetworkError(RebutkitError):
    def __init__(self, query: str, cause: str):
        super().__init__(f"network failure for {query!r}: {cause}")
        self.query = query
        self.cause = cause


class FeedParseError(RebutkitError):
    pass


# --- planning / drafting ---------------------------------------------------


class FabricatedNumeral(RebutkitError):
    def __init__(self, values: list[str]):
        super().__init__(f"numerals without evidence provenance: {values}")
        self.values = values


class PlaceholderViolation(RebutkitError):
    def __init__(self, violations: list):
        super().__init__(f"{len(violations)} unmarked novel numeral(s)")
        self.violations = violations


class UnknownPlaceholder(RebutkitError):
    def __init__(self, location: int):
        super().__init__(f"no placeholder at offset {location}")
        self.location = location


# --- judge -----------------------------------------------------------------


class MissingComponent(RebutkitError):
    def __init__(self, key: str):
        super().__init__(f"missing rubric component {key!r}")
        self.key = key


class OffGrid(RebutkitError):
    def __init__(self, key: str, value):
        super().__init__(f"component {key!r} score {value!r} not on the 0.5 grid in [0, 5]")
        self.key = key
        self.value = value


class IllegalUpgrade(RebutkitError):
    def __init__(self, key: str, value):
        super().__init__(f"component {key!r} score {value!r}: half points only allowed at 3.5 and 4.5")
        self.key = key
        self.value = value


# --- bench -----------------------------------------------------------------


class MissingSignal(RebutkitError):
    pass


# --- orchestrator ----------------------------------------------------------


class NotReady(RebutkitError):
    pass


class WrongStage(RebutkitError):
    def __init__(self, stage: str, wanted: str):
        super().__init__(f"run is at stage {stage!r}, operation requires {wanted!r}")
        self.stage = stage
        self.wanted = wanted


class StaleVersion(RebutkitError):
    def __init__(self, given: int, latest: int):
        super().__init__(f"plan version {given} is stale; latest is {latest}")
        self.given = given
        self.latest = latest


class CorruptArtifact(RebutkitError):
    def __init__(self, stage: str, detail: str):
        super().__init__(f"corrupt artifact for stage {stage!r}: {detail}")
        self.stage = stage
        self.detail = detail


class UnknownRun(RebutkitError):
    def __init__(self, run_id: str):
        super().__init__(f"unknown run {run_id!r}")
        self.run_id = run_id
