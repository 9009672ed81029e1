"""Provider-agnostic completion client with token accounting and record/replay.

Modes:
  live    call the provider, return the completion, persist nothing.
  record  call the provider and persist the completion under its cache key.
  replay  serve completions from the store only; never touches the network.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import requests

from ..errors import NetworkError, ProviderError, RateLimited, ReplayMiss
from ..storage import canonical_json, content_hash, read_json, write_json
from .templates import render_prompt

log = logging.getLogger(__name__)

MODES = ("live", "record", "replay")
RETRY_ATTEMPTS = 3
BACKOFF_BASE_S = 1.0
DEFAULT_CONCURRENCY = 4


@dataclass(frozen=True)
class ModelProfile:
    provider_id: str
    model_name: str
    decode_params: Mapping[str, object] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "provider_id": self.provider_id,
            "model_name": self.model_name,
            "decode_params": dict(self.decode_params),
        }


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int
    completion_tokens: int

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
        )


@dataclass(frozen=True)
class Completion:
    text: str
    token_usage: TokenUsage
    cache_key: str


@dataclass(frozen=True)
class ProviderReply:
    """What a transport hands back; status != 200 carries the error body."""

    status: int
    text: str = ""
    prompt_tokens: int = 0
    completion_tokens: int = 0
    body: str = ""


Transport = Callable[[dict], ProviderReply]


def cache_key_for(prompt_text: str, profile: ModelProfile) -> str:
    return content_hash({"prompt": prompt_text, "profile": profile.as_dict()})


def _is_transient(status: int) -> bool:
    return status == 429 or 500 <= status <= 599


class HttpTransport:
    """Minimal chat-completions POST; endpoint and key come from the environment.

    Looks up ``<PROVIDER_ID>_API_URL`` and ``<PROVIDER_ID>_API_KEY`` (upper-cased,
    dashes mapped to underscores).
    """

    def __init__(self, provider_id: str, timeout_s: float = 120.0):
        prefix = provider_id.upper().replace("-", "_")
        self.url = os.environ.get(f"{prefix}_API_URL", "")
        self.api_key = os.environ.get(f"{prefix}_API_KEY", "")
        self.timeout_s = timeout_s
        if not self.url:
            raise ProviderError(0, f"no endpoint configured for provider {provider_id!r}")

    def __call__(self, request: dict) -> ProviderReply:
        profile = request["profile"]
        payload = {
            "model": profile["model_name"],
            "messages": [{"role": "user", "content": request["prompt"]}],
            **profile["decode_params"],
        }
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            resp = requests.post(self.url, json=payload, headers=headers, timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise NetworkError(self.url, str(exc)) from exc
        if resp.status_code != 200:
            return ProviderReply(status=resp.status_code, body=resp.text)
        data = resp.json()
        usage = data.get("usage", {})
        return ProviderReply(
            status=200,
            text=data["choices"][0]["message"]["content"],
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
        )


class LlmGateway:
    """Single entry point for every model call in the pipeline.

    Thread-safe; per-provider concurrency is capped by a semaphore and the
    usage log is guarded by a lock. The record store is one file per cache
    key, written atomically, so identical keys resolve last-write-wins.
    """

    def __init__(
        self,
        profile: ModelProfile,
        mode: str = "replay",
        store_dir: Path | str | None = None,
        transport: Transport | None = None,
        sleeper: Callable[[float], None] = time.sleep,
        max_concurrency: int = DEFAULT_CONCURRENCY,
    ):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        if mode in ("record", "replay") and store_dir is None:
            raise ValueError(f"{mode} mode requires a store_dir")
        self.profile = profile
        self.mode = mode
        self.store_dir = Path(store_dir) if store_dir is not None else None
        self._transport = transport
        self._sleeper = sleeper
        self._sem = threading.BoundedSemaphore(max_concurrency)
        self._lock = threading.Lock()
        self.usage_log: list[dict] = []

    # -- public API ---------------------------------------------------------

    def call(self, template_id: str, bindings: Mapping[str, str], *, stage: str = "") -> Completion:
        return self.complete(render_prompt(template_id, bindings), stage=stage or template_id)

    def complete(self, prompt_text: str, *, stage: str = "") -> Completion:
        key = cache_key_for(prompt_text, self.profile)
        if self.mode == "replay":
            completion = self._load(key)
        else:
            request = {"prompt": prompt_text, "profile": self.profile.as_dict()}
            reply = self._call_with_retry(request)
            completion = Completion(
                text=reply.text,
                token_usage=TokenUsage(reply.prompt_tokens, reply.completion_tokens),
                cache_key=key,
            )
            if self.mode == "record":
                self._store(key, request, completion)
        with self._lock:
            self.usage_log.append(
                {
                    "stage": stage,
                    "cache_key": key,
                    "prompt_tokens": completion.token_usage.prompt_tokens,
                    "completion_tokens": completion.token_usage.completion_tokens,
                }
            )
        return completion

    def usage_total(self) -> TokenUsage:
        with self._lock:
            return sum(
                (TokenUsage(r["prompt_tokens"], r["completion_tokens"]) for r in self.usage_log),
                TokenUsage(0, 0),
            )

    def usage_by_stage(self) -> dict[str, TokenUsage]:
        with self._lock:
            out: dict[str, TokenUsage] = {}
            for r in self.usage_log:
                prev = out.get(r["stage"], TokenUsage(0, 0))
                out[r["stage"]] = prev + TokenUsage(r["prompt_tokens"], r["completion_tokens"])
            return out

    # -- internals ----------------------------------------------------------

    def _transport_or_fail(self) -> Transport:
        if self._transport is None:
            self._transport = HttpTransport(self.profile.provider_id)
        return self._transport

    def _call_with_retry(self, request: dict) -> ProviderReply:
        transport = self._transport_or_fail()
        last = ProviderReply(status=0)
        for attempt in range(1, RETRY_ATTEMPTS + 1):
            with self._sem:
                last = transport(request)
            if last.status == 200:
                return last
            if _is_transient(last.status) and attempt < RETRY_ATTEMPTS:
                delay = BACKOFF_BASE_S * 2 ** (attempt - 1)
                log.warning("provider status %d, retry %d/%d in %.1fs", last.status, attempt, RETRY_ATTEMPTS, delay)
                self._sleeper(delay)
                continue
            break
        if last.status == 429:
            raise RateLimited(last.status, last.body)
        raise ProviderError(last.status, last.body)

    def _record_path(self, key: str) -> Path:
        assert self.store_dir is not None
        return self.store_dir / f"{key}.json"

    def _store(self, key: str, request: dict, completion: Completion) -> None:
        write_json(
            self._record_path(key),
            {
                "request": request,
                "response": {
                    "text": completion.text,
                    "prompt_tokens": completion.token_usage.prompt_tokens,
                    "completion_tokens": completion.token_usage.completion_tokens,
                },
            },
        )

    def _load(self, key: str) -> Completion:
        path = self._record_path(key)
        if not path.is_file():
            raise ReplayMiss(key)
        record = read_json(path)
        resp = record["response"]
        return Completion(
            text=resp["text"],
            token_usage=TokenUsage(resp["prompt_tokens"], resp["completion_tokens"]),
            cache_key=key,
        )


__all__ = [
    "Completion",
    "HttpTransport",
    "LlmGateway",
    "ModelProfile",
    "ProviderReply",
    "TokenUsage",
    "cache_key_for",
    "canonical_json",
]
