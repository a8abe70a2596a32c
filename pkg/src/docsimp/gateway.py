"""Uniform chat-completion interface: HTTP backend, replay, cache, call ledger.

A session wraps one backend plus an optional disk cache and keeps the
per-stage call accounting used for cost analysis. The replay backend makes
every pipeline and metric test runnable offline and byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import requests

from .textcore import tokenize

logger = logging.getLogger(__name__)

_ROLES = ("system", "user", "assistant")


class GatewayError(Exception):
    """Base class for gateway failures."""


class TransportError(GatewayError):
    """Network-level failure after bounded retries."""


class CompletionTimeoutError(TransportError):
    """The endpoint did not answer within the configured request timeout."""


class ProviderError(GatewayError):
    """The endpoint returned an error payload."""

    def __init__(self, status: int, message: str) -> None:
        super().__init__(f"provider error {status}: {message}")
        self.status = status


class ReplayMissError(GatewayError):
    """The replay script has no response for the incoming request."""


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in _ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.role in ("system", "user") and not self.content:
            raise ValueError(f"{self.role} message content must be nonempty")


@dataclass(frozen=True)
class GenerationParams:
    model_id: str
    temperature: float = 0.3
    max_output_tokens: int | None = None
    request_timeout: float = 30.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be positive")


@dataclass(frozen=True)
class LlmResponse:
    text: str
    prompt_tokens: int
    completion_tokens: int
    from_cache: bool


@dataclass(frozen=True)
class CallLedger:
    """Immutable accounting snapshot; per_stage_counts sums to call_count."""

    call_count: int
    retry_count: int
    cache_hits: int
    wall_time: float
    per_stage_counts: Mapping[str, int]


@dataclass(frozen=True)
class BackendResult:
    text: str
    prompt_tokens: int
    completion_tokens: int
    retries: int = 0


class Backend(Protocol):
    def generate(self, messages: Sequence[ChatMessage], params: GenerationParams) -> BackendResult: ...


def serialize_messages(messages: Sequence[ChatMessage]) -> str:
    return json.dumps([[m.role, m.content] for m in messages], ensure_ascii=False)


def prompt_digest(messages: Sequence[ChatMessage]) -> str:
    """Stable hash of the message list alone (replay matcher key)."""
    return hashlib.sha256(serialize_messages(messages).encode("utf-8")).hexdigest()


def cache_key(model_id: str, temperature: float, messages: Sequence[ChatMessage]) -> str:
    payload = json.dumps(
        [model_id, temperature, [[m.role, m.content] for m in messages]],
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def estimate_tokens(messages: Sequence[ChatMessage]) -> int:
    return sum(len(tokenize(m.content)) for m in messages)


class HttpBackend:
    """OpenAI-style ``/chat/completions`` client.

    Connection errors and 429/5xx responses are retried up to ``max_retries``
    times with exponential backoff; a request timeout raises immediately
    (callers decide whether a slow endpoint is worth waiting on again).
    """

    def __init__(
        self,
        endpoint: str,
        api_key_env: str = "OPENAI_API_KEY",
        max_retries: int = 3,
        backoff: float = 0.25,
        session: requests.Session | None = None,
    ) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.api_key_env = api_key_env
        self.max_retries = max_retries
        self.backoff = backoff
        self._http = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def generate(self, messages: Sequence[ChatMessage], params: GenerationParams) -> BackendResult:
        payload: dict = {
            "model": params.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": params.temperature,
        }
        if params.max_output_tokens is not None:
            payload["max_tokens"] = params.max_output_tokens
        url = f"{self.endpoint}/chat/completions"
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = self._http.post(
                    url, json=payload, headers=self._headers(), timeout=params.request_timeout
                )
            except requests.Timeout as exc:
                raise CompletionTimeoutError(
                    f"no response within {params.request_timeout}s from {url}"
                ) from exc
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("transport failure (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code in (429,) or resp.status_code >= 500:
                last_error = ProviderError(resp.status_code, resp.text[:200])
                logger.warning("retryable status %d (attempt %d)", resp.status_code, attempt + 1)
                continue
            if resp.status_code != 200:
                raise ProviderError(resp.status_code, resp.text[:500])
            data = resp.json()
            usage = data.get("usage", {})
            return BackendResult(
                text=data["choices"][0]["message"]["content"],
                prompt_tokens=int(usage.get("prompt_tokens", estimate_tokens(messages))),
                completion_tokens=int(usage.get("completion_tokens", 0)),
                retries=attempt,
            )
        if isinstance(last_error, ProviderError):
            raise last_error
        raise TransportError(f"transport failure after {self.max_retries} retries: {last_error}")


#: Wildcard matcher accepted by the replay backend.
ANY_PROMPT = "*"


class ReplayBackend:
    """Serves scripted responses: in order for wildcards, by hash for exact.

    Each script entry is ``(matcher, text)`` where matcher is ``"*"`` or a
    prompt digest (see :func:`prompt_digest`). Every entry is consumed at
    most once; running out is an error rather than a silent repeat.
    """

    def __init__(self, script: Sequence[tuple[str, str]]) -> None:
        if not script:
            raise ValueError("replay script must be nonempty")
        self._entries = [(matcher, text, [False]) for matcher, text in script]
        self._lock = threading.Lock()

    def generate(self, messages: Sequence[ChatMessage], params: GenerationParams) -> BackendResult:
        key = prompt_digest(messages)
        with self._lock:
            for matcher, text, used in self._entries:
                if not used[0] and matcher == key:
                    used[0] = True
                    return self._result(messages, text)
            for matcher, text, used in self._entries:
                if not used[0] and matcher == ANY_PROMPT:
                    used[0] = True
                    return self._result(messages, text)
            if all(used[0] for _, _, used in self._entries):
                raise ReplayMissError("script exhausted")
        raise ReplayMissError(f"no scripted response for prompt hash {key}")

    @staticmethod
    def _result(messages: Sequence[ChatMessage], text: str) -> BackendResult:
        return BackendResult(
            text=text,
            prompt_tokens=estimate_tokens(messages),
            completion_tokens=len(tokenize(text)),
        )


def make_replay_backend(script: Sequence[tuple[str, str]]) -> ReplayBackend:
    return ReplayBackend(script)


class FunctionBackend:
    """Backend computing responses from a pure function of the request."""

    def __init__(self, fn: Callable[[Sequence[ChatMessage], GenerationParams], str]) -> None:
        self._fn = fn

    def generate(self, messages: Sequence[ChatMessage], params: GenerationParams) -> BackendResult:
        text = self._fn(messages, params)
        return BackendResult(
            text=text,
            prompt_tokens=estimate_tokens(messages),
            completion_tokens=len(tokenize(text)),
        )


class PromptCache:
    """Append-only JSONL response cache keyed by (model, temperature, messages)."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, dict] = {}
        if self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        record = json.loads(line)
                        self._entries[record["key"]] = record

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> dict | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, record: dict) -> None:
        with self._lock:
            if record["key"] in self._entries:
                return
            self._entries[record["key"]] = record
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")

    def records(self) -> list[dict]:
        with self._lock:
            return list(self._entries.values())

    def rewrite(self, records: Sequence[dict]) -> None:
        """Replace the cache contents (used by prune)."""
        with self._lock:
            self._entries = {r["key"]: r for r in records}
            with self.path.open("w", encoding="utf-8") as fh:
                for r in self._entries.values():
                    fh.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


@dataclass(frozen=True)
class ModelRoute:
    """One entry of the ordered model fallback list.

    ``token_budget`` is the largest estimated prompt size this model should
    see; ``None`` means unbounded. The session upgrades to the next route
    when a rendered prompt exceeds the budget.
    """

    model_id: str
    token_budget: int | None = None


class LlmSession:
    """One backend + optional cache + the run's call ledger.

    ``complete`` is safe to call from multiple threads; ledger updates are
    atomic and cache writes are serialized.
    """

    def __init__(
        self,
        backend: Backend,
        params: GenerationParams,
        cache: PromptCache | None = None,
        routes: Sequence[ModelRoute] = (),
        count_cache_hits_as_calls: bool = False,
    ) -> None:
        self.backend = backend
        self.params = params
        self.cache = cache
        self.routes = tuple(routes)
        self.count_cache_hits_as_calls = count_cache_hits_as_calls
        self._lock = threading.Lock()
        self._call_count = 0
        self._retry_count = 0
        self._cache_hits = 0
        self._wall_time = 0.0
        self._per_stage: dict[str, int] = {}

    def _route_params(self, messages: Sequence[ChatMessage], params: GenerationParams) -> GenerationParams:
        if not self.routes:
            return params
        size = estimate_tokens(messages)
        for route in self.routes:
            if route.token_budget is None or size <= route.token_budget:
                return replace(params, model_id=route.model_id)
        return replace(params, model_id=self.routes[-1].model_id)

    def _count_call(self, stage: str, retries: int, elapsed: float) -> None:
        with self._lock:
            self._call_count += 1
            self._retry_count += retries
            self._wall_time += elapsed
            self._per_stage[stage] = self._per_stage.get(stage, 0) + 1

    def complete(
        self,
        messages: Sequence[ChatMessage],
        stage: str,
        params: GenerationParams | None = None,
    ) -> LlmResponse:
        if not any(m.role == "user" for m in messages):
            raise ValueError("complete() requires at least one user message")
        effective = self._route_params(messages, params or self.params)
        key = cache_key(effective.model_id, effective.temperature, messages)
        if self.cache is not None:
            record = self.cache.get(key)
            if record is not None:
                with self._lock:
                    self._cache_hits += 1
                if self.count_cache_hits_as_calls:
                    self._count_call(stage, 0, 0.0)
                return LlmResponse(
                    text=record["response"]["text"],
                    prompt_tokens=record["response"].get("prompt_tokens", 0),
                    completion_tokens=record["response"].get("completion_tokens", 0),
                    from_cache=True,
                )
        started = time.perf_counter()
        result = self.backend.generate(messages, effective)
        self._count_call(stage, result.retries, time.perf_counter() - started)
        if self.cache is not None:
            self.cache.put(
                {
                    "key": key,
                    "model_id": effective.model_id,
                    "params": {
                        "temperature": effective.temperature,
                        "max_output_tokens": effective.max_output_tokens,
                    },
                    "messages": [[m.role, m.content] for m in messages],
                    "response": {
                        "text": result.text,
                        "prompt_tokens": result.prompt_tokens,
                        "completion_tokens": result.completion_tokens,
                    },
                    "timestamp": time.time(),
                }
            )
        return LlmResponse(
            text=result.text,
            prompt_tokens=result.prompt_tokens,
            completion_tokens=result.completion_tokens,
            from_cache=False,
        )

    def ledger_snapshot(self) -> CallLedger:
        with self._lock:
            return CallLedger(
                call_count=self._call_count,
                retry_count=self._retry_count,
                cache_hits=self._cache_hits,
                wall_time=self._wall_time,
                per_stage_counts=dict(self._per_stage),
            )


def ledger_snapshot(session: LlmSession) -> CallLedger:
    return session.ledger_snapshot()
