"""Provider-agnostic chat-completion client.

One interface, three backends: ``live`` (OpenAI-compatible HTTP), ``mock``
(a deterministic responder function, for tests and demos) and ``replay``
(cache-only; any miss is an error, which guarantees zero network activity).

Every completion is cached on disk keyed by a digest of the generation
knobs plus the rendered prompt, so changing any knob invalidates the entry
and identical requests short-circuit without touching the backend.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Union

import httpx

from .prompts import PromptRequest, approx_token_count

logger = logging.getLogger(__name__)


class TransportError(RuntimeError):
    """All retries exhausted against the live backend."""


class ReplayMissError(RuntimeError):
    """A strict-replay run asked for a prompt that is not in the cache."""

    def __init__(self, prompt_hash: str):
        super().__init__(f"replay miss for prompt {prompt_hash}")
        self.prompt_hash = prompt_hash


class BackendUnavailableError(RuntimeError):
    """The backend is misconfigured (missing credentials, bad cache dir)."""


@dataclass(frozen=True)
class GenerationConfig:
    model: str
    temperature: float = 0.0
    seed: int = 42
    max_new_tokens: int = 1024
    max_retries: int = 3

    def __post_init__(self) -> None:
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass
class CompletionRecord:
    prompt_hash: str
    model: str
    response_text: str
    input_tokens: int
    output_tokens: int
    attempt: int
    timestamp: float
    estimated: bool = False
    tags: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "prompt_hash": self.prompt_hash,
            "model": self.model,
            "response_text": self.response_text,
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "attempt": self.attempt,
            "timestamp": self.timestamp,
            "estimated": self.estimated,
            "tags": self.tags,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CompletionRecord":
        return cls(
            prompt_hash=data["prompt_hash"],
            model=data["model"],
            response_text=data["response_text"],
            input_tokens=int(data["input_tokens"]),
            output_tokens=int(data["output_tokens"]),
            attempt=int(data.get("attempt", 1)),
            timestamp=float(data.get("timestamp", 0.0)),
            estimated=bool(data.get("estimated", False)),
            tags=dict(data.get("tags", {})),
        )


def prompt_fingerprint(prompt_text: str, config: GenerationConfig) -> str:
    """Content digest over everything that can change the response."""
    payload = json.dumps(
        {
            "model": config.model,
            "prompt": prompt_text,
            "temperature": config.temperature,
            "seed": config.seed,
            "max_new_tokens": config.max_new_tokens,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class Backend(Protocol):
    name: str

    def generate(
        self, prompt: PromptRequest | str, config: GenerationConfig
    ) -> tuple[str, dict | None]:
        """Return (response text, usage dict or None)."""
        ...  # pragma: no cover


class MockBackend:
    """Calls a responder function; deterministic iff the responder is."""

    name = "mock"

    def __init__(self, responder: Callable[[Union[PromptRequest, str], GenerationConfig], str]):
        self.responder = responder
        self.calls = 0

    def generate(self, prompt, config):
        self.calls += 1
        return self.responder(prompt, config), None


class ReplayBackend:
    """Never generates: the client's cache is the only source of responses."""

    name = "replay"

    def __init__(self, cache_dir: str | Path):
        self.cache_dir = Path(cache_dir)
        if not self.cache_dir.is_dir():
            raise BackendUnavailableError(
                f"replay backend needs an existing cache directory, got {cache_dir}"
            )
        self.calls = 0

    def generate(self, prompt, config):
        self.calls += 1
        text = prompt.rendered_text if isinstance(prompt, PromptRequest) else str(prompt)
        raise ReplayMissError(prompt_fingerprint(text, config))


class HttpBackend:
    """OpenAI-compatible chat completions over HTTP.

    Credentials come from the environment only: ``LLM_API_KEY`` (or
    ``OPENAI_API_KEY``) and ``LLM_BASE_URL``.
    """

    name = "live"

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        timeout: float = 120.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.base_url = (
            base_url
            or os.environ.get("LLM_BASE_URL")
            or "https://api.openai.com/v1"
        ).rstrip("/")
        self.api_key = api_key or os.environ.get("LLM_API_KEY") or os.environ.get("OPENAI_API_KEY")
        if not self.api_key:
            raise BackendUnavailableError(
                "live backend needs LLM_API_KEY or OPENAI_API_KEY in the environment"
            )
        self.network_calls = 0
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def generate(self, prompt, config):
        text = prompt.rendered_text if isinstance(prompt, PromptRequest) else str(prompt)
        self.network_calls += 1
        response = self._client.post(
            f"{self.base_url}/chat/completions",
            headers={"Authorization": f"Bearer {self.api_key}"},
            json={
                "model": config.model,
                "messages": [{"role": "user", "content": text}],
                "temperature": config.temperature,
                "seed": config.seed,
                "max_tokens": config.max_new_tokens,
            },
        )
        response.raise_for_status()
        data = response.json()
        content = data["choices"][0]["message"]["content"]
        usage = data.get("usage")
        if usage is not None:
            usage = {
                "input_tokens": int(usage.get("prompt_tokens", 0)),
                "output_tokens": int(usage.get("completion_tokens", 0)),
            }
        return content, usage


class CompletionClient:
    """Retries, caching and token accounting around a backend.

    The cache tolerates concurrent writers: identical keys hold identical
    content under temperature 0, so last-write-wins is safe.
    """

    def __init__(
        self,
        backend: Backend,
        cache_dir: str | Path | None = None,
        backoff_base: float = 1.0,
        backoff_factor: float = 2.0,
        jitter: float = 0.1,
        sleep: Callable[[float], None] = time.sleep,
        min_request_interval: float = 0.0,
    ):
        self.backend = backend
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        if self.cache_dir is not None:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self.jitter = jitter
        self.sleep = sleep
        self.min_request_interval = min_request_interval
        self.cache_hits = 0
        self.backend_calls = 0
        self._lock = threading.Lock()
        self._last_request_at = 0.0
        self._rng = random.Random(0)

    # -- cache ---------------------------------------------------------------

    def _cache_path(self, prompt_hash: str) -> Path | None:
        if self.cache_dir is None:
            return None
        return self.cache_dir / f"{prompt_hash}.json"

    def _cache_read(self, prompt_hash: str) -> CompletionRecord | None:
        path = self._cache_path(prompt_hash)
        if path is None or not path.exists():
            return None
        try:
            return CompletionRecord.from_json(json.loads(path.read_text("utf-8")))
        except (OSError, ValueError, KeyError):
            logger.warning("dropping unreadable cache entry %s", path)
            return None

    def _cache_write(self, record: CompletionRecord) -> None:
        path = self._cache_path(record.prompt_hash)
        if path is None:
            return
        tmp = path.with_suffix(f".tmp-{os.getpid()}-{threading.get_ident()}")
        tmp.write_text(json.dumps(record.to_json(), ensure_ascii=False), "utf-8")
        tmp.replace(path)

    # -- completion ----------------------------------------------------------

    def complete(
        self,
        prompt: PromptRequest | str,
        config: GenerationConfig,
        tags: dict[str, str] | None = None,
    ) -> CompletionRecord:
        """Resolve a prompt: cache first, then the backend with retries."""
        text = prompt.rendered_text if isinstance(prompt, PromptRequest) else str(prompt)
        prompt_hash = prompt_fingerprint(text, config)

        cached = self._cache_read(prompt_hash)
        if cached is not None:
            self.cache_hits += 1
            if tags:
                cached.tags = {**cached.tags, **tags}
            return cached

        last_error: Exception | None = None
        for attempt in range(1, config.max_retries + 2):
            self._throttle()
            try:
                self.backend_calls += 1
                response_text, usage = self.backend.generate(prompt, config)
                break
            except ReplayMissError:
                raise
            except BackendUnavailableError:
                raise
            except Exception as exc:  # transient transport / provider error
                last_error = exc
                if attempt > config.max_retries:
                    raise TransportError(
                        f"{config.max_retries} retries exhausted: {exc}"
                    ) from exc
                delay = self.backoff_base * (self.backoff_factor ** (attempt - 1))
                delay += self._rng.uniform(0, self.jitter)
                logger.warning(
                    "attempt %d failed (%s); retrying in %.2fs", attempt, exc, delay
                )
                self.sleep(delay)
        else:  # pragma: no cover - loop always breaks or raises
            raise TransportError(str(last_error))

        estimated = usage is None
        if usage is None:
            usage = {
                "input_tokens": approx_token_count(text),
                "output_tokens": approx_token_count(response_text),
            }
        record = CompletionRecord(
            prompt_hash=prompt_hash,
            model=config.model,
            response_text=response_text,
            input_tokens=usage["input_tokens"],
            output_tokens=usage["output_tokens"],
            attempt=attempt,
            timestamp=time.time(),
            estimated=estimated,
            tags=dict(tags or {}),
        )
        self._cache_write(record)
        return record

    def _throttle(self) -> None:
        if self.min_request_interval <= 0:
            return
        with self._lock:
            wait = self.min_request_interval - (time.monotonic() - self._last_request_at)
            if wait > 0:
                self.sleep(wait)
            self._last_request_at = time.monotonic()


# ---------------------------------------------------------------------------
# Usage accounting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UsageGroup:
    dataset: str
    model: str
    method: str
    completions: int
    cases: int
    total_input_tokens: int
    total_output_tokens: int
    mean_input_tokens: float
    mean_output_tokens: float
    mean_input_tokens_per_case: float
    mean_output_tokens_per_case: float

    def to_json(self) -> dict:
        return {
            "dataset": self.dataset,
            "model": self.model,
            "method": self.method,
            "completions": self.completions,
            "cases": self.cases,
            "total_input_tokens": self.total_input_tokens,
            "total_output_tokens": self.total_output_tokens,
            "mean_input_tokens": self.mean_input_tokens,
            "mean_output_tokens": self.mean_output_tokens,
            "mean_input_tokens_per_case": self.mean_input_tokens_per_case,
            "mean_output_tokens_per_case": self.mean_output_tokens_per_case,
        }


def usage_report(records: list[CompletionRecord]) -> list[UsageGroup]:
    """Mean and total token counts per (dataset, model, method) group.

    Per-case means use the ``case_id`` tag when present (several
    completions per case collapse into one case).
    """
    grouped: dict[tuple[str, str, str], list[CompletionRecord]] = {}
    for record in records:
        key = (
            record.tags.get("dataset", ""),
            record.model,
            record.tags.get("method", ""),
        )
        grouped.setdefault(key, []).append(record)

    out: list[UsageGroup] = []
    for (dataset, model, method), group in sorted(grouped.items()):
        total_in = sum(r.input_tokens for r in group)
        total_out = sum(r.output_tokens for r in group)
        case_ids = {r.tags["case_id"] for r in group if "case_id" in r.tags}
        cases = len(case_ids) if case_ids else len(group)
        n = len(group)
        out.append(
            UsageGroup(
                dataset=dataset,
                model=model,
                method=method,
                completions=n,
                cases=cases,
                total_input_tokens=total_in,
                total_output_tokens=total_out,
                mean_input_tokens=total_in / n if n else 0.0,
                mean_output_tokens=total_out / n if n else 0.0,
                mean_input_tokens_per_case=total_in / cases if cases else 0.0,
                mean_output_tokens_per_case=total_out / cases if cases else 0.0,
            )
        )
    return out
