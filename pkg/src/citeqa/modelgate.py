"""Uniform access to chat and embedding backends.

Three families of backends share two tiny protocols:

* remote OpenAI-compatible HTTP endpoints with retry/backoff,
* deterministic mocks (transcript replay for chat, feature hashing for
  embeddings) so the whole pipeline runs bit-identically offline,
* a disk cache wrapper that makes expensive judge calls resumable.

Every chat request has a stable fingerprint (sha256 of its canonical JSON),
which is the key for both transcripts and the cache.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

import httpx

logger = logging.getLogger(__name__)


class BackendError(Exception):
    pass


class AuthError(BackendError):
    pass


class RateLimitExhausted(BackendError):
    pass


class TransportError(BackendError):
    pass


class UnknownFingerprint(BackendError):
    pass


# ---------------------------------------------------------------------------
# Requests and fingerprints
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Message:
    role: str
    content: str


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[Message, ...]
    model_name: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 2048

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def last_content(self) -> str:
        return self.messages[-1].content


def user_request(
    prompt: str,
    model_name: str = "",
    temperature: float = 0.0,
    max_output_tokens: int = 2048,
) -> ChatRequest:
    return ChatRequest(
        messages=(Message("user", prompt),),
        model_name=model_name,
        temperature=temperature,
        max_output_tokens=max_output_tokens,
    )


def fingerprint(request: ChatRequest) -> str:
    """Stable across processes and message-field ordering."""
    canonical = json.dumps(
        {
            "messages": [
                {"content": m.content, "role": m.role} for m in request.messages
            ],
            "model_name": request.model_name,
            "temperature": request.temperature,
            "max_output_tokens": request.max_output_tokens,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _request_digest(request: ChatRequest, width: int = 160) -> str:
    head = " ".join(request.last_content().split())
    return head[:width]


class ChatBackend(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding values must be finite")

    @property
    def dimension(self) -> int:
        return len(self.values)


class EmbeddingBackend(Protocol):
    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]: ...


# ---------------------------------------------------------------------------
# Transcript record/replay
# ---------------------------------------------------------------------------


class Transcript:
    """Fingerprint -> recorded response, persisted as JSON Lines."""

    def __init__(self) -> None:
        self._rows: list[dict] = []
        self._by_fp: dict[str, str] = {}

    def __len__(self) -> int:
        return len(self._by_fp)

    def __contains__(self, fp: str) -> bool:
        return fp in self._by_fp

    def get(self, fp: str) -> str | None:
        return self._by_fp.get(fp)

    def add(self, fp: str, digest: str, response: str) -> None:
        if fp not in self._by_fp:
            self._rows.append(
                {"fingerprint": fp, "request_digest": digest, "response": response}
            )
        self._by_fp[fp] = response

    @classmethod
    def load(cls, path: str | Path) -> "Transcript":
        transcript = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                transcript.add(
                    row["fingerprint"], row.get("request_digest", ""), row["response"]
                )
        return transcript

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for row in self._rows:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")


class TranscriptBackend:
    """Replays recorded responses; the deterministic stand-in for any chat
    model in tests and offline runs."""

    def __init__(self, transcript: Transcript, strict: bool = True) -> None:
        self.transcript = transcript
        self.strict = strict
        self.calls = 0

    def complete(self, request: ChatRequest) -> str:
        self.calls += 1
        fp = fingerprint(request)
        response = self.transcript.get(fp)
        if response is None:
            if self.strict:
                raise UnknownFingerprint(
                    f"no recorded response for {fp[:12]}… ({_request_digest(request, 60)!r})"
                )
            logger.warning("transcript miss for %s; returning empty text", fp[:12])
            return ""
        return response


class RecordingBackend:
    """Wraps a live backend and appends every exchange to a transcript."""

    def __init__(
        self, inner: ChatBackend, transcript: Transcript, path: str | Path | None = None
    ) -> None:
        self.inner = inner
        self.transcript = transcript
        self.path = Path(path) if path is not None else None

    def complete(self, request: ChatRequest) -> str:
        response = self.inner.complete(request)
        self.transcript.add(fingerprint(request), _request_digest(request), response)
        if self.path is not None:
            self.transcript.save(self.path)
        return response


class FunctionBackend:
    """Computes responses from a plain function; useful for scripted fixtures
    and call counting."""

    def __init__(self, fn: Callable[[ChatRequest], str]) -> None:
        self.fn = fn
        self.calls = 0
        self.requests: list[ChatRequest] = []

    def complete(self, request: ChatRequest) -> str:
        self.calls += 1
        self.requests.append(request)
        return self.fn(request)


# ---------------------------------------------------------------------------
# Remote OpenAI-compatible backends
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RemoteConfig:
    base_url: str
    model: str = ""
    api_key_env: str = "CITEQA_API_KEY"
    timeout: float = 120.0
    max_attempts: int = 5
    backoff_base: float = 0.5
    embed_batch_size: int = 100


class _RemoteBase:
    def __init__(
        self,
        config: RemoteConfig,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.config = config
        self._sleep = sleep
        self._client = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            timeout=config.timeout,
            transport=transport,
        )

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post_with_retry(self, path: str, payload: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.config.max_attempts):
            if attempt:
                self._sleep(self.config.backoff_base * 2 ** (attempt - 1))
            try:
                response = self._client.post(path, json=payload, headers=self._headers())
            except httpx.HTTPError as exc:
                last_error = exc
                logger.warning("transport failure (attempt %d): %s", attempt + 1, exc)
                continue
            if response.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials ({response.status_code})")
            if response.status_code == 429 or response.status_code >= 500:
                last_error = BackendError(f"HTTP {response.status_code}")
                logger.warning(
                    "retryable status %d (attempt %d)", response.status_code, attempt + 1
                )
                continue
            response.raise_for_status()
            return response.json()
        if isinstance(last_error, httpx.HTTPError):
            raise TransportError(str(last_error)) from last_error
        raise RateLimitExhausted(
            f"gave up after {self.config.max_attempts} attempts: {last_error}"
        )


class RemoteChatBackend(_RemoteBase):
    """Chat completions against any OpenAI-compatible endpoint."""

    def complete(self, request: ChatRequest) -> str:
        payload = {
            "model": request.model_name or self.config.model,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        data = self._post_with_retry("/chat/completions", payload)
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion payload: {exc}") from exc
        if not isinstance(content, str):
            raise BackendError("completion content is not text")
        return content


class RemoteEmbeddingBackend(_RemoteBase):
    """Embeddings endpoint with transparent batching, order preserved."""

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ValueError("embed() needs at least one text")
        vectors: list[EmbeddingVector] = []
        batch = self.config.embed_batch_size
        for lo in range(0, len(texts), batch):
            payload = {"model": self.config.model, "input": list(texts[lo : lo + batch])}
            data = self._post_with_retry("/embeddings", payload)
            rows = sorted(data["data"], key=lambda r: r.get("index", 0))
            vectors.extend(EmbeddingVector(tuple(r["embedding"])) for r in rows)
        if len(vectors) != len(texts):
            raise BackendError(
                f"embedding arity mismatch: {len(vectors)} != {len(texts)}"
            )
        dimensions = {v.dimension for v in vectors}
        if len(dimensions) > 1:
            raise BackendError(f"inconsistent embedding dimensions: {sorted(dimensions)}")
        return vectors


class HashEmbeddingBackend:
    """Deterministic feature-hashing embeddings (no network, no state).

    Same text always maps to the same unit-norm vector, across processes,
    which keeps retrieval tests and offline runs reproducible.
    """

    def __init__(self, dimension: int = 64) -> None:
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension
        self.calls = 0

    def _tokens(self, text: str) -> Iterable[str]:
        from .textseg import approx_token_spans

        return (text[a:b].lower() for a, b in approx_token_spans(text))

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ValueError("embed() needs at least one text")
        self.calls += 1
        out = []
        for text in texts:
            acc = [0.0] * self.dimension
            for token in self._tokens(text):
                digest = hashlib.sha256(token.encode("utf-8")).digest()
                bucket = int.from_bytes(digest[:4], "big") % self.dimension
                sign = 1.0 if digest[4] % 2 == 0 else -1.0
                acc[bucket] += sign
            norm = math.sqrt(sum(v * v for v in acc))
            if norm > 0:
                acc = [v / norm for v in acc]
            out.append(EmbeddingVector(tuple(acc)))
        return out


# ---------------------------------------------------------------------------
# Disk cache
# ---------------------------------------------------------------------------


class DiskCache:
    """Append-only fingerprint -> response store (JSON Lines).

    Writes are serialized under a lock; reads hit the in-memory view, so
    concurrent readers need no coordination.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, str] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    row = json.loads(line)
                    self._entries[row["fingerprint"]] = row["response"]

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, fp: str) -> str | None:
        return self._entries.get(fp)

    def put(self, fp: str, response: str) -> None:
        with self._lock:
            if fp in self._entries:
                return
            self._entries[fp] = response
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {"fingerprint": fp, "response": response}, ensure_ascii=False
                    )
                    + "\n"
                )
                fh.flush()


@dataclass
class CachedChatBackend:
    """Consults the cache before the wrapped backend; idempotent re-runs make
    zero new model calls."""

    inner: ChatBackend
    cache: DiskCache
    hits: int = 0
    misses: int = 0

    def complete(self, request: ChatRequest) -> str:
        fp = fingerprint(request)
        cached = self.cache.get(fp)
        if cached is not None:
            self.hits += 1
            return cached
        self.misses += 1
        response = self.inner.complete(request)
        self.cache.put(fp, response)
        return response


@dataclass
class Backends:
    """The backend bundle threaded through pipeline and strategy runs."""

    chat: ChatBackend
    embed: EmbeddingBackend | None = None
    judge: ChatBackend | None = None

    def judge_or_chat(self) -> ChatBackend:
        return self.judge if self.judge is not None else self.chat
