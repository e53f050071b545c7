"""Completion backends: one live HTTP client plus synthetic stand-ins.

Every backend exposes the same call shape: prompt text in, transcript text
out.  The synthetic backends (oracle echo, corrupting, replay) exist so
the whole harness can be exercised and validated offline; the live
backend speaks the common chat-completions JSON shape against whatever
base URL it is pointed at.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import requests

from cotbench.extraction import format_result
from cotbench.tasks import OracleAnswer, TaskInstance

API_KEY_ENV = "COTBENCH_API_KEY"
BASE_URL_ENV = "COTBENCH_BASE_URL"
DEFAULT_BASE_URL = "https://api.openai.com/v1"


class BackendError(Exception):
    """Base for completion-layer failures; subclasses name the cause."""

    def __init__(self, message: str = "", attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class AuthError(BackendError):
    pass


class RateLimited(BackendError):
    pass


class Timeout(BackendError):
    pass


class ProtocolError(BackendError):
    pass


class MissingRecording(BackendError):
    pass


@dataclass(frozen=True)
class CompletionConfig:
    """Decoding and transport settings carried on every call record."""

    model: str = "gpt-4o-mini"
    temperature: float = 0.0
    max_tokens: int = 4096
    timeout_s: float = 120.0
    max_attempts: int = 3
    backoff_s: tuple[float, ...] = (1.0, 2.0, 4.0)

    def decoding_fields(self) -> dict:
        """The fields that determine the output (used for replay keys)."""
        return {
            "model": self.model,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "timeout_s": self.timeout_s,
            "max_attempts": self.max_attempts,
            "backoff_s": list(self.backoff_s),
        }

    @staticmethod
    def from_json(data: dict) -> "CompletionConfig":
        return CompletionConfig(
            model=data.get("model", "gpt-4o-mini"),
            temperature=data.get("temperature", 0.0),
            max_tokens=data.get("max_tokens", 4096),
            timeout_s=data.get("timeout_s", 120.0),
            max_attempts=data.get("max_attempts", 3),
            backoff_s=tuple(data.get("backoff_s", (1.0, 2.0, 4.0))),
        )


@dataclass(frozen=True)
class CallContext:
    """Per-call binding handed to backends that answer from ground truth."""

    instance: TaskInstance
    oracle: OracleAnswer


class ModelBackend:
    """Interface: complete(prompt, cfg) -> transcript text, or raise a BackendError."""

    name = "abstract"

    def complete(
        self, prompt: str, cfg: CompletionConfig, context: CallContext | None = None
    ) -> str:
        raise NotImplementedError

    def complete_with_meta(
        self, prompt: str, cfg: CompletionConfig, context: CallContext | None = None
    ) -> tuple[str, int]:
        """Like complete, additionally reporting how many attempts were spent."""
        return self.complete(prompt, cfg, context), 1


def _echo_transcript(oracle: OracleAnswer) -> str:
    return (
        "Working through the instructions on the given input.\n"
        "The final output is:\n" + format_result(oracle)
    )


class OracleEchoBackend(ModelBackend):
    """Answers every prompt with its bound oracle answer; accuracy is 1 by construction."""

    name = "echo"

    def complete(self, prompt, cfg, context=None):
        if context is None:
            raise ProtocolError("echo backend needs a bound instance and oracle")
        return _echo_transcript(context.oracle)


def _transpose(text: str) -> str:
    """A wrong-but-well-typed variant of a text answer."""
    for i in range(len(text) - 1):
        if text[i] != text[i + 1]:
            return text[:i] + text[i + 1] + text[i] + text[i + 2 :]
    # all characters equal: swap the first for a different letter
    if not text:
        return "x"
    substitute = "b" if text[0] != "b" else "a"
    return substitute + text[1:]


class CorruptingBackend(ModelBackend):
    """Echoes the oracle, except with probability p emits a typed wrong answer.

    Corruption is decided per prompt from a content hash, not from call
    order, so outcomes do not depend on worker scheduling.
    """

    name = "corrupt"

    def __init__(self, p: float, seed: int = 0):
        if not 0.0 <= p <= 1.0:
            raise ValueError("corruption rate must be in [0, 1]")
        self.p = p
        self.seed = seed

    def _rng(self, prompt: str) -> random.Random:
        digest = hashlib.sha256(f"{self.seed}|{prompt}".encode("utf-8")).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))

    def complete(self, prompt, cfg, context=None):
        if context is None:
            raise ProtocolError("corrupting backend needs a bound instance and oracle")
        rng = self._rng(prompt)
        answer = context.oracle
        if rng.random() < self.p:
            if isinstance(answer.value, bool):
                answer = OracleAnswer.of_bool(not answer.value)
            elif isinstance(answer.value, int):
                answer = OracleAnswer.of_int(answer.value + rng.choice((-1, 1)))
            else:
                answer = OracleAnswer.of_text(_transpose(answer.value))
        return _echo_transcript(answer)


class TranscriptStore:
    """Keyed recording of transcripts: content-hash(prompt, decoding config) -> text."""

    def __init__(self):
        self._entries: dict[str, dict] = {}
        self._lock = threading.Lock()

    @staticmethod
    def key_for(prompt: str, cfg: CompletionConfig) -> str:
        payload = json.dumps(
            {"prompt": prompt, "config": cfg.decoding_fields()},
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def __len__(self) -> int:
        return len(self._entries)

    def put(self, prompt: str, cfg: CompletionConfig, transcript: str) -> str:
        key = self.key_for(prompt, cfg)
        with self._lock:
            self._entries[key] = {
                "key": key,
                "prompt": prompt,
                "config": cfg.decoding_fields(),
                "transcript": transcript,
            }
        return key

    def get(self, prompt: str, cfg: CompletionConfig) -> str:
        key = self.key_for(prompt, cfg)
        try:
            return self._entries[key]["transcript"]
        except KeyError:
            raise MissingRecording(f"no transcript recorded under {key[:12]}...") from None

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for key in sorted(self._entries):
                fh.write(json.dumps(self._entries[key], ensure_ascii=False) + "\n")

    @staticmethod
    def load(path: str | Path) -> "TranscriptStore":
        store = TranscriptStore()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                store._entries[entry["key"]] = entry
        return store


class ReplayBackend(ModelBackend):
    """Serves transcripts from a store by exact key; never goes to the network."""

    name = "replay"

    def __init__(self, store: TranscriptStore):
        self.store = store

    def complete(self, prompt, cfg, context=None):
        return self.store.get(prompt, cfg)


class _RateLimiter:
    """Blocking requests-per-minute limiter shared across worker threads."""

    def __init__(self, per_minute: int | None):
        self.per_minute = per_minute
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self):
        if not self.per_minute:
            return
        while True:
            with self._lock:
                now = time.monotonic()
                while self._stamps and now - self._stamps[0] > 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self.per_minute:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            time.sleep(max(wait, 0.01))


class LiveBackend(ModelBackend):
    """Chat-completions HTTP client with retries, a concurrency cap, and optional recording.

    Sends a single user message per call and returns the assistant text.
    Retries transport failures, 429s, and 5xx responses per the config's
    attempt budget; auth failures surface immediately.
    """

    name = "live"

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        max_concurrency: int = 8,
        requests_per_minute: int | None = None,
        record_store: TranscriptStore | None = None,
        session: requests.Session | None = None,
    ):
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV) or DEFAULT_BASE_URL).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        if not self.api_key:
            raise AuthError(f"no API key: set {API_KEY_ENV}")
        self._semaphore = threading.BoundedSemaphore(max_concurrency)
        self._limiter = _RateLimiter(requests_per_minute)
        self.record_store = record_store
        self._session = session or requests.Session()

    def complete(self, prompt, cfg, context=None):
        return self.complete_with_meta(prompt, cfg, context)[0]

    def complete_with_meta(self, prompt, cfg, context=None):
        body = {
            "model": cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_tokens,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        url = f"{self.base_url}/chat/completions"

        last_error: BackendError | None = None
        for attempt in range(1, cfg.max_attempts + 1):
            if attempt > 1:
                delay = cfg.backoff_s[min(attempt - 2, len(cfg.backoff_s) - 1)]
                time.sleep(delay)
            self._limiter.acquire()
            with self._semaphore:
                try:
                    response = self._session.post(
                        url, json=body, headers=headers, timeout=cfg.timeout_s
                    )
                except requests.exceptions.Timeout:
                    last_error = Timeout(f"request timed out after {cfg.timeout_s}s", attempt)
                    continue
                except requests.exceptions.RequestException as exc:
                    last_error = ProtocolError(f"transport failure: {exc}", attempt)
                    continue
            if response.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials ({response.status_code})", attempt)
            if response.status_code == 429:
                last_error = RateLimited("rate limited (429)", attempt)
                continue
            if response.status_code >= 500:
                last_error = ProtocolError(f"server error ({response.status_code})", attempt)
                continue
            if response.status_code != 200:
                raise ProtocolError(f"unexpected status {response.status_code}", attempt)
            try:
                transcript = response.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ProtocolError(f"malformed completion payload: {exc}", attempt) from exc
            if transcript is None:
                raise ProtocolError("completion payload had no message content", attempt)
            if self.record_store is not None:
                self.record_store.put(prompt, cfg, transcript)
            return transcript, attempt
        assert last_error is not None
        raise last_error


def make_backend(spec: dict) -> ModelBackend:
    """Build a backend from an experiment spec's backend block."""
    kind = spec.get("kind", "echo")
    if kind == "echo":
        return OracleEchoBackend()
    if kind == "corrupt":
        return CorruptingBackend(p=spec.get("p", 0.0), seed=spec.get("seed", 0))
    if kind == "replay":
        path = spec.get("store")
        if not path:
            raise ValueError("replay backend needs a 'store' path")
        return ReplayBackend(TranscriptStore.load(path))
    if kind == "live":
        store = None
        if spec.get("record"):
            store = TranscriptStore()
        return LiveBackend(
            base_url=spec.get("base_url"),
            api_key=spec.get("api_key"),
            max_concurrency=spec.get("max_concurrency", 8),
            requests_per_minute=spec.get("requests_per_minute"),
            record_store=store,
        )
    raise ValueError(f"unknown backend kind {kind!r}")
