"""Uniform access to chat, speech synthesis, and speech recognition.

Two implementations share one interface: a remote HTTP client (chat
completion style JSON) and a deterministic scripted one driven by
fixture files. Fixture entries are consumed by ordinal position per
session, not matched on content, so template edits never invalidate a
fixture; content assertions go through the request-capture log instead.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Protocol

import httpx

from .errors import (
    CandorError,
    EmptyAudio,
    FixtureExhausted,
    FixtureMismatch,
    HttpError,
    Timeout,
)

logger = logging.getLogger(__name__)

CAPABILITIES = ("chat", "synthesize", "transcribe")

# Scripted fixtures only carry text-producing capabilities; synthesized
# audio is computed as a sentinel from its inputs.
SCRIPTABLE_CAPABILITIES = ("chat", "transcribe")


@dataclass(frozen=True)
class ProviderConfig:
    """Gateway configuration; secrets stay in the environment."""

    kind: str = "scripted"  # "remote" | "scripted"
    fixture_path: str | None = None
    timeout_ms: int = 30_000
    retry_budget: int = 2
    chat_endpoint_env: str = "CANDOR_CHAT_ENDPOINT"
    chat_key_env: str = "CANDOR_CHAT_KEY"
    tts_endpoint_env: str = "CANDOR_TTS_ENDPOINT"
    tts_key_env: str = "CANDOR_TTS_KEY"
    stt_endpoint_env: str = "CANDOR_STT_ENDPOINT"
    stt_key_env: str = "CANDOR_STT_KEY"

    def __post_init__(self) -> None:
        if self.kind not in ("remote", "scripted"):
            raise CandorError(f"provider kind must be remote or scripted, got {self.kind!r}")
        if self.kind == "scripted" and not self.fixture_path:
            raise CandorError("scripted provider requires fixture_path")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ProviderConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise CandorError(f"unknown provider config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class FixtureEntry:
    capability: str
    response: str

    def __post_init__(self) -> None:
        if self.capability not in SCRIPTABLE_CAPABILITIES:
            raise CandorError(
                f"fixture capability must be one of {SCRIPTABLE_CAPABILITIES}, "
                f"got {self.capability!r}"
            )


@dataclass(frozen=True)
class FixtureScript:
    """Ordered canned responses consumed sequentially by one session."""

    entries: tuple[FixtureEntry, ...]

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> FixtureScript:
        if not isinstance(data, dict) or "entries" not in data:
            raise CandorError("fixture file must be an object with an 'entries' list")
        entries = []
        for i, raw in enumerate(data["entries"]):
            if not isinstance(raw, dict) or "capability" not in raw or "response" not in raw:
                raise CandorError(f"fixture entry {i} must have capability and response")
            entries.append(FixtureEntry(str(raw["capability"]), str(raw["response"])))
        return cls(tuple(entries))

    @classmethod
    def load(cls, path: str | Path) -> FixtureScript:
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))

    def to_dict(self) -> dict[str, Any]:
        return {
            "entries": [
                {"capability": e.capability, "response": e.response} for e in self.entries
            ]
        }


class Gateway(Protocol):
    """Per-session provider handle."""

    def chat(self, prompt: str) -> str: ...

    def synthesize(self, text: str, instructions: str) -> bytes: ...

    def transcribe(self, audio: bytes) -> str: ...


def synthesis_sentinel(text: str, instructions: str) -> bytes:
    digest = hashlib.sha256(f"{text}\x1f{instructions}".encode("utf-8")).hexdigest()
    return b"tts-sentinel:" + digest.encode("ascii")


class ScriptedGateway:
    """Deterministic gateway: canned text responses, sentinel audio.

    Each instance owns one cursor; create one per session. Every request
    is captured so tests can assert on exact payloads.
    """

    def __init__(self, script: FixtureScript):
        self._script = script
        self._cursor = 0
        self.captured: list[dict[str, Any]] = []

    def _next(self, capability: str) -> str:
        if self._cursor >= len(self._script.entries):
            raise FixtureExhausted(
                f"fixture exhausted after {self._cursor} entries (wanted {capability})"
            )
        entry = self._script.entries[self._cursor]
        if entry.capability != capability:
            raise FixtureMismatch(
                f"fixture entry {self._cursor} is {entry.capability}, wanted {capability}"
            )
        self._cursor += 1
        return entry.response

    def chat(self, prompt: str) -> str:
        self.captured.append({"capability": "chat", "prompt": prompt})
        return self._next("chat")

    def synthesize(self, text: str, instructions: str) -> bytes:
        self.captured.append(
            {"capability": "synthesize", "text": text, "instructions": instructions}
        )
        return synthesis_sentinel(text, instructions)

    def transcribe(self, audio: bytes) -> str:
        if not audio:
            raise EmptyAudio("cannot transcribe empty audio")
        self.captured.append(
            {
                "capability": "transcribe",
                "audio_sha256": hashlib.sha256(audio).hexdigest(),
                "audio_bytes": len(audio),
            }
        )
        return self._next("transcribe")


class RemoteGateway:
    """HTTP gateway with a shared retry policy across capabilities."""

    def __init__(
        self,
        config: ProviderConfig,
        *,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._config = config
        self._client = httpx.Client(
            transport=transport, timeout=config.timeout_ms / 1000.0
        )
        self._sleep = sleep

    def _endpoint(self, endpoint_env: str, key_env: str) -> tuple[str, str | None]:
        endpoint = os.environ.get(endpoint_env)
        if not endpoint:
            raise HttpError(0, f"endpoint env var {endpoint_env} is not set")
        return endpoint, os.environ.get(key_env)

    def _request(self, capability: str, build: Callable[[], httpx.Request]) -> httpx.Response:
        attempts = self._config.retry_budget + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                self._sleep(0.25 * 2 ** (attempt - 1))
            started = time.monotonic()
            try:
                response = self._client.send(build())
            except httpx.TimeoutException as exc:
                last_error = Timeout(f"{capability} timed out: {exc}")
                continue
            except httpx.HTTPError as exc:
                last_error = HttpError(0, f"{capability} transport failure: {exc}")
                continue
            latency_ms = (time.monotonic() - started) * 1000
            digest = hashlib.sha256(response.content).hexdigest()[:16]
            logger.info(
                "provider %s status=%s latency_ms=%.1f payload_sha=%s",
                capability, response.status_code, latency_ms, digest,
            )
            if response.status_code >= 500:
                last_error = HttpError(response.status_code, response.text[:200])
                continue
            if response.status_code >= 400:
                raise HttpError(response.status_code, response.text[:200])
            return response
        assert last_error is not None
        raise last_error

    def _headers(self, key: str | None) -> dict[str, str]:
        return {"Authorization": f"Bearer {key}"} if key else {}

    def chat(self, prompt: str) -> str:
        endpoint, key = self._endpoint(
            self._config.chat_endpoint_env, self._config.chat_key_env
        )
        payload = {"messages": [{"role": "user", "content": prompt}]}
        response = self._request(
            "chat",
            lambda: self._client.build_request(
                "POST", endpoint, json=payload, headers=self._headers(key)
            ),
        )
        body = response.json()
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise HttpError(response.status_code, "chat response missing choices") from None

    def synthesize(self, text: str, instructions: str) -> bytes:
        endpoint, key = self._endpoint(
            self._config.tts_endpoint_env, self._config.tts_key_env
        )
        payload = {"input": text, "instructions": instructions}
        response = self._request(
            "synthesize",
            lambda: self._client.build_request(
                "POST", endpoint, json=payload, headers=self._headers(key)
            ),
        )
        return response.content

    def transcribe(self, audio: bytes) -> str:
        if not audio:
            raise EmptyAudio("cannot transcribe empty audio")
        endpoint, key = self._endpoint(
            self._config.stt_endpoint_env, self._config.stt_key_env
        )
        response = self._request(
            "transcribe",
            lambda: self._client.build_request(
                "POST",
                endpoint,
                files={"file": ("audio.wav", audio, "audio/wav")},
                headers=self._headers(key),
            ),
        )
        body = response.json()
        try:
            return body["text"]
        except (KeyError, TypeError):
            raise HttpError(response.status_code, "transcription response missing text") from None


class ProviderFactory:
    """Builds one gateway per session (scripted cursors are per-session)."""

    def __init__(
        self,
        config: ProviderConfig,
        *,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._config = config
        self._script: FixtureScript | None = None
        self._remote: RemoteGateway | None = None
        if config.kind == "scripted":
            assert config.fixture_path is not None
            self._script = FixtureScript.load(config.fixture_path)
        else:
            self._remote = RemoteGateway(config, transport=transport, sleep=sleep)

    @classmethod
    def scripted(cls, script: FixtureScript) -> ProviderFactory:
        factory = cls.__new__(cls)
        factory._config = ProviderConfig(kind="scripted", fixture_path="<inline>")
        factory._script = script
        factory._remote = None
        return factory

    @property
    def config(self) -> ProviderConfig:
        return self._config

    def session_gateway(self) -> Gateway:
        if self._script is not None:
            return ScriptedGateway(self._script)
        assert self._remote is not None
        return self._remote
