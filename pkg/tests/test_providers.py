from __future__ import annotations

import json

import httpx
import pytest

from candor.errors import (
    EmptyAudio,
    FixtureExhausted,
    FixtureMismatch,
    HttpError,
    Timeout,
)
from candor.providers import (
    FixtureEntry,
    FixtureScript,
    ProviderConfig,
    ProviderFactory,
    RemoteGateway,
    synthesis_sentinel,
)

from conftest import gateway_for


class TestScripted:
    def test_entries_consumed_in_order(self):
        gateway = gateway_for([("chat", "IS"), ("transcribe", "Hello, I'm Dr. Lee.")])
        assert gateway.chat("prompt") == "IS"
        assert gateway.transcribe(b"\x00\x01") == "Hello, I'm Dr. Lee."
        assert gateway.captured[0] == {"capability": "chat", "prompt": "prompt"}

    def test_exhaustion(self):
        gateway = gateway_for([("chat", "IS")])
        gateway.chat("p")
        with pytest.raises(FixtureExhausted):
            gateway.chat("p")

    def test_capability_mismatch(self):
        gateway = gateway_for([("transcribe", "text")])
        with pytest.raises(FixtureMismatch):
            gateway.chat("p")

    def test_empty_audio(self):
        gateway = gateway_for([("transcribe", "text")])
        with pytest.raises(EmptyAudio):
            gateway.transcribe(b"")

    def test_independent_cursors_same_script(self):
        script = FixtureScript((FixtureEntry("chat", "A"), FixtureEntry("chat", "B")))
        factory = ProviderFactory.scripted(script)
        g1, g2 = factory.session_gateway(), factory.session_gateway()
        assert [g1.chat("x"), g1.chat("x")] == ["A", "B"]
        assert [g2.chat("x"), g2.chat("x")] == ["A", "B"]

    def test_fixture_file_round_trip(self, tmp_path):
        script = FixtureScript((FixtureEntry("chat", "A"),))
        path = tmp_path / "fixture.json"
        path.write_text(json.dumps(script.to_dict()))
        assert FixtureScript.load(path) == script

    def test_synthesize_does_not_consume_entries(self):
        gateway = gateway_for([("chat", "A")])
        audio = gateway.synthesize("text", "calm")
        assert audio == synthesis_sentinel("text", "calm")
        assert gateway.chat("x") == "A"

    def test_bad_capability_rejected(self):
        with pytest.raises(Exception):
            FixtureEntry("synthesize", "x")


def remote_gateway(handler, *, retry_budget: int = 2, monkeypatch=None) -> RemoteGateway:
    config = ProviderConfig(kind="remote", retry_budget=retry_budget, timeout_ms=200)
    transport = httpx.MockTransport(handler)
    return RemoteGateway(config, transport=transport, sleep=lambda _s: None)


@pytest.fixture
def remote_env(monkeypatch):
    monkeypatch.setenv("CANDOR_CHAT_ENDPOINT", "https://chat.test/v1")
    monkeypatch.setenv("CANDOR_CHAT_KEY", "chat-secret")
    monkeypatch.setenv("CANDOR_TTS_ENDPOINT", "https://tts.test/v1")
    monkeypatch.setenv("CANDOR_STT_ENDPOINT", "https://stt.test/v1")


class TestRemote:
    def test_chat_wire_format(self, remote_env):
        seen = {}

        def handler(request: httpx.Request) -> httpx.Response:
            seen["auth"] = request.headers.get("authorization")
            seen["body"] = json.loads(request.content)
            return httpx.Response(
                200, json={"choices": [{"message": {"content": "EE"}}]}
            )

        gateway = remote_gateway(handler)
        assert gateway.chat("classify this") == "EE"
        assert seen["auth"] == "Bearer chat-secret"
        assert seen["body"] == {"messages": [{"role": "user", "content": "classify this"}]}

    def test_retry_then_success(self, remote_env):
        calls = {"n": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            if calls["n"] == 1:
                return httpx.Response(500, text="boom")
            return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

        gateway = remote_gateway(handler, retry_budget=1)
        assert gateway.chat("p") == "ok"
        assert calls["n"] == 2

    def test_retries_exhausted(self, remote_env):
        def handler(request: httpx.Request) -> httpx.Response:
            return httpx.Response(503, text="down")

        gateway = remote_gateway(handler, retry_budget=2)
        with pytest.raises(HttpError) as err:
            gateway.chat("p")
        assert err.value.status == 503

    def test_timeout_after_budget(self, remote_env):
        calls = {"n": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            raise httpx.ConnectTimeout("no route")

        gateway = remote_gateway(handler, retry_budget=2)
        with pytest.raises(Timeout):
            gateway.chat("p")
        assert calls["n"] == 3  # initial call plus two retries

    def test_client_error_not_retried(self, remote_env):
        calls = {"n": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            return httpx.Response(400, text="bad request")

        gateway = remote_gateway(handler)
        with pytest.raises(HttpError):
            gateway.chat("p")
        assert calls["n"] == 1

    def test_synthesize_binary_out(self, remote_env):
        def handler(request: httpx.Request) -> httpx.Response:
            body = json.loads(request.content)
            assert body == {"input": "<speak>Hi.</speak>", "instructions": "calm"}
            return httpx.Response(200, content=b"\x01\x02wav")

        gateway = remote_gateway(handler)
        assert gateway.synthesize("<speak>Hi.</speak>", "calm") == b"\x01\x02wav"

    def test_transcribe_multipart_in(self, remote_env):
        def handler(request: httpx.Request) -> httpx.Response:
            assert b"audio.wav" in request.content
            return httpx.Response(200, json={"text": "Hello, I'm Dr. Lee."})

        gateway = remote_gateway(handler)
        assert gateway.transcribe(b"RIFFxxxx") == "Hello, I'm Dr. Lee."

    def test_missing_endpoint_env(self, monkeypatch):
        monkeypatch.delenv("CANDOR_CHAT_ENDPOINT", raising=False)
        gateway = remote_gateway(lambda request: httpx.Response(200))
        with pytest.raises(HttpError):
            gateway.chat("p")


class TestConfig:
    def test_scripted_requires_fixture_path(self):
        with pytest.raises(Exception):
            ProviderConfig(kind="scripted", fixture_path=None)

    def test_unknown_keys_rejected(self):
        with pytest.raises(Exception):
            ProviderConfig.from_dict({"kind": "remote", "nope": 1})
