"""HTTP surface for the web client and automation.

All request and response bodies use the canonical JSON representation
of the domain types. State-changing endpoints honor a client-supplied
Idempotency-Key header, and session events are pushed over a
server-sent-event stream so feedback can render while patient audio is
still synthesizing.
"""

from __future__ import annotations

import io
import threading
import time
import uuid
import wave
from dataclasses import dataclass
from typing import Any, Iterator

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse

from .config import AppConfig
from .domain import CaseScenario, canonical_json
from .errors import (
    CandorError,
    DomainValidationError,
    NoTurns,
    ProviderError,
    ProviderUnavailable,
    SessionEnded,
    SessionNotFound,
    StructureInvalid,
    TooManySessions,
    TurnInFlight,
)
from .orchestrator import CaseLibrary, SessionOptions, SessionOrchestrator
from .profile import extract_case

STREAM_KINDS = (
    "transcript_partial",
    "clinician_turn",
    "turn_feedback",
    "patient_text",
    "patient_audio_ready",
    "session_ended",
    "error",
)


@dataclass(frozen=True)
class ApiEvent:
    """One server-pushed event; seq is strictly increasing per session."""

    session_id: str
    seq: int
    kind: str
    payload: dict[str, Any]

    def render_sse(self) -> str:
        data = canonical_json({"session_id": self.session_id, "seq": self.seq,
                               "kind": self.kind, "payload": self.payload})
        return f"id: {self.seq}\nevent: {self.kind}\ndata: {data}\n\n"


def _error_body(code: str, message: str) -> dict[str, str]:
    return {"code": code, "message": message}


def validate_wav(data: bytes) -> None:
    """Accept only single-channel 16 kHz 16-bit PCM WAV."""
    try:
        with wave.open(io.BytesIO(data), "rb") as wav:
            channels = wav.getnchannels()
            rate = wav.getframerate()
            width = wav.getsampwidth()
            comp = wav.getcomptype()
    except (wave.Error, EOFError):
        raise DomainValidationError("audio must be a WAV container") from None
    if comp != "NONE":
        raise DomainValidationError("audio must be uncompressed PCM")
    if channels != 1 or rate != 16000 or width != 2:
        raise DomainValidationError(
            "audio must be single-channel 16 kHz 16-bit PCM WAV"
        )


class _IdempotencyCache:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._cache: dict[tuple[str, str], tuple[int, bytes, str]] = {}

    def get(self, path: str, key: str) -> tuple[int, bytes, str] | None:
        with self._lock:
            return self._cache.get((path, key))

    def put(self, path: str, key: str, status: int, body: bytes, media: str) -> None:
        with self._lock:
            self._cache[(path, key)] = (status, body, media)


def create_app(
    orchestrator: SessionOrchestrator,
    library: CaseLibrary,
    config: AppConfig | None = None,
) -> FastAPI:
    config = config or AppConfig()
    app = FastAPI(title="disclosure practice service", docs_url=None, redoc_url=None)
    idempotency = _IdempotencyCache()

    def _auth_error(request: Request) -> JSONResponse | None:
        if config.api_token is None or request.url.path == "/healthz":
            return None
        header = request.headers.get("authorization", "")
        if header == f"Bearer {config.api_token}":
            return None
        return JSONResponse(status_code=401, content=_error_body("Unauthorized", "bad token"))

    @app.middleware("http")
    async def auth_middleware(request: Request, call_next):
        denied = _auth_error(request)
        if denied is not None:
            return denied
        return await call_next(request)

    @app.exception_handler(CandorError)
    async def candor_error_handler(request: Request, exc: CandorError):
        if isinstance(exc, SessionNotFound):
            return JSONResponse(status_code=404, content=_error_body("NotFound", str(exc)))
        if isinstance(exc, TurnInFlight):
            return JSONResponse(status_code=409, content=_error_body("TurnInFlight", str(exc)))
        if isinstance(exc, SessionEnded):
            return JSONResponse(status_code=409, content=_error_body("SessionEnded", str(exc)))
        if isinstance(exc, NoTurns):
            return JSONResponse(status_code=400, content=_error_body("NoTurns", str(exc)))
        if isinstance(exc, TooManySessions):
            return JSONResponse(
                status_code=503,
                content=_error_body("TooManySessions", str(exc)),
                headers={"Retry-After": "30"},
            )
        if isinstance(exc, ProviderUnavailable):
            return JSONResponse(
                status_code=503,
                content=_error_body("ProviderUnavailable", str(exc)),
                headers={"Retry-After": "5"},
            )
        if isinstance(exc, ProviderError):
            return JSONResponse(status_code=503, content=_error_body("ProviderError", str(exc)))
        if isinstance(exc, (DomainValidationError, StructureInvalid)):
            return JSONResponse(status_code=400, content=_error_body("Validation", str(exc)))
        return JSONResponse(status_code=500, content=_error_body("Internal", str(exc)))

    def _idempotent(request: Request, build: Any) -> Response:
        key = request.headers.get("idempotency-key")
        path = request.url.path
        if key:
            cached = idempotency.get(path, key)
            if cached:
                status, body, media = cached
                return Response(content=body, status_code=status, media_type=media)
        response: Response = build()
        if key:
            idempotency.put(path, key, response.status_code, response.body, response.media_type or "application/json")
        return response

    def _json(data: Any, status: int = 200) -> Response:
        return Response(
            content=canonical_json(data),
            status_code=status,
            media_type="application/json",
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/cases")
    def list_cases(specialty: str | None = None):
        return _json({"cases": library.summaries(specialty)})

    @app.post("/cases")
    async def create_case(request: Request):
        content_type = request.headers.get("content-type", "")
        description: str | None = None
        body: dict[str, Any] = {}
        gateway = orchestrator.provider_factory.session_gateway()
        if content_type.startswith("multipart/form-data"):
            # spoken case description: transcribe, then extract as usual
            form = await request.form()
            upload = form.get("audio")
            if upload is None or isinstance(upload, str):
                raise DomainValidationError("multipart case body must include an audio file")
            audio = await upload.read()
            if len(audio) > config.max_upload_bytes:
                return JSONResponse(
                    status_code=413,
                    content=_error_body("PayloadTooLarge", "audio exceeds the upload limit"),
                )
            validate_wav(audio)
            description = gateway.transcribe(audio)
        else:
            body = await request.json()
            if not isinstance(body, dict):
                raise DomainValidationError("request body must be a JSON object")
            if "description" in body:
                description = str(body["description"])

        def build() -> Response:
            if description is not None:
                case = extract_case(description, gateway, orchestrator.templates)
            else:
                data = dict(body)
                data["origin"] = "bespoke"
                if not data.get("case_id"):
                    data["case_id"] = f"bespoke-{uuid.uuid4().hex[:12]}"
                case = CaseScenario.from_dict(data)
            library.add(case)
            return _json({"case": case.to_dict()}, status=201)

        return _idempotent(request, build)

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await request.json()
        if not isinstance(body, dict) or "case_id" not in body:
            raise DomainValidationError("request body must include case_id")
        case = library.get(str(body["case_id"]))
        raw_options = body.get("options") or {}
        if not isinstance(raw_options, dict):
            raise DomainValidationError("options must be an object")
        defaults = {
            "window": config.window,
            "eta": str(config.eta),
            "turn_budget": config.turn_budget,
        }
        options = SessionOptions.from_dict({**defaults, **raw_options})

        def build() -> Response:
            state = orchestrator.create_session(case, options)
            return _json({"session": state.to_dict()}, status=201)

        return _idempotent(request, build)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _json({"session": orchestrator.get_session(session_id).to_dict()})

    @app.post("/sessions/{session_id}/turns")
    async def submit_turn(session_id: str, request: Request):
        content_type = request.headers.get("content-type", "")
        text: str | None = None
        audio: bytes | None = None
        if content_type.startswith("application/json"):
            body = await request.json()
            if not isinstance(body, dict) or not isinstance(body.get("text"), str):
                raise DomainValidationError("JSON turn body must include a text string")
            text = body["text"]
        elif content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("audio")
            if upload is None or isinstance(upload, str):
                raise DomainValidationError("multipart turn body must include an audio file")
            audio = await upload.read()
            if len(audio) > config.max_upload_bytes:
                return JSONResponse(
                    status_code=413,
                    content=_error_body("PayloadTooLarge", "audio exceeds the upload limit"),
                )
            validate_wav(audio)
        else:
            raise DomainValidationError("turns accept JSON text or multipart audio")

        def build() -> Response:
            result = orchestrator.submit_clinician_turn(session_id, text=text, audio=audio)
            return _json({"result": result.to_dict()})

        return _idempotent(request, build)

    @app.post("/sessions/{session_id}/end")
    async def end_session(session_id: str, request: Request):
        def build() -> Response:
            overall = orchestrator.end_session(session_id)
            return _json({"overall": overall.to_dict()})

        return _idempotent(request, build)

    @app.get("/sessions/{session_id}/feedback")
    def session_feedback(session_id: str):
        state = orchestrator.get_session(session_id)
        if state.overall is None:
            raise NoTurns("overall feedback has not been generated yet")
        return _json({"overall": state.overall.to_dict()})

    @app.get("/sessions/{session_id}/events")
    def session_events(session_id: str, after: int = -1, follow: bool = True):
        orchestrator.get_session(session_id)  # 404 for unknown ids

        def stream() -> Iterator[str]:
            cursor = after
            ended = False
            while True:
                records = orchestrator.events(session_id, after_seq=cursor)
                for rec in records:
                    cursor = rec["seq"]
                    if rec["kind"] not in STREAM_KINDS:
                        continue  # creation record predates any subscription
                    event = ApiEvent(session_id, rec["seq"], rec["kind"], rec["payload"])
                    yield event.render_sse()
                    if rec["kind"] == "session_ended":
                        ended = True
                if ended or not follow:
                    return
                if orchestrator.get_session(session_id).phase == "ended" and not records:
                    return
                time.sleep(0.05)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/audio/{blob_ref}")
    def get_audio(blob_ref: str):
        data = orchestrator.get_audio(blob_ref)
        return Response(content=data, media_type="application/octet-stream")

    return app
