"""Turn state machine: one atomic transaction per clinician turn.

Each submitted turn runs the full pipeline (transcribe, partition
update, stage classification, turn feedback, digest, patient reply,
speech synthesis) against a working copy; nothing is persisted or
visible until every step has finished, so a fault at any step leaves
the session exactly as it was. Committed steps append to a hash-chained
event log from which the session state is reconstructible.
"""

from __future__ import annotations

import hashlib
import json
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import asymmetry, patient as patient_agent, stages as stage_classifier
from .asymmetry import KnowledgePartition
from .domain import (
    AffectiveState,
    CaseScenario,
    EvaluatorDigest,
    OverallFeedback,
    PatientUtterance,
    SessionState,
    StageCode,
    StageLabelSet,
    Turn,
    TurnFeedback,
    canonical_json,
)
from .errors import (
    CorruptLog,
    DomainValidationError,
    InvalidCase,
    NoTurns,
    SessionEnded,
    SessionNotFound,
    StructureInvalid,
    TooManySessions,
    TurnInFlight,
)
from .evaluator import EvaluatorState, generate_overall_feedback, generate_turn_feedback
from .patient import PatientContext
from .providers import ProviderFactory
from .stages import StageRequest
from .templates import PromptTemplates, load_stopwords, load_templates, stopwords_hash

GENESIS_HASH = "0" * 64

EVENT_KINDS = (
    "session_created",
    "transcript_partial",
    "clinician_turn",
    "turn_feedback",
    "patient_text",
    "patient_audio_ready",
    "session_ended",
    "error",
)

FEEDBACK_MODES = ("turn_by_turn", "overall_only", "both")


@dataclass(frozen=True)
class SessionOptions:
    window: int = 12
    eta: Fraction = Fraction(1, 5)
    turn_budget: int = 5
    feedback_mode: str = "both"
    deterministic_clock: bool = False
    session_id: str | None = None
    initial_affect: dict[str, Fraction] | None = None

    def __post_init__(self) -> None:
        if self.window < 1:
            raise DomainValidationError("window must be at least 1")
        if self.turn_budget < 1:
            raise DomainValidationError("turn_budget must be at least 1")
        if not 0 < self.eta <= 1:
            raise DomainValidationError("eta must be in (0, 1]")
        if self.feedback_mode not in FEEDBACK_MODES:
            raise DomainValidationError(f"feedback_mode must be one of {FEEDBACK_MODES}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "window": self.window,
            "eta": str(self.eta),
            "turn_budget": self.turn_budget,
            "feedback_mode": self.feedback_mode,
            "deterministic_clock": self.deterministic_clock,
            "initial_affect": (
                {k: str(v) for k, v in sorted(self.initial_affect.items())}
                if self.initial_affect
                else None
            ),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SessionOptions:
        return cls(
            window=int(data.get("window", 12)),
            eta=Fraction(str(data.get("eta", "1/5"))),
            turn_budget=int(data.get("turn_budget", 5)),
            feedback_mode=str(data.get("feedback_mode", "both")),
            deterministic_clock=bool(data.get("deterministic_clock", False)),
            session_id=data.get("session_id"),
            initial_affect=(
                {k: Fraction(str(v)) for k, v in data["initial_affect"].items()}
                if data.get("initial_affect")
                else None
            ),
        )


# --- clocks -------------------------------------------------------------------

class RealClock:
    def now(self) -> str:
        return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class LogicalClock:
    """Deterministic clock: a fixed epoch advanced one second per reading."""

    def __init__(self, start: str = "2025-01-01T00:00:00Z"):
        self._current = datetime.strptime(start, "%Y-%m-%dT%H:%M:%SZ").replace(
            tzinfo=timezone.utc
        )

    def now(self) -> str:
        stamp = self._current.strftime("%Y-%m-%dT%H:%M:%SZ")
        self._current += timedelta(seconds=1)
        return stamp


class ReplayClock:
    """Feeds back the timestamps recorded in an existing log."""

    def __init__(self, stamps: list[str]):
        self._stamps = list(stamps)
        self._i = 0

    def now(self) -> str:
        if self._i >= len(self._stamps):
            raise CorruptLog("log has fewer timestamps than the replay needs")
        stamp = self._stamps[self._i]
        self._i += 1
        return stamp


# --- event log ----------------------------------------------------------------

def record_hash(seq: int, kind: str, payload: dict[str, Any], prev: str) -> str:
    body = canonical_json({"seq": seq, "kind": kind, "payload": payload})
    return hashlib.sha256(f"{prev}|{body}".encode("utf-8")).hexdigest()


class EventLog:
    """Append-only JSON-lines log with a per-record hash chain."""

    def __init__(self, path: Path):
        self.path = path

    def append_all(self, records: list[dict[str, Any]]) -> None:
        lines = [canonical_json(rec) + "\n" for rec in records]
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.writelines(lines)
            fh.flush()

    @staticmethod
    def read(path: Path) -> list[dict[str, Any]]:
        """Read and verify records; a truncated final line is tolerated."""
        records: list[dict[str, Any]] = []
        raw_lines = path.read_text("utf-8").split("\n")
        prev = GENESIS_HASH
        for i, line in enumerate(raw_lines):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                remainder = "".join(raw_lines[i + 1:]).strip()
                if remainder:
                    raise CorruptLog(f"unreadable record at line {i + 1}") from None
                break  # torn final write
            try:
                expected = record_hash(rec["seq"], rec["kind"], rec["payload"], prev)
            except (KeyError, TypeError):
                raise CorruptLog(f"malformed record at line {i + 1}") from None
            if rec.get("prev") != prev or rec.get("hash") != expected:
                raise CorruptLog(f"hash chain mismatch at seq {rec.get('seq')}")
            if rec["seq"] != len(records):
                raise CorruptLog(f"non-contiguous seq at line {i + 1}")
            records.append(rec)
            prev = rec["hash"]
        return records


# --- results ------------------------------------------------------------------

@dataclass(frozen=True)
class TurnResult:
    clinician_turn: Turn
    stages: StageLabelSet
    feedback: TurnFeedback | None
    digest: EvaluatorDigest
    patient_turn: Turn
    utterance: PatientUtterance
    overall: OverallFeedback | None  # set when the patient closed the session
    first_seq: int
    last_seq: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "clinician_turn": self.clinician_turn.to_dict(),
            "stages": self.stages.to_dict(),
            "feedback": self.feedback.to_dict() if self.feedback else None,
            "feedback_available": self.feedback is not None,
            "digest": self.digest.to_dict(),
            "patient_turn": self.patient_turn.to_dict(),
            "utterance": self.utterance.to_dict(),
            "overall": self.overall.to_dict() if self.overall else None,
            "first_seq": self.first_seq,
            "last_seq": self.last_seq,
        }


class _Runtime:
    """Mutable per-session bookkeeping behind the orchestrator lock."""

    def __init__(self, state, evaluator, partition, gateway, clock, options, log):
        self.state: SessionState = state
        self.evaluator: EvaluatorState = evaluator
        self.partition: KnowledgePartition = partition
        self.gateway = gateway
        self.clock = clock
        self.options: SessionOptions = options
        self.log: EventLog = log
        self.records: list[dict[str, Any]] = []
        self.prev_hash = GENESIS_HASH
        self.lock = threading.Lock()


class SessionOrchestrator:
    """Owns session lifecycle, the turn pipeline, and persistence."""

    def __init__(
        self,
        provider_factory: ProviderFactory,
        data_dir: str | Path,
        templates: PromptTemplates | None = None,
        stopwords: frozenset[str] | None = None,
        max_sessions: int | None = None,
    ):
        self.provider_factory = provider_factory
        self.data_dir = Path(data_dir)
        self.templates = templates or load_templates()
        self.stopwords = stopwords or load_stopwords()
        self.max_sessions = max_sessions
        self._sessions: dict[str, _Runtime] = {}
        self._registry_lock = threading.Lock()

    # -- lifecycle --

    def create_session(self, case: CaseScenario, options: SessionOptions | None = None) -> SessionState:
        options = options or SessionOptions()
        session_id = options.session_id or uuid.uuid4().hex
        clock = LogicalClock() if options.deterministic_clock else RealClock()
        return self._create(case, options, session_id, clock)

    def _create(self, case, options, session_id, clock) -> SessionState:
        if not isinstance(case, CaseScenario):
            raise InvalidCase("case must be a CaseScenario")
        with self._registry_lock:
            if session_id in self._sessions:
                raise InvalidCase(f"session id already exists: {session_id}")
            if self.max_sessions is not None:
                active = sum(1 for r in self._sessions.values() if r.state.phase != "ended")
                if active >= self.max_sessions:
                    raise TooManySessions(f"session limit of {self.max_sessions} reached")
        affect = AffectiveState.initial(options.initial_affect or case.initial_affect)
        state = SessionState(
            session_id=session_id,
            case=case,
            affect=affect,
            window=options.window,
            phase="created",
        )
        runtime = _Runtime(
            state=state,
            evaluator=EvaluatorState(),
            partition=KnowledgePartition.from_case(case, self.stopwords),
            gateway=self.provider_factory.session_gateway(),
            clock=clock,
            options=options,
            log=EventLog(self.data_dir / f"{session_id}.log"),
        )
        payload = {
            "session_id": session_id,
            "case": case.to_dict(),
            "options": options.to_dict(),
            "created_at": clock.now(),
            "template_id": self.templates.template_id,
            "stopwords_sha256": stopwords_hash(self.stopwords),
        }
        records = self._chain(runtime, [("session_created", payload)])
        runtime.log.append_all(records)
        runtime.records.extend(records)
        runtime.prev_hash = records[-1]["hash"]
        with self._registry_lock:
            self._sessions[session_id] = runtime
        return state

    def _chain(self, runtime: _Runtime, items: list[tuple[str, dict[str, Any]]]) -> list[dict[str, Any]]:
        records = []
        prev = runtime.prev_hash
        seq = len(runtime.records)
        for kind, payload in items:
            rec = {
                "seq": seq,
                "kind": kind,
                "payload": payload,
                "prev": prev,
                "hash": record_hash(seq, kind, payload, prev),
            }
            records.append(rec)
            prev = rec["hash"]
            seq += 1
        return records

    def _runtime(self, session_id: str) -> _Runtime:
        with self._registry_lock:
            runtime = self._sessions.get(session_id)
        if runtime is None:
            raise SessionNotFound(f"no such session: {session_id}")
        return runtime

    def get_session(self, session_id: str) -> SessionState:
        return self._runtime(session_id).state

    def events(self, session_id: str, after_seq: int = -1) -> list[dict[str, Any]]:
        runtime = self._runtime(session_id)
        return [rec for rec in runtime.records if rec["seq"] > after_seq]

    # -- blobs --

    def _blob_path(self, ref: str) -> Path:
        return self.data_dir / "blobs" / f"{ref}.bin"

    def get_audio(self, ref: str) -> bytes:
        # refs are content hashes; anything else never names a blob
        if not ref.isalnum():
            raise SessionNotFound(f"no such audio blob: {ref}")
        path = self._blob_path(ref)
        if not path.exists():
            raise SessionNotFound(f"no such audio blob: {ref}")
        return path.read_bytes()

    # -- the turn transaction --

    def submit_clinician_turn(
        self, session_id: str, *, text: str | None = None, audio: bytes | None = None
    ) -> TurnResult:
        if (text is None) == (audio is None):
            raise DomainValidationError("provide exactly one of text or audio")
        runtime = self._runtime(session_id)
        if not runtime.lock.acquire(blocking=False):
            raise TurnInFlight(f"session {session_id} already has a turn in flight")
        try:
            if runtime.state.phase == "ended":
                raise SessionEnded(f"session {session_id} has ended")
            return self._run_turn(runtime, text=text, audio=audio)
        finally:
            runtime.lock.release()

    def _run_turn(self, runtime: _Runtime, *, text: str | None, audio: bytes | None) -> TurnResult:
        state = runtime.state
        case = state.case
        gateway = runtime.gateway
        options = runtime.options
        blobs: list[tuple[str, bytes]] = []

        # 1. transcribe
        clinician_audio_ref = None
        if audio is not None:
            transcript = gateway.transcribe(audio)
            clinician_audio_ref = hashlib.sha256(audio).hexdigest()
            blobs.append((clinician_audio_ref, audio))
        else:
            assert text is not None
            transcript = text
        if not transcript.strip():
            raise DomainValidationError("clinician turn transcript is empty")

        # 2. knowledge partition
        partition = asymmetry.update_partition(runtime.partition, transcript, self.stopwords)

        # 3. stage classification of the message being responded to
        event_index = len(state.stage_history)
        if event_index == 0:
            labels = StageLabelSet(codes=(StageCode.START,), turn_index=0)
        else:
            patient_message = state.turns[-1].transcript
            labels = stage_classifier.classify_stage(
                StageRequest(patient_message, event_index, False),
                gateway,
                self.templates,
            )

        clinician_turn = Turn(
            index=len(state.turns),
            speaker="clinician",
            transcript=transcript,
            created_at=runtime.clock.now(),
            audio_ref=clinician_audio_ref,
        )

        # 4. turn feedback (degrades to unavailable, session continues)
        try:
            feedback, evaluator = generate_turn_feedback(
                runtime.evaluator, case, state.turns, clinician_turn, labels,
                gateway, self.templates,
            )
        except StructureInvalid:
            feedback = None
            evaluator = runtime.evaluator.with_stages(labels)

        # 5. sanitized digest
        if feedback is not None:
            digest = asymmetry.make_digest(feedback, partition, self.stopwords)
        else:
            digest = asymmetry.neutral_digest(clinician_turn.index)

        # 6. patient reply
        ctx = PatientContext(
            case=case,
            partition=partition,
            affect=state.affect,
            memory=(state.turns + (clinician_turn,))[-options.window:],
            patient_turn_count=state.patient_turn_count,
            window=options.window,
            eta=options.eta,
            turn_budget=options.turn_budget,
        )
        utterance, new_ctx = patient_agent.generate_patient_utterance(
            ctx, digest, gateway, self.templates
        )

        # 7. speech synthesis (text-only on provider outage)
        utterance, audio_bytes = patient_agent.synthesize_patient_audio(utterance, gateway)
        patient_audio_ref = None
        if audio_bytes is not None:
            patient_audio_ref = hashlib.sha256(audio_bytes).hexdigest()
            blobs.append((patient_audio_ref, audio_bytes))
            utterance = PatientUtterance(
                ssml_text=utterance.ssml_text,
                plain_text=utterance.plain_text,
                voice_instructions=utterance.voice_instructions,
                is_closing=utterance.is_closing,
                audio_ref=patient_audio_ref,
            )
        patient_turn = Turn(
            index=clinician_turn.index + 1,
            speaker="patient",
            transcript=utterance.plain_text,
            created_at=runtime.clock.now(),
            audio_ref=patient_audio_ref,
        )

        new_state = SessionState(
            session_id=state.session_id,
            case=case,
            turns=state.turns + (clinician_turn, patient_turn),
            stage_history=state.stage_history + (labels,),
            affect=new_ctx.affect,
            window=state.window,
            phase="ended" if utterance.is_closing else "active",
            patient_turn_count=new_ctx.patient_turn_count,
            feedbacks=state.feedbacks + ((clinician_turn.index, feedback),),
            digests=state.digests + (digest,),
            utterances=state.utterances + ((patient_turn.index, utterance),),
            overall=None,
        )

        items: list[tuple[str, dict[str, Any]]] = [
            ("clinician_turn", {"turn": clinician_turn.to_dict()}),
            (
                "turn_feedback",
                {
                    "turn_index": clinician_turn.index,
                    "available": feedback is not None,
                    "feedback": feedback.to_dict() if feedback else None,
                    "stages": labels.to_dict(),
                    "digest": digest.to_dict(),
                },
            ),
            (
                "patient_text",
                {
                    "turn": patient_turn.to_dict(),
                    "utterance": utterance.to_dict(),
                    "affect": new_ctx.affect.to_dict(),
                },
            ),
            (
                "patient_audio_ready",
                {"turn_index": patient_turn.index, "audio_ref": patient_audio_ref},
            ),
        ]

        overall = None
        if utterance.is_closing:
            overall = generate_overall_feedback(
                evaluator, case, new_state.turns, gateway, self.templates
            )
            new_state = _with_overall(new_state, overall)
            items.append(
                ("session_ended", {"reason": "patient_closing", "overall": overall.to_dict()})
            )

        # commit
        records = self._chain(runtime, items)
        for ref, data in blobs:
            path = self._blob_path(ref)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
        runtime.log.append_all(records)
        runtime.records.extend(records)
        runtime.prev_hash = records[-1]["hash"]
        runtime.state = new_state
        runtime.evaluator = evaluator
        runtime.partition = partition

        return TurnResult(
            clinician_turn=clinician_turn,
            stages=labels,
            feedback=feedback,
            digest=digest,
            patient_turn=patient_turn,
            utterance=utterance,
            overall=overall,
            first_seq=records[0]["seq"],
            last_seq=records[-1]["seq"],
        )

    # -- session end --

    def end_session(self, session_id: str) -> OverallFeedback:
        runtime = self._runtime(session_id)
        if not runtime.lock.acquire(blocking=False):
            raise TurnInFlight(f"session {session_id} already has a turn in flight")
        try:
            state = runtime.state
            if state.overall is not None:
                return state.overall
            if not state.turns:
                raise NoTurns("cannot end a session with no turns")
            overall = generate_overall_feedback(
                runtime.evaluator, state.case, state.turns, runtime.gateway, self.templates
            )
            new_state = _with_overall(_with_phase(state, "ended"), overall)
            records = self._chain(
                runtime,
                [("session_ended", {"reason": "clinician_end", "overall": overall.to_dict()})],
            )
            runtime.log.append_all(records)
            runtime.records.extend(records)
            runtime.prev_hash = records[-1]["hash"]
            runtime.state = new_state
            return overall
        finally:
            runtime.lock.release()

    # -- replay --

    @staticmethod
    def replay_state(log_path: str | Path) -> SessionState:
        """Reconstruct a session's state from its event log."""
        records = EventLog.read(Path(log_path))
        return fold_records(records)

    def replay_execute(self, log_path: str | Path) -> list[dict[str, Any]]:
        """Re-execute a logged session and return the fresh records.

        Clinician inputs and timestamps are taken from the recorded log
        and the original session id is reused, so run this inside a
        fresh orchestrator with its own data directory. With a scripted
        provider the fresh records must match the original log byte for
        byte.
        """
        records = EventLog.read(Path(log_path))
        if not records or records[0]["kind"] != "session_created":
            raise CorruptLog("log does not begin with session_created")
        created = records[0]["payload"]
        case = CaseScenario.from_dict(created["case"])
        options = SessionOptions.from_dict(created["options"])
        stamps = [created["created_at"]]
        inputs: list[str] = []
        ended_by_clinician = False
        for rec in records[1:]:
            if rec["kind"] == "clinician_turn":
                inputs.append(rec["payload"]["turn"]["transcript"])
                stamps.append(rec["payload"]["turn"]["created_at"])
            elif rec["kind"] == "patient_text":
                stamps.append(rec["payload"]["turn"]["created_at"])
            elif rec["kind"] == "session_ended":
                ended_by_clinician = rec["payload"]["reason"] == "clinician_end"
        session_id = created["session_id"]
        self._create(case, options, session_id, ReplayClock(stamps))
        for text in inputs:
            self.submit_clinician_turn(session_id, text=text)
        if ended_by_clinician:
            self.end_session(session_id)
        return self.events(session_id)


def _with_phase(state: SessionState, phase: str) -> SessionState:
    return SessionState(
        session_id=state.session_id,
        case=state.case,
        turns=state.turns,
        stage_history=state.stage_history,
        affect=state.affect,
        window=state.window,
        phase=phase,
        patient_turn_count=state.patient_turn_count,
        feedbacks=state.feedbacks,
        digests=state.digests,
        utterances=state.utterances,
        overall=state.overall,
    )


def _with_overall(state: SessionState, overall: OverallFeedback) -> SessionState:
    return SessionState(
        session_id=state.session_id,
        case=state.case,
        turns=state.turns,
        stage_history=state.stage_history,
        affect=state.affect,
        window=state.window,
        phase="ended",
        patient_turn_count=state.patient_turn_count,
        feedbacks=state.feedbacks,
        digests=state.digests,
        utterances=state.utterances,
        overall=overall,
    )


def fold_records(records: list[dict[str, Any]]) -> SessionState:
    """Fold verified log records back into a SessionState."""
    if not records or records[0]["kind"] != "session_created":
        raise CorruptLog("log does not begin with session_created")
    created = records[0]["payload"]
    case = CaseScenario.from_dict(created["case"])
    options = SessionOptions.from_dict(created["options"])
    state = SessionState(
        session_id=created["session_id"],
        case=case,
        affect=AffectiveState.initial(options.initial_affect or case.initial_affect),
        window=options.window,
        phase="created",
    )
    for rec in records[1:]:
        kind, payload = rec["kind"], rec["payload"]
        if kind == "clinician_turn":
            state = _replace_turns(state, state.turns + (Turn.from_dict(payload["turn"]),))
            state = _with_phase(state, "active")
        elif kind == "turn_feedback":
            fb = TurnFeedback.from_dict(payload["feedback"]) if payload["available"] else None
            state = SessionState(
                session_id=state.session_id,
                case=state.case,
                turns=state.turns,
                stage_history=state.stage_history + (StageLabelSet.from_dict(payload["stages"]),),
                affect=state.affect,
                window=state.window,
                phase=state.phase,
                patient_turn_count=state.patient_turn_count,
                feedbacks=state.feedbacks + ((payload["turn_index"], fb),),
                digests=state.digests + (EvaluatorDigest.from_dict(payload["digest"]),),
                utterances=state.utterances,
                overall=state.overall,
            )
        elif kind == "patient_text":
            turn = Turn.from_dict(payload["turn"])
            utterance = PatientUtterance.from_dict(payload["utterance"])
            state = SessionState(
                session_id=state.session_id,
                case=state.case,
                turns=state.turns + (turn,),
                stage_history=state.stage_history,
                affect=AffectiveState.from_dict(payload["affect"]),
                window=state.window,
                phase="ended" if utterance.is_closing else "active",
                patient_turn_count=state.patient_turn_count + 1,
                feedbacks=state.feedbacks,
                digests=state.digests,
                utterances=state.utterances + ((turn.index, utterance),),
                overall=state.overall,
            )
        elif kind == "patient_audio_ready":
            pass  # audio handle already attached to the patient turn
        elif kind == "session_ended":
            state = _with_overall(state, OverallFeedback.from_dict(payload["overall"]))
        elif kind in EVENT_KINDS:
            pass
        else:
            raise CorruptLog(f"unknown record kind: {kind}")
    return state


def _replace_turns(state: SessionState, turns: tuple[Turn, ...]) -> SessionState:
    return SessionState(
        session_id=state.session_id,
        case=state.case,
        turns=turns,
        stage_history=state.stage_history,
        affect=state.affect,
        window=state.window,
        phase=state.phase,
        patient_turn_count=state.patient_turn_count,
        feedbacks=state.feedbacks,
        digests=state.digests,
        utterances=state.utterances,
        overall=state.overall,
    )


# --- case library -------------------------------------------------------------

class CaseLibrary:
    """Predefined cases from a directory plus bespoke cases added at runtime."""

    def __init__(self, case_dir: str | Path | None = None):
        self._cases: dict[str, CaseScenario] = {}
        if case_dir is not None:
            for path in sorted(Path(case_dir).glob("*.json")):
                case = CaseScenario.from_dict(json.loads(path.read_text("utf-8")))
                self._cases[case.case_id] = case

    def add(self, case: CaseScenario) -> None:
        self._cases[case.case_id] = case

    def get(self, case_id: str) -> CaseScenario:
        if case_id not in self._cases:
            raise SessionNotFound(f"no such case: {case_id}")
        return self._cases[case_id]

    def list(self, specialty: str | None = None) -> list[CaseScenario]:
        cases = sorted(self._cases.values(), key=lambda c: c.case_id)
        if specialty:
            wanted = specialty.strip().lower()
            cases = [c for c in cases if c.specialty.lower() == wanted]
        return cases

    def summaries(self, specialty: str | None = None) -> list[dict[str, Any]]:
        return [
            {
                "case_id": c.case_id,
                "specialty": c.specialty,
                "interlocutor": c.interlocutor,
                "origin": c.origin,
                "summary": c.medical_situation.split(".")[0].strip(),
            }
            for c in self.list(specialty)
        ]
