from __future__ import annotations

import json

import pytest

import candor.orchestrator as orch_module
from candor.domain import StageCode, canonical_json
from candor.errors import (
    CorruptLog,
    NoTurns,
    ProviderUnavailable,
    SessionEnded,
    SessionNotFound,
    TurnInFlight,
)
from candor.orchestrator import (
    CaseLibrary,
    EventLog,
    SessionOptions,
    SessionOrchestrator,
    fold_records,
)
from candor.providers import FixtureEntry, FixtureScript, ProviderFactory

from conftest import patient_json
from session_fixtures import (
    followup_turn_entries,
    opening_turn_entries,
    overall_entry,
    two_turn_session_entries,
)


def make_orchestrator(tmp_path, entries, subdir="data") -> SessionOrchestrator:
    script = FixtureScript(tuple(FixtureEntry(c, r) for c, r in entries))
    return SessionOrchestrator(ProviderFactory.scripted(script), tmp_path / subdir)


def deterministic_options(**overrides) -> SessionOptions:
    return SessionOptions(
        deterministic_clock=True, session_id=overrides.pop("session_id", "s-test"), **overrides
    )


class TestLifecycle:
    def test_create_session(self, tmp_path, case):
        orchestrator = make_orchestrator(tmp_path, [])
        state = orchestrator.create_session(case, deterministic_options())
        assert state.phase == "created"
        assert state.turns == ()
        assert (tmp_path / "data" / "s-test.log").exists()

    def test_window_option_passthrough(self, tmp_path, case):
        orchestrator = make_orchestrator(tmp_path, [])
        state = orchestrator.create_session(case, deterministic_options(window=6))
        assert state.window == 6

    def test_invalid_case_rejected(self, tmp_path):
        orchestrator = make_orchestrator(tmp_path, [])
        with pytest.raises(Exception):
            orchestrator.create_session({"not": "a case"})  # type: ignore[arg-type]

    def test_unknown_session(self, tmp_path):
        orchestrator = make_orchestrator(tmp_path, [])
        with pytest.raises(SessionNotFound):
            orchestrator.get_session("missing")

    def test_duplicate_session_id_leaves_log_intact(self, tmp_path, case):
        from candor.errors import InvalidCase

        orchestrator = make_orchestrator(tmp_path, [])
        orchestrator.create_session(case, deterministic_options())
        log_path = tmp_path / "data" / "s-test.log"
        before = log_path.read_bytes()
        with pytest.raises(InvalidCase):
            orchestrator.create_session(case, deterministic_options())
        assert log_path.read_bytes() == before
        assert EventLog.read(log_path)  # chain still verifies


class TestFirstTurn:
    def test_opening_turn_pipeline(self, tmp_path, case):
        orchestrator = make_orchestrator(tmp_path, opening_turn_entries())
        orchestrator.create_session(case, deterministic_options())
        result = orchestrator.submit_clinician_turn("s-test", text="Hello, thanks for coming in.")
        assert result.stages.codes == (StageCode.START,)
        assert result.feedback is not None
        assert sorted(result.feedback.criterion_scores) == ["START1", "START2"]
        assert result.patient_turn.index == 1
        assert result.utterance.audio_ref is not None
        state = orchestrator.get_session("s-test")
        assert state.phase == "active"
        assert [t.speaker for t in state.turns] == ["clinician", "patient"]
        assert state.patient_turn_count == 1

    def test_event_order_for_one_turn(self, tmp_path, case):
        orchestrator = make_orchestrator(tmp_path, opening_turn_entries())
        orchestrator.create_session(case, deterministic_options())
        orchestrator.submit_clinician_turn("s-test", text="Hello.")
        kinds = [rec["kind"] for rec in orchestrator.events("s-test")]
        assert kinds == [
            "session_created",
            "clinician_turn",
            "turn_feedback",
            "patient_text",
            "patient_audio_ready",
        ]
        seqs = [rec["seq"] for rec in orchestrator.events("s-test")]
        assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)

    def test_audio_blob_stored(self, tmp_path, case):
        orchestrator = make_orchestrator(tmp_path, opening_turn_entries())
        orchestrator.create_session(case, deterministic_options())
        result = orchestrator.submit_clinician_turn("s-test", text="Hello.")
        ref = result.utterance.audio_ref
        assert orchestrator.get_audio(ref).startswith(b"tts-sentinel:")


class TestConversationFlow:
    def test_second_turn_classifies_patient_message(self, tmp_path, case):
        entries = opening_turn_entries() + followup_turn_entries("EE,TA")
        orchestrator = make_orchestrator(tmp_path, entries)
        orchestrator.create_session(case, deterministic_options())
        orchestrator.submit_clinician_turn("s-test", text="Hello.")
        result = orchestrator.submit_clinician_turn("s-test", text="I hear you; I am sorry.")
        assert result.stages.codes == (StageCode.EE, StageCode.TA)
        assert result.stages.turn_index == 1
        runtime = orchestrator._sessions["s-test"]
        chats = [c for c in runtime.gateway.captured if c["capability"] == "chat"]
        assert "What happened to me?" in chats[2]["prompt"]  # turn 2 classification

    def test_closing_reply_ends_session(self, tmp_path, case):
        orchestrator = make_orchestrator(tmp_path, two_turn_session_entries())
        orchestrator.create_session(case, deterministic_options())
        orchestrator.submit_clinician_turn("s-test", text="Hello.")
        result = orchestrator.submit_clinician_turn("s-test", text="Here is what happened.")
        assert result.utterance.is_closing
        assert result.overall is not None
        state = orchestrator.get_session("s-test")
        assert state.phase == "ended"
        with pytest.raises(SessionEnded):
            orchestrator.submit_clinician_turn("s-test", text="One more thing.")

    def test_stages_seen_matches_history(self, tmp_path, case):
        entries = opening_turn_entries() + followup_turn_entries("EE,TA")
        orchestrator = make_orchestrator(tmp_path, entries)
        orchestrator.create_session(case, deterministic_options())
        orchestrator.submit_clinician_turn("s-test", text="Hello.")
        orchestrator.submit_clinician_turn("s-test", text="I hear you.")
        runtime = orchestrator._sessions["s-test"]
        history_union = {
            code for labels in runtime.state.stage_history for code in labels.codes
        }
        assert runtime.evaluator.stages_seen == frozenset(history_union)

    def test_turn_in_flight(self, tmp_path, case):
        orchestrator = make_orchestrator(tmp_path, opening_turn_entries())
        orchestrator.create_session(case, deterministic_options())
        runtime = orchestrator._sessions["s-test"]
        assert runtime.lock.acquire(blocking=False)
        try:
            with pytest.raises(TurnInFlight):
                orchestrator.submit_clinician_turn("s-test", text="Hello.")
        finally:
            runtime.lock.release()

    def test_feedback_unavailable_degrades_not_aborts(self, tmp_path, case):
        entries = [
            ("chat", "not json"),
            ("chat", "still not json"),
            ("chat", patient_json("<speak>Alright.</speak>")),
        ]
        orchestrator = make_orchestrator(tmp_path, entries)
        orchestrator.create_session(case, deterministic_options())
        result = orchestrator.submit_clinician_turn("s-test", text="Hello.")
        assert result.feedback is None
        assert result.digest.direction == "mixed"
        assert result.digest.keywords == ()
        state = orchestrator.get_session("s-test")
        assert state.phase == "active"
        assert state.feedbacks == ((0, None),)

    def test_tts_outage_commits_text_only(self, tmp_path, case):
        orchestrator = make_orchestrator(tmp_path, opening_turn_entries())
        orchestrator.create_session(case, deterministic_options())
        runtime = orchestrator._sessions["s-test"]

        def failing_synthesize(text, instructions):
            raise ProviderUnavailable("tts down")

        runtime.gateway.synthesize = failing_synthesize
        result = orchestrator.submit_clinician_turn("s-test", text="Hello.")
        assert result.utterance.audio_ref is None
        assert result.patient_turn.audio_ref is None
        assert orchestrator.get_session("s-test").phase == "active"


class TestEndSession:
    def test_end_generates_and_caches(self, tmp_path, case):
        entries = opening_turn_entries() + overall_entry()
        orchestrator = make_orchestrator(tmp_path, entries)
        orchestrator.create_session(case, deterministic_options())
        orchestrator.submit_clinician_turn("s-test", text="Hello.")
        first = orchestrator.end_session("s-test")
        second = orchestrator.end_session("s-test")
        assert first == second
        assert orchestrator.get_session("s-test").phase == "ended"
        kinds = [rec["kind"] for rec in orchestrator.events("s-test")]
        assert kinds.count("session_ended") == 1

    def test_no_turns(self, tmp_path, case):
        orchestrator = make_orchestrator(tmp_path, [])
        orchestrator.create_session(case, deterministic_options())
        with pytest.raises(NoTurns):
            orchestrator.end_session("s-test")


PIPELINE_FAULTS = [
    "transcribe",
    "partition",
    "classify",
    "feedback",
    "digest",
    "patient",
    "synthesize",
]


class InjectedFault(RuntimeError):
    pass


def inject_fault(step: str, orchestrator, runtime, monkeypatch) -> None:
    def boom(*args, **kwargs):
        raise InjectedFault(step)

    if step == "transcribe":
        monkeypatch.setattr(runtime.gateway, "transcribe", boom)
    elif step == "partition":
        monkeypatch.setattr(orch_module.asymmetry, "update_partition", boom)
    elif step == "classify":
        monkeypatch.setattr(orch_module.stage_classifier, "classify_stage", boom)
    elif step == "feedback":
        monkeypatch.setattr(orch_module, "generate_turn_feedback", boom)
    elif step == "digest":
        monkeypatch.setattr(orch_module.asymmetry, "make_digest", boom)
    elif step == "patient":
        monkeypatch.setattr(orch_module.patient_agent, "generate_patient_utterance", boom)
    elif step == "synthesize":
        monkeypatch.setattr(orch_module.patient_agent, "synthesize_patient_audio", boom)


class TestAtomicity:
    @pytest.mark.parametrize("step", PIPELINE_FAULTS)
    def test_fault_leaves_state_unchanged(self, tmp_path, case, monkeypatch, step):
        from conftest import make_wav

        entries = opening_turn_entries() + followup_turn_entries("EE")
        orchestrator = make_orchestrator(tmp_path, entries)
        orchestrator.create_session(case, deterministic_options())
        orchestrator.submit_clinician_turn("s-test", text="Hello.")

        runtime = orchestrator._sessions["s-test"]
        log_path = runtime.log.path
        before_state = orchestrator.get_session("s-test").to_dict()
        before_log = log_path.read_bytes()
        before_records = len(runtime.records)

        inject_fault(step, orchestrator, runtime, monkeypatch)
        use_audio = step == "transcribe"
        with pytest.raises(InjectedFault):
            if use_audio:
                orchestrator.submit_clinician_turn("s-test", audio=make_wav())
            else:
                orchestrator.submit_clinician_turn("s-test", text="Second turn.")

        assert orchestrator.get_session("s-test").to_dict() == before_state
        assert log_path.read_bytes() == before_log
        assert len(runtime.records) == before_records
        assert not runtime.lock.locked()


class TestLogAndReplay:
    def run_session(self, tmp_path, case, subdir="data") -> SessionOrchestrator:
        orchestrator = make_orchestrator(tmp_path, two_turn_session_entries(), subdir)
        orchestrator.create_session(case, deterministic_options())
        orchestrator.submit_clinician_turn("s-test", text="Hello, thanks for coming in.")
        orchestrator.submit_clinician_turn("s-test", text="Here is what we know so far.")
        return orchestrator

    def test_fold_reconstructs_state(self, tmp_path, case):
        orchestrator = self.run_session(tmp_path, case)
        log_path = tmp_path / "data" / "s-test.log"
        replayed = SessionOrchestrator.replay_state(log_path)
        assert replayed == orchestrator.get_session("s-test")

    def test_truncated_final_line_tolerated(self, tmp_path, case):
        self.run_session(tmp_path, case)
        log_path = tmp_path / "data" / "s-test.log"
        raw = log_path.read_bytes()
        log_path.write_bytes(raw[:-25])  # tear the last record
        records = EventLog.read(log_path)
        state = fold_records(records)
        assert state.session_id == "s-test"
        full = [json.loads(l) for l in raw.decode().splitlines() if l.strip()]
        assert len(records) == len(full) - 1

    def test_edited_record_detected(self, tmp_path, case):
        self.run_session(tmp_path, case)
        log_path = tmp_path / "data" / "s-test.log"
        lines = log_path.read_text().splitlines()
        doctored = json.loads(lines[1])
        doctored["payload"]["turn"]["transcript"] = "REWRITTEN"
        lines[1] = canonical_json(doctored)
        log_path.write_text("\n".join(lines) + "\n")
        with pytest.raises(CorruptLog):
            EventLog.read(log_path)

    def test_reexecution_is_byte_identical(self, tmp_path, case):
        self.run_session(tmp_path, case, subdir="original")
        log_path = tmp_path / "original" / "s-test.log"
        replay_orch = make_orchestrator(tmp_path, two_turn_session_entries(), "replayed")
        fresh = replay_orch.replay_execute(log_path)
        original = [json.loads(l) for l in log_path.read_text().splitlines() if l.strip()]
        assert [canonical_json(r) for r in fresh] == [canonical_json(r) for r in original]
        assert (tmp_path / "replayed" / "s-test.log").read_bytes() == log_path.read_bytes()

    def test_clinician_end_replays(self, tmp_path, case):
        entries = opening_turn_entries() + overall_entry()
        orchestrator = make_orchestrator(tmp_path, entries, "original")
        orchestrator.create_session(case, deterministic_options())
        orchestrator.submit_clinician_turn("s-test", text="Hello.")
        orchestrator.end_session("s-test")
        log_path = tmp_path / "original" / "s-test.log"
        replay_orch = make_orchestrator(tmp_path, entries, "replayed")
        fresh = replay_orch.replay_execute(log_path)
        original = [json.loads(l) for l in log_path.read_text().splitlines() if l.strip()]
        assert [canonical_json(r) for r in fresh] == [canonical_json(r) for r in original]


class TestTurnBudget:
    def adversarial_entries(self, turns: int) -> list[tuple[str, str]]:
        reply = patient_json("<speak>I still have questions. Tell me more.</speak>")
        entries = opening_turn_entries("<speak>I still have questions. Tell me more.</speak>")
        for _ in range(turns - 1):
            entries += followup_turn_entries(
                "IS", "<speak>I still have questions. Tell me more.</speak>"
            )
        entries += overall_entry()
        return entries

    def test_session_ends_by_patient_turn_five(self, tmp_path, case):
        orchestrator = make_orchestrator(tmp_path, self.adversarial_entries(6))
        orchestrator.create_session(case, deterministic_options())
        closing_seen = False
        for i in range(6):
            try:
                result = orchestrator.submit_clinician_turn("s-test", text=f"Turn {i}.")
            except SessionEnded:
                break
            if result.utterance.is_closing:
                closing_seen = True
                break
        state = orchestrator.get_session("s-test")
        assert closing_seen
        assert state.patient_turn_count == 5
        assert state.phase == "ended"


class TestSessionLimit:
    def test_limit_blocks_new_sessions_until_one_ends(self, tmp_path, case):
        from candor.errors import TooManySessions

        entries = two_turn_session_entries()
        script = FixtureScript(tuple(FixtureEntry(c, r) for c, r in entries))
        orchestrator = SessionOrchestrator(
            ProviderFactory.scripted(script), tmp_path / "data", max_sessions=1
        )
        orchestrator.create_session(case, deterministic_options(session_id="s-one"))
        with pytest.raises(TooManySessions):
            orchestrator.create_session(case, deterministic_options(session_id="s-two"))
        orchestrator.submit_clinician_turn("s-one", text="Hello.")
        orchestrator.submit_clinician_turn("s-one", text="Details.")  # patient closes
        orchestrator.create_session(case, deterministic_options(session_id="s-two"))


class TestCaseLibrary:
    def test_loads_shipped_cases(self):
        from candor.cli import _default_library
        from candor.config import AppConfig

        library = _default_library(AppConfig())
        ids = {c.case_id for c in library.list()}
        assert "anesthesia-allergy-01" in ids
        assert len(ids) >= 3

    def test_specialty_filter(self, tmp_path, case):
        library = CaseLibrary()
        library.add(case)
        assert library.list("testing") == [case]
        assert library.list("surgery") == []
        assert library.summaries("testing")[0]["case_id"] == "t1"
