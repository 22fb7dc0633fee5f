from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from candor.asymmetry import KnowledgePartition
from candor.domain import (
    AFFECT_DIMENSIONS,
    AffectiveState,
    CaseScenario,
    EvaluatorDigest,
    PatientUtterance,
    Turn,
)
from candor.errors import ProviderUnavailable
from candor.patient import (
    PatientContext,
    build_patient_prompt,
    generate_patient_utterance,
    synthesize_patient_audio,
    update_affect,
)
from candor.providers import synthesis_sentinel

from conftest import gateway_for, patient_json
from oracles import affect_step_oracle


def digest(direction: str = "positive", keywords: tuple[str, ...] = ("empathy",)) -> EvaluatorDigest:
    return EvaluatorDigest(turn_index=0, keywords=keywords, direction=direction)


def uniform_affect(value: Fraction) -> AffectiveState:
    return AffectiveState({dim: value for dim in AFFECT_DIMENSIONS})


def make_ctx(case: CaseScenario, stopwords, **overrides) -> PatientContext:
    defaults = dict(
        case=case,
        partition=KnowledgePartition.from_case(case, stopwords),
        affect=AffectiveState.initial(),
        memory=(),
        patient_turn_count=0,
    )
    defaults.update(overrides)
    return PatientContext(**defaults)


class TestAffectUpdate:
    def test_positive_step_from_half(self):
        state = update_affect(uniform_affect(Fraction(1, 2)), digest("positive"))
        assert state.values["trust"] == Fraction(7, 10)
        assert state.values["anger"] == Fraction(3, 10)
        assert state.values["anxiety"] == Fraction(3, 10)
        assert state.values["confusion"] == Fraction(3, 10)
        assert state.values["grief"] == Fraction(3, 10)

    def test_mixed_leaves_state_unchanged(self):
        before = uniform_affect(Fraction(1, 3))
        assert update_affect(before, digest("mixed")) == before

    def test_negative_clamps_at_one(self):
        before = AffectiveState(
            {
                "anxiety": Fraction(1, 2),
                "anger": Fraction(19, 20),
                "trust": Fraction(1, 2),
                "confusion": Fraction(1, 2),
                "grief": Fraction(1, 2),
            }
        )
        after = update_affect(before, digest("negative"))
        assert after.values["anger"] == Fraction(1)
        assert after.values["trust"] == Fraction(3, 10)

    @given(
        st.lists(st.fractions(min_value=0, max_value=1, max_denominator=50),
                 min_size=5, max_size=5),
        st.sampled_from(["positive", "mixed", "negative"]),
    )
    @settings(max_examples=300)
    def test_oracle_agreement_and_bounds(self, raw_values, direction):
        values = dict(zip(AFFECT_DIMENSIONS, raw_values))
        after = update_affect(AffectiveState(dict(values)), digest(direction))
        expected = affect_step_oracle(values, direction, Fraction(1, 5))
        assert after.values == expected
        assert all(0 <= v <= 1 for v in after.values.values())

    @given(
        st.lists(st.fractions(min_value=0, max_value=1, max_denominator=50),
                 min_size=5, max_size=5)
    )
    @settings(max_examples=150)
    def test_monotonicity_per_direction(self, raw_values):
        before = AffectiveState(dict(zip(AFFECT_DIMENSIONS, raw_values)))
        pos = update_affect(before, digest("positive"))
        neg = update_affect(before, digest("negative"))
        assert pos.values["trust"] >= before.values["trust"]
        assert neg.values["trust"] <= before.values["trust"]
        for dim in ("anxiety", "anger", "confusion", "grief"):
            assert pos.values[dim] <= before.values[dim]
            assert neg.values[dim] >= before.values[dim]


class TestPatientPrompt:
    def test_knowledge_included_error_excluded(self, case, stopwords, templates):
        ctx = make_ctx(case, stopwords)
        prompt = build_patient_prompt(ctx, digest(), templates)
        assert case.patient_knowledge in prompt
        assert case.medical_error not in prompt
        assert "zolpafen" not in prompt

    def test_caregiver_identity_names_relationship(self, stopwords, templates):
        case = CaseScenario(
            case_id="c1",
            specialty="testing",
            patient_profile="Jo Park, 80.",
            interlocutor="caregiver",
            relationship="daughter",
            medical_situation="In recovery.",
            medical_error="late antidote",
            patient_knowledge="knows about the overnight stay",
            cause_known=False,
            origin="predefined",
        )
        ctx = make_ctx(case, stopwords)
        prompt = build_patient_prompt(ctx, digest(), templates)
        assert "Caregiver (daughter)" in prompt

    def test_turn_count_and_affect_rendered(self, case, stopwords, templates):
        ctx = make_ctx(case, stopwords, patient_turn_count=2)
        prompt = build_patient_prompt(ctx, digest(), templates)
        assert "Patient turns so far: 2" in prompt
        assert "trust=0.60" in prompt

    def test_deterministic(self, case, stopwords, templates):
        ctx = make_ctx(case, stopwords)
        assert build_patient_prompt(ctx, digest(), templates) == build_patient_prompt(
            ctx, digest(), templates
        )

    def test_memory_window_respected(self, case, stopwords):
        turns = tuple(
            Turn(i, "clinician" if i % 2 == 0 else "patient", f"t{i}",
                 f"2025-01-01T00:00:{i:02d}Z")
            for i in range(6)
        )
        with pytest.raises(Exception):
            PatientContext(
                case=case,
                partition=KnowledgePartition.from_case(case, stopwords),
                affect=AffectiveState.initial(),
                memory=turns,
                patient_turn_count=3,
                window=4,
            )


class TestUtteranceGeneration:
    def test_emphasis_example(self, case, stopwords, templates):
        ssml = (
            "<speak>I understand that these things take time, but it's been "
            "<emphasis>three weeks</emphasis> and I'm still waiting for an update.</speak>"
        )
        gateway = gateway_for([("chat", patient_json(ssml))])
        utt, ctx2 = generate_patient_utterance(make_ctx(case, stopwords), digest(), gateway, templates)
        assert "<emphasis>three weeks</emphasis>" in utt.ssml_text
        assert "three weeks" in utt.plain_text
        assert ctx2.patient_turn_count == 1
        assert ctx2.affect.values["trust"] == Fraction(4, 5)  # 0.6 + 0.2

    def test_forced_closing_at_budget(self, case, stopwords, templates):
        gateway = gateway_for(
            [("chat", patient_json("<speak>More questions.</speak>", is_closing=False))]
        )
        ctx = make_ctx(case, stopwords, patient_turn_count=4)
        utt, ctx2 = generate_patient_utterance(ctx, digest(), gateway, templates)
        assert utt.is_closing is True
        assert ctx2.patient_turn_count == 5

    def test_four_sentences_twice_truncated(self, case, stopwords, templates):
        four = "<speak>One point. Two points. Three points. Four points.</speak>"
        gateway = gateway_for([("chat", patient_json(four)), ("chat", patient_json(four))])
        utt, _ = generate_patient_utterance(make_ctx(case, stopwords), digest(), gateway, templates)
        assert utt.plain_text == "One point. Two points. Three points."
        assert utt.ssml_text == "<speak>One point. Two points. Three points.</speak>"

    def test_markup_invalid_twice_degrades(self, case, stopwords, templates):
        bad = patient_json("no speak wrapper at all.")
        gateway = gateway_for([("chat", bad), ("chat", bad)])
        utt, _ = generate_patient_utterance(make_ctx(case, stopwords), digest(), gateway, templates)
        assert utt.ssml_text.startswith("<speak>")
        assert utt.plain_text == "no speak wrapper at all."

    def test_repair_uses_error_message(self, case, stopwords, templates):
        gateway = gateway_for(
            [
                ("chat", "not json"),
                ("chat", patient_json("<speak>Fine.</speak>")),
            ]
        )
        utt, _ = generate_patient_utterance(make_ctx(case, stopwords), digest(), gateway, templates)
        assert utt.plain_text == "Fine."
        assert "was invalid" in gateway.captured[1]["prompt"]


class TestSynthesis:
    def test_sentinel_stored(self, case):
        utt = PatientUtterance(
            ssml_text="<speak>Hello.</speak>",
            plain_text="Hello.",
            voice_instructions="angry, speak quickly",
            is_closing=False,
        )
        gateway = gateway_for([])
        _, audio = synthesize_patient_audio(utt, gateway)
        assert audio == synthesis_sentinel("<speak>Hello.</speak>", "angry, speak quickly")
        captured = gateway.captured[0]
        assert captured["instructions"] == "angry, speak quickly"
        assert captured["text"] == "<speak>Hello.</speak>"

    def test_identical_inputs_identical_sentinels(self):
        assert synthesis_sentinel("a", "b") == synthesis_sentinel("a", "b")

    def test_differing_instructions_differ(self):
        assert synthesis_sentinel("a", "calm") != synthesis_sentinel("a", "angry")

    def test_provider_failure_text_only(self):
        utt = PatientUtterance(
            ssml_text="<speak>Hello.</speak>",
            plain_text="Hello.",
            voice_instructions="calm",
            is_closing=False,
        )

        class DownGateway:
            def synthesize(self, text, instructions):
                raise ProviderUnavailable("tts down")

        result, audio = synthesize_patient_audio(utt, DownGateway())
        assert audio is None
        assert result.audio_ref is None
