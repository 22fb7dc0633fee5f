from __future__ import annotations

import io
import json
import wave

import pytest

from candor.domain import CaseScenario
from candor.providers import FixtureEntry, FixtureScript, ScriptedGateway
from candor.templates import load_stopwords, load_templates


@pytest.fixture(scope="session")
def templates():
    return load_templates()


@pytest.fixture(scope="session")
def stopwords():
    return load_stopwords()


@pytest.fixture
def case():
    return CaseScenario(
        case_id="t1",
        specialty="testing",
        patient_profile="Alex Doe, 50. Lives alone, works as an electrician.",
        interlocutor="patient",
        medical_situation="Recovering after a procedure and an unexpected collapse.",
        medical_error="A zolpafen overdose triggered the collapse because dosing guidance was misread.",
        patient_knowledge="Alex knows there was a collapse and an overnight stay.",
        cause_known=True,
        origin="predefined",
    )


def gateway_for(entries: list[tuple[str, str]]) -> ScriptedGateway:
    script = FixtureScript(tuple(FixtureEntry(c, r) for c, r in entries))
    return ScriptedGateway(script)


def feedback_json(
    scores: dict[str, int | None],
    *,
    strengths: list[str] | None = None,
    improvements: list[dict] | None = None,
    encouragement: str = "Keep building on this.",
    strength_phrases: list[str] | None = None,
    improvement_phrases: list[str] | None = None,
) -> str:
    return json.dumps(
        {
            "criterion_scores": scores,
            "strengths": strengths or ["Clear, direct acknowledgment of the situation."],
            "improvements": improvements
            or [
                {
                    "subtitle": "Add concrete next steps",
                    "description": "The message stops short of saying what happens next.",
                    "suggestion": "Name one specific follow-up action with a timeframe.",
                    "example_phrasing": "I will call you tomorrow with the review results.",
                }
            ],
            "encouragement": encouragement,
            "strength_phrases": strength_phrases or [],
            "improvement_phrases": improvement_phrases or [],
        }
    )


def patient_json(ssml: str, instructions: str = "anxious, speak hesitantly",
                 is_closing: bool = False) -> str:
    return json.dumps(
        {
            "response": ssml,
            "descriptive_instructions": instructions,
            "is_closing": is_closing,
        }
    )


def overall_json(
    *,
    assessments: dict[str, str] | None = None,
    overall: str = "A steady, honest disclosure overall.",
    key_strengths: list[str] | None = None,
    key_improvements: list[str] | None = None,
) -> str:
    areas = {}
    for code in ("IS", "EE", "TA", "R"):
        areas[code] = {
            "assessment": (assessments or {}).get(code, f"Handled the {code} stage adequately."),
            "strengths": ["Spoke plainly."],
            "improvements": ["Could slow down."],
            "examples": [],
        }
    return json.dumps(
        {
            "areas": areas,
            "overall": overall,
            "key_strengths": key_strengths or ["Honest disclosure."],
            "key_improvements": key_improvements or ["More concrete timelines."],
        }
    )


def make_wav(*, channels: int = 1, rate: int = 16000, width: int = 2,
             frames: int = 160) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wav:
        wav.setnchannels(channels)
        wav.setsampwidth(width)
        wav.setframerate(rate)
        wav.writeframes(b"\x00" * (frames * width * channels))
    return buf.getvalue()
