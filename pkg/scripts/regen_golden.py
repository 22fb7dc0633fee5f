#!/usr/bin/env python3
"""Regenerate the shipped golden session.

Authors the scripted provider fixture and the clinician inputs, runs
the session offline, and freezes the resulting event log and artifacts
under src/candor/data/golden/. Run from the repo root after any change
that intentionally alters pipeline output, then review the diff.
"""

from __future__ import annotations

import json
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from candor.domain import CaseScenario, canonical_json  # noqa: E402
from candor.orchestrator import SessionOptions, SessionOrchestrator  # noqa: E402
from candor.providers import FixtureScript, ProviderFactory  # noqa: E402

GOLDEN_DIR = REPO / "src" / "candor" / "data" / "golden"
CASE_PATH = REPO / "src" / "candor" / "data" / "cases" / "anesthesia_allergy.json"

SESSION_ID = "golden-0001"

CLINICIAN_TURNS = [
    (
        "Good afternoon, Margaret. Thank you for making time today. I asked to see "
        "you because I want to talk openly about the allergic reaction you had after "
        "your surgery."
    ),
    (
        "You had the reaction because of a mistake on our side. We gave you "
        "cefazolin, an antibiotic related to penicillin, even though your allergy "
        "was documented, and the preoperative checklist step that should have caught "
        "it was skipped. I am so sorry; I know how frightening that night was."
    ),
    (
        "I take responsibility for this, and I am deeply sorry. We have already "
        "begun a full review of how the checklist was missed, and I will share every "
        "finding with you. Starting this week we are adding a pharmacy double-check "
        "before anesthesia, and I will call you with the review results within two "
        "weeks."
    ),
    (
        "Thank you, Margaret. I will call you within two weeks with the review "
        "results, and you can reach me directly any time before then. Take good "
        "care of yourself."
    ),
]


def chat(response: dict | str) -> dict:
    text = response if isinstance(response, str) else json.dumps(response)
    return {"capability": "chat", "response": text}


FIXTURE_ENTRIES = [
    # turn 1: opening feedback, then the patient's first reply
    chat(
        {
            "criterion_scores": {"START1": 4, "START2": 5},
            "strengths": [
                "Warm, personal greeting that states the purpose of the conversation right away."
            ],
            "improvements": [
                {
                    "subtitle": "Invite questions early on",
                    "description": "The opening explains the agenda but does not yet check what Margaret wants from the conversation.",
                    "suggestion": "Ask what she most wants to understand before moving into details.",
                    "example_phrasing": "Before I start, what questions are on your mind?",
                }
            ],
            "encouragement": "A considerate start; keep this tone as the details come.",
            "strength_phrases": ["talk openly"],
            "improvement_phrases": ["asked to see"],
        }
    ),
    chat(
        {
            "response": (
                "<speak>Thank you, doctor. I keep wondering, <emphasis>what exactly "
                "happened</emphasis> to me in there? No one has explained why I broke "
                "out in hives and had to stay overnight.</speak>"
            ),
            "descriptive_instructions": "anxious, uncertain, speak hesitantly",
            "is_closing": False,
        }
    ),
    # turn 2: classify the patient's question, feedback, patient reply
    chat("IS,EE"),
    chat(
        {
            "criterion_scores": {
                "IS1": 5, "IS2": 5, "IS3": 4, "IS4": 4,
                "EE1": 4, "EE2": 4, "EE3": 4, "EE4": 4, "EE5": 5,
            },
            "strengths": [
                "Names the error plainly, including the drug and the missed safeguard.",
                "Pairs the explanation with a direct apology.",
            ],
            "improvements": [
                {
                    "subtitle": "Pause to check understanding",
                    "description": "A lot of information lands at once, and Margaret has no room to react before the apology.",
                    "suggestion": "Break the explanation into smaller steps and ask how it is landing.",
                    "example_phrasing": "I want to pause here. What questions do you have so far?",
                }
            ],
            "encouragement": "Direct and honest; that is the hardest part done well.",
            "strength_phrases": ["so sorry", "was skipped"],
            "improvement_phrases": ["related to penicillin"],
        }
    ),
    chat(
        {
            "response": (
                "<speak>You <emphasis>skipped</emphasis> a safety check that was right "
                "there in my chart? Who is responsible for this? And what will you do "
                "so it never happens to anyone else?</speak>"
            ),
            "descriptive_instructions": "angry, betrayed, speak quickly",
            "is_closing": False,
        }
    ),
    # turn 3
    chat("TA,R"),
    chat(
        {
            "criterion_scores": {
                "TA1": 5, "TA2": 5, "TA3": 4, "TA4": 4, "TA5": 5, "R1": 5, "R2": 5,
            },
            "strengths": [
                "Accepts responsibility in the first breath without deflecting.",
                "Commits to specific prevention steps with a concrete timeline.",
            ],
            "improvements": [
                {
                    "subtitle": "Acknowledge the broken trust",
                    "description": "The plan is strong, but her sense of betrayal goes unanswered before the logistics arrive.",
                    "suggestion": "Name the trust damage directly before listing corrective actions.",
                    "example_phrasing": "You trusted us with your safety, and we let you down.",
                }
            ],
            "encouragement": "Accountability plus a concrete plan is exactly the right shape.",
            "strength_phrases": ["take responsibility", "pharmacy double-check"],
            "improvement_phrases": ["full review"],
        }
    ),
    chat(
        {
            "response": (
                "<speak>Thank you for being straight with me, that's what I needed to "
                "hear. I feel steadier knowing there is a real plan. I think I have "
                "everything I need for today.</speak>"
            ),
            "descriptive_instructions": "calmer, relieved, measured pace",
            "is_closing": False,
        }
    ),
    # turn 4: the patient signalled closure; rate the farewell, then goodbye
    chat("END"),
    chat(
        {
            "criterion_scores": {"END1": 5},
            "strengths": ["Closes warmly while restating the follow-up commitment."],
            "improvements": [
                {
                    "subtitle": "Offer a written summary",
                    "description": "Verbal commitments after a stressful conversation are easy to lose track of.",
                    "suggestion": "Offer to send the agreed next steps in writing.",
                    "example_phrasing": "I will send you a short written summary of what we discussed.",
                }
            ],
            "encouragement": "A caring close to a difficult conversation.",
            "strength_phrases": ["Take good care"],
            "improvement_phrases": ["within two weeks"],
        }
    ),
    chat(
        {
            "response": "<speak>Thank you, doctor. <emphasis>Goodbye</emphasis>.</speak>",
            "descriptive_instructions": "calm, appreciative, gentle pace",
            "is_closing": True,
        }
    ),
    # session end: the overall report narrative
    chat(
        {
            "areas": {
                "IS": {
                    "assessment": "The explanation of what happened was specific and honest, naming both the drug and the missed checklist step.",
                    "strengths": ["Clear, concrete account of the error."],
                    "improvements": ["Check understanding after each major piece of information."],
                    "examples": ["We gave you cefazolin, an antibiotic related to penicillin"],
                },
                "EE": {
                    "assessment": "Emotional acknowledgment arrived alongside the facts and felt genuine.",
                    "strengths": ["Directly validated how frightening the night was."],
                    "improvements": ["Leave more silence for emotions before moving on."],
                    "examples": ["I know how frightening that night was"],
                },
                "TA": {
                    "assessment": "Responsibility was accepted personally and paired with visible corrective action.",
                    "strengths": ["Unqualified apology and ownership."],
                    "improvements": ["Name the damaged trust explicitly."],
                    "examples": ["I take responsibility for this, and I am deeply sorry"],
                },
                "R": {
                    "assessment": "Next steps were concrete, with owners and timeframes the patient could hold onto.",
                    "strengths": ["Specific two-week follow-up commitment."],
                    "improvements": ["Offer the plan in writing."],
                    "examples": ["I will call you with the review results within two weeks"],
                },
            },
            "overall": "A strong disclosure: honest about the error, emotionally present, accountable, and concrete about what happens next.",
            "key_strengths": [
                "Transparent account of the error and its cause",
                "Personal accountability with a genuine apology",
                "Concrete prevention plan with timelines",
            ],
            "key_improvements": [
                "Pause to check understanding and invite questions",
                "Acknowledge damaged trust before moving to logistics",
            ],
        }
    ),
]


def main() -> None:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    fixture = {"entries": FIXTURE_ENTRIES}
    fixture_path = GOLDEN_DIR / "fixture.json"
    fixture_path.write_text(json.dumps(fixture, indent=2) + "\n", encoding="utf-8")

    inputs = {
        "case_id": "anesthesia-allergy-01",
        "session_id": SESSION_ID,
        "options": {
            "window": 12,
            "eta": "1/5",
            "turn_budget": 5,
            "feedback_mode": "both",
            "deterministic_clock": True,
        },
        "clinician_turns": CLINICIAN_TURNS,
    }
    (GOLDEN_DIR / "inputs.json").write_text(
        json.dumps(inputs, indent=2) + "\n", encoding="utf-8"
    )

    case = CaseScenario.from_dict(json.loads(CASE_PATH.read_text("utf-8")))
    with tempfile.TemporaryDirectory() as tmp:
        factory = ProviderFactory.scripted(FixtureScript.load(fixture_path))
        orchestrator = SessionOrchestrator(factory, tmp)
        options = SessionOptions.from_dict({**inputs["options"], "session_id": SESSION_ID})
        options = SessionOptions(
            window=options.window, eta=options.eta, turn_budget=options.turn_budget,
            feedback_mode=options.feedback_mode, deterministic_clock=True,
            session_id=SESSION_ID,
        )
        orchestrator.create_session(case, options)
        results = [
            orchestrator.submit_clinician_turn(SESSION_ID, text=text)
            for text in CLINICIAN_TURNS
        ]
        state = orchestrator.get_session(SESSION_ID)
        assert state.phase == "ended", "golden session must end via the patient's closing turn"
        shutil.copyfile(Path(tmp) / f"{SESSION_ID}.log", GOLDEN_DIR / "session.log")

    artifacts = {
        "turn_feedback": [r.feedback.to_dict() for r in results if r.feedback],
        "stage_history": [s.to_dict() for s in state.stage_history],
        "utterances": [utt.to_dict() for _, utt in state.utterances],
        "overall": state.overall.to_dict(),
        "final_state": state.to_dict(),
    }
    (GOLDEN_DIR / "artifacts.json").write_text(
        canonical_json(artifacts) + "\n", encoding="utf-8"
    )
    print(f"golden session written to {GOLDEN_DIR}")
    print(f"  stage history: {[s.to_dict()['codes'] for s in state.stage_history]}")
    print(f"  patient turns: {state.patient_turn_count}")
    print(f"  overall score: {state.overall.to_dict()['overall_score_display']}")


if __name__ == "__main__":
    main()
