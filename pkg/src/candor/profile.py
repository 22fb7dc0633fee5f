"""Bespoke case creation from a free-text description of the situation."""

from __future__ import annotations

import uuid
from typing import Any

from .domain import CaseScenario
from .errors import InvalidCase, StructureInvalid
from .evaluator import parse_provider_json
from .providers import Gateway
from .templates import PromptTemplates


def build_profile_prompt(description: str, templates: PromptTemplates) -> str:
    return (
        f"{templates.profile.rstrip()}\n\n"
        f"Medical situation description:\n{description}"
    )


def _case_from_extraction(data: Any, description: str) -> CaseScenario:
    if not isinstance(data, dict):
        raise StructureInvalid("profile extraction must return a JSON object")
    for key in ("patient_profile", "interlocutor", "medical_error", "patient_knowledge"):
        if not isinstance(data.get(key), str) or not data[key].strip():
            raise StructureInvalid(f"profile extraction is missing field: {key}")
    try:
        return CaseScenario(
            case_id=f"bespoke-{uuid.uuid4().hex[:12]}",
            specialty=str(data.get("specialty", "general")),
            patient_profile=data["patient_profile"],
            interlocutor=data["interlocutor"],
            relationship=data.get("relationship"),
            medical_situation=str(data.get("medical_situation", description)),
            medical_error=data["medical_error"],
            patient_knowledge=data["patient_knowledge"],
            cause_known=bool(data.get("cause_known", False)),
            origin="bespoke",
        )
    except InvalidCase as exc:
        raise StructureInvalid(str(exc)) from None


def extract_case(
    description: str, gateway: Gateway, templates: PromptTemplates
) -> CaseScenario:
    """Run profile extraction over a described case, one repair re-prompt."""
    if not description.strip():
        raise InvalidCase("case description must be non-empty")
    prompt = build_profile_prompt(description, templates)
    raw = gateway.chat(prompt)
    try:
        return _case_from_extraction(parse_provider_json(raw), description)
    except StructureInvalid as first_error:
        repair = (
            f"{prompt}\n\n"
            f"Your previous answer was invalid: {first_error}. "
            "Respond again as a single JSON object with fields patient_profile, "
            "interlocutor (patient or caregiver), relationship, specialty, "
            "medical_situation, medical_error, patient_knowledge, cause_known."
        )
        return _case_from_extraction(parse_provider_json(gateway.chat(repair)), description)
