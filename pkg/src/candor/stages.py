"""Conversation stage classification with validation, repair, and fallback."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

from .domain import StageCode, StageLabelSet, stages_to_areas, validate_stage_labels
from .errors import DomainValidationError, StageLabelError
from .providers import Gateway
from .templates import PromptTemplates, load_templates

__all__ = [
    "StageRequest",
    "build_stage_prompt",
    "classify_stage",
    "extract_stages_field",
    "stages_to_areas",
]


@dataclass(frozen=True)
class StageRequest:
    patient_message: str
    turn_index: int
    is_first_patient_message: bool

    def __post_init__(self) -> None:
        if not self.patient_message.strip():
            raise DomainValidationError("patient_message must be non-empty")
        if self.is_first_patient_message != (self.turn_index == 0):
            raise DomainValidationError(
                "is_first_patient_message must agree with turn_index"
            )


@lru_cache(maxsize=1)
def _default_templates() -> PromptTemplates:
    return load_templates()


def build_stage_prompt(req: StageRequest, templates: PromptTemplates | None = None) -> str:
    """Render the stage classification prompt for one patient message."""
    if templates is None:
        templates = _default_templates()
    return f"{templates.conv_stage.rstrip()}\n\nPatient's message:\n{req.patient_message}"


def extract_stages_field(raw: str) -> str:
    """Pull the stages string out of a possibly JSON-wrapped response.

    Accepts a bare string, a JSON string, or a JSON object with a
    'stages' field. Anything else is a validation failure.
    """
    text = raw.strip()
    if text.startswith("{") or text.startswith('"'):
        try:
            parsed = json.loads(text)
        except json.JSONDecodeError:
            return text
        if isinstance(parsed, str):
            return parsed
        if isinstance(parsed, dict) and isinstance(parsed.get("stages"), str):
            return parsed["stages"]
        raise StageLabelError("response JSON has no usable 'stages' string")
    return text


def classify_stage(
    req: StageRequest,
    gateway: Gateway,
    templates: PromptTemplates,
) -> StageLabelSet:
    """Classify a patient message, never hard-failing on content.

    A malformed response gets one repair re-prompt with the validation
    error appended; a second failure falls back to the single most
    generic stage.
    """
    prompt = build_stage_prompt(req, templates)
    raw = gateway.chat(prompt)
    try:
        return validate_stage_labels(extract_stages_field(raw), req.turn_index)
    except StageLabelError as first_error:
        repair_prompt = (
            f"{prompt}\n\n"
            f"Your previous answer {raw!r} was invalid: {first_error}. "
            "Answer again with only the stage code string, following every rule."
        )
        raw = gateway.chat(repair_prompt)
        try:
            return validate_stage_labels(extract_stages_field(raw), req.turn_index)
        except StageLabelError:
            return StageLabelSet(codes=(StageCode.IS,), turn_index=req.turn_index)
