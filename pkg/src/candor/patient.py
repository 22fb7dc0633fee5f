"""Patient simulation: affect dynamics, prompt assembly, and reply generation.

The patient prompt only ever sees patient-side knowledge (profile,
situation, what they have been told, and the sanitized digest), never
the error description. Reply markup is validated with one repair
re-prompt, then degraded to tag-free text. A turn budget forces a
closing statement by the fifth patient turn regardless of what the
provider produces.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from fractions import Fraction

from .asymmetry import KnowledgePartition
from .domain import (
    AFFECT_DIMENSIONS,
    AffectiveState,
    CaseScenario,
    EvaluatorDigest,
    PatientUtterance,
    Turn,
    clamp01,
    count_sentences,
    strip_markup,
    truncate_sentences,
)
from .errors import (
    DomainValidationError,
    MalformedMarkup,
    ProviderUnavailable,
    StructureInvalid,
)
from .evaluator import parse_provider_json, render_history
from .providers import Gateway
from .templates import PromptTemplates

logger = logging.getLogger(__name__)

DEFAULT_ETA = Fraction(1, 5)
DEFAULT_TURN_BUDGET = 5
SENTENCE_CAP = 3

_DIRECTION_SIGN = {"positive": 1, "mixed": 0, "negative": -1}


@dataclass(frozen=True)
class PatientContext:
    """Everything the simulated patient knows going into its next reply."""

    case: CaseScenario
    partition: KnowledgePartition
    affect: AffectiveState
    memory: tuple[Turn, ...]
    patient_turn_count: int
    window: int = 12
    eta: Fraction = DEFAULT_ETA
    turn_budget: int = DEFAULT_TURN_BUDGET

    def __post_init__(self) -> None:
        if len(self.memory) > self.window:
            raise DomainValidationError("memory exceeds the configured window")


def update_affect(affect: AffectiveState, digest: EvaluatorDigest,
                  eta: Fraction = DEFAULT_ETA) -> AffectiveState:
    """Shift emotions one step along the feedback direction.

    Positive turns raise trust and lower the distress dimensions by eta;
    negative turns do the reverse; mixed turns leave the state unchanged.
    Every value is clamped to [0, 1].
    """
    s = _DIRECTION_SIGN[digest.direction]
    values: dict[str, Fraction] = {}
    for dim in AFFECT_DIMENSIONS:
        current = affect.values[dim]
        delta = eta * s if dim == "trust" else -eta * s
        values[dim] = clamp01(current + delta)
    return AffectiveState(values)


def _identity_line(case: CaseScenario) -> str:
    if case.interlocutor == "caregiver":
        return f"Caregiver ({case.relationship}) speaking on behalf of the patient"
    return "The patient"


def _render_digest(digest: EvaluatorDigest) -> str:
    if digest.keywords:
        return f"Direction: {digest.direction}. Keywords: {', '.join(digest.keywords)}"
    return f"Direction: {digest.direction}. Keywords: (none)"


def _render_affect(affect: AffectiveState) -> str:
    parts = [f"{dim}={float(affect.values[dim]):.2f}" for dim in AFFECT_DIMENSIONS]
    return ", ".join(parts)


def build_patient_prompt(ctx: PatientContext, digest: EvaluatorDigest,
                         templates: PromptTemplates) -> str:
    """Fill the patient reply template; the error description has no slot here."""
    context_info = (
        f"- Profile: {ctx.case.patient_profile}\n"
        f"- Patient turns so far: {ctx.patient_turn_count}\n"
        f"- Current emotional state (0-1 scale): {_render_affect(ctx.affect)}"
    )
    user = templates.patient_history.format(
        identity=_identity_line(ctx.case),
        patient_context_info=context_info,
        medical_situation=ctx.case.medical_situation,
        patient_knowledge=ctx.case.patient_knowledge,
        evaluation=_render_digest(digest),
        history_text=render_history(ctx.memory),
    )
    return f"{templates.patient_response.rstrip()}\n\n{user.rstrip()}"


def _parse_reply(raw: str) -> tuple[str, str, bool]:
    """Extract (ssml, voice instructions, is_closing) from provider output."""
    data = parse_provider_json(raw)
    if not isinstance(data, dict):
        raise StructureInvalid("patient reply must be a JSON object")
    ssml = data.get("response")
    if not isinstance(ssml, str) or not ssml.strip():
        raise StructureInvalid("patient reply needs a non-empty 'response' string")
    instructions = data.get("descriptive_instructions")
    if not isinstance(instructions, str) or not instructions.strip():
        raise StructureInvalid("patient reply needs 'descriptive_instructions'")
    is_closing = data.get("is_closing", False)
    if not isinstance(is_closing, bool):
        raise StructureInvalid("'is_closing' must be a boolean")
    return ssml.strip(), instructions.strip(), is_closing


def _validate_reply_markup(ssml: str) -> str:
    """Return the plain text if the markup and sentence cap hold."""
    stripped = ssml.strip()
    if not (stripped.startswith("<speak>") and stripped.endswith("</speak>")):
        raise MalformedMarkup("reply must be wrapped in speak tags")
    plain = strip_markup(stripped)
    if count_sentences(plain) > SENTENCE_CAP:
        raise MalformedMarkup(f"reply exceeds {SENTENCE_CAP} sentences")
    return plain


def _degrade_reply(ssml: str) -> tuple[str, str]:
    """Best-effort plain text: drop every tag, truncate, re-wrap."""
    text = re.sub(r"<[^<>]*>", " ", ssml)
    text = re.sub(r"\s+", " ", text).strip() or "I see."
    plain = truncate_sentences(text, SENTENCE_CAP)
    return f"<speak>{plain}</speak>", plain


def generate_patient_utterance(
    ctx: PatientContext,
    digest: EvaluatorDigest,
    gateway: Gateway,
    templates: PromptTemplates,
) -> tuple[PatientUtterance, PatientContext]:
    """Generate the next patient reply and advance the patient context.

    The reply is validated (JSON shape, speak wrapper, sentence cap)
    with one repair re-prompt; afterwards it is degraded rather than
    failed. The turn budget forces is_closing on the final turn.
    """
    prompt = build_patient_prompt(ctx, digest, templates)
    raw = gateway.chat(prompt)
    ssml = instructions = plain = None
    is_closing = False
    try:
        ssml, instructions, is_closing = _parse_reply(raw)
        plain = _validate_reply_markup(ssml)
    except (StructureInvalid, MalformedMarkup) as first_error:
        repair = (
            f"{prompt}\n\n"
            f"Your previous answer was invalid: {first_error}. "
            "Respond again as a single JSON object with fields response (wrapped in "
            "<speak> tags, at most 3 sentences), descriptive_instructions, and is_closing."
        )
        raw = gateway.chat(repair)
        try:
            ssml, instructions, is_closing = _parse_reply(raw)
            plain = _validate_reply_markup(ssml)
        except (StructureInvalid, MalformedMarkup):
            logger.info("patient reply degraded to plain text after failed repair")
            if ssml is None:  # not even JSON; treat the raw text as the reply
                ssml = raw
            if instructions is None:
                instructions = "neutral"
            ssml, plain = _degrade_reply(ssml)

    assert plain is not None and instructions is not None
    new_count = ctx.patient_turn_count + 1
    if new_count >= ctx.turn_budget:
        is_closing = True
    utterance = PatientUtterance(
        ssml_text=ssml,
        plain_text=plain,
        voice_instructions=instructions,
        is_closing=is_closing,
        audio_ref=None,
    )
    new_ctx = PatientContext(
        case=ctx.case,
        partition=ctx.partition,
        affect=update_affect(ctx.affect, digest, ctx.eta),
        memory=ctx.memory,
        patient_turn_count=new_count,
        window=ctx.window,
        eta=ctx.eta,
        turn_budget=ctx.turn_budget,
    )
    return utterance, new_ctx


def synthesize_patient_audio(
    utt: PatientUtterance, gateway: Gateway
) -> tuple[PatientUtterance, bytes | None]:
    """Synthesize audio for an utterance; degrade to text-only on failure.

    Returns the utterance (audio handle attached by the caller's blob
    store) together with the raw audio bytes, or None when the speech
    provider is unavailable.
    """
    try:
        audio = gateway.synthesize(utt.ssml_text, utt.voice_instructions)
    except ProviderUnavailable as exc:
        logger.warning("speech synthesis unavailable, delivering text only: %s", exc)
        return utt, None
    return utt, audio
