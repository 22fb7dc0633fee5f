"""Shared domain types for disclosure practice sessions.

Everything here is an immutable value with its invariants enforced at
construction time, plus the pure operations other modules build on:
stage label parsing, phrase anchoring, and speech markup stripping.
All types serialize to a stable JSON-compatible tree via ``to_dict`` /
``from_dict``; exact scores are kept as rationals and serialized as
fraction strings so replay stays byte-identical.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from fractions import Fraction
from typing import Any

from .errors import (
    DomainValidationError,
    EmptyStages,
    IllegalEnd,
    IllegalStart,
    InvalidCase,
    MalformedMarkup,
    TooManyStages,
    UnknownCode,
)
from .textnorm import tokenize


def canonical_json(data: Any) -> str:
    """Render a JSON tree in canonical form (sorted keys, no whitespace)."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def fraction_to_str(value: Fraction) -> str:
    return str(value)


def fraction_from_str(raw: str) -> Fraction:
    return Fraction(raw)


def render_score(value: Fraction) -> str:
    """Render an exact score to one decimal place for display."""
    dec = Decimal(value.numerator) / Decimal(value.denominator)
    return str(dec.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


class StageCode(str, Enum):
    """Conversation stage of a patient message."""

    IS = "IS"
    EE = "EE"
    TA = "TA"
    R = "R"
    START = "START"
    END = "END"


class Area(str, Enum):
    """Feedback area a stage maps to."""

    ACKNOWLEDGMENT_EXPLANATION = "acknowledgment_explanation"
    EMOTIONAL_SUPPORT = "emotional_support"
    TRUST_ACCOUNTABILITY = "trust_accountability"
    RESOLUTION = "resolution"
    OPENING = "opening"
    CLOSING = "closing"


STAGE_TO_AREA: dict[StageCode, Area] = {
    StageCode.IS: Area.ACKNOWLEDGMENT_EXPLANATION,
    StageCode.EE: Area.EMOTIONAL_SUPPORT,
    StageCode.TA: Area.TRUST_ACCOUNTABILITY,
    StageCode.R: Area.RESOLUTION,
    StageCode.START: Area.OPENING,
    StageCode.END: Area.CLOSING,
}

SUBSTANTIVE_AREAS: tuple[Area, ...] = (
    Area.ACKNOWLEDGMENT_EXPLANATION,
    Area.EMOTIONAL_SUPPORT,
    Area.TRUST_ACCOUNTABILITY,
    Area.RESOLUTION,
)


@dataclass(frozen=True)
class Criterion:
    """One rubric line within a feedback area.

    ``conditional`` marks criteria that only apply when the patient
    explicitly asked (the forward-looking prevention rubric); those may
    be reported as not applicable and are then excluded from means.
    """

    id: str
    text: str
    conditional: bool = False


AREA_CRITERIA: dict[Area, tuple[Criterion, ...]] = {
    Area.ACKNOWLEDGMENT_EXPLANATION: (
        Criterion("IS1", "Explains what happened clearly and specifically"),
        Criterion("IS2", "Discloses errors transparently"),
        Criterion("IS3", "Explains system factors and team involvement"),
        Criterion("IS4", "Addresses missing or uncertain information"),
    ),
    Area.EMOTIONAL_SUPPORT: (
        Criterion("EE1", "Acknowledges and validates the patient's emotions (fear/upset/sadness)"),
        Criterion("EE2", "Validates patient feelings"),
        Criterion("EE3", "Handles blame appropriately"),
        Criterion("EE4", "Shows understanding of patient's perspective"),
        Criterion("EE5", "Demonstrates genuine empathy"),
    ),
    Area.TRUST_ACCOUNTABILITY: (
        Criterion("TA1", "Offers specific, genuine apology"),
        Criterion("TA2", "Accepts appropriate responsibility"),
        Criterion("TA3", "Addresses trust concerns directly"),
        Criterion("TA4", "Takes collaborative approach with patient"),
        Criterion("TA5", "Makes concrete efforts to rebuild trust"),
    ),
    Area.RESOLUTION: (
        Criterion("R1", "Clearly communicates the next steps with clear timeframes"),
        Criterion(
            "R2",
            "Future prevention when asked: prevention measures, commitment to "
            "investigate, or specific improvements",
            conditional=True,
        ),
    ),
    Area.OPENING: (
        Criterion("START1", "Warm and welcoming opening"),
        Criterion("START2", "Brief explanation of the purpose of the chat"),
    ),
    Area.CLOSING: (
        Criterion("END1", "Warm and welcoming closing"),
    ),
}

CRITERION_AREA: dict[str, Area] = {
    crit.id: area for area, crits in AREA_CRITERIA.items() for crit in crits
}

CRITERION_TEXT: dict[str, str] = {
    crit.id: crit.text for crits in AREA_CRITERIA.values() for crit in crits
}

AFFECT_DIMENSIONS: tuple[str, ...] = ("anxiety", "anger", "trust", "confusion", "grief")

DEFAULT_INITIAL_AFFECT: dict[str, Fraction] = {
    "anxiety": Fraction(1, 2),
    "anger": Fraction(1, 2),
    "trust": Fraction(3, 5),
    "confusion": Fraction(1, 2),
    "grief": Fraction(1, 2),
}


def clamp01(value: Fraction) -> Fraction:
    if value < 0:
        return Fraction(0)
    if value > 1:
        return Fraction(1)
    return value


@dataclass(frozen=True)
class AffectiveState:
    """Continuous emotional dimensions, each clamped to [0, 1]."""

    values: dict[str, Fraction]

    def __post_init__(self) -> None:
        if set(self.values) != set(AFFECT_DIMENSIONS):
            raise DomainValidationError(
                f"affect dimensions must be exactly {AFFECT_DIMENSIONS}"
            )
        clamped = {dim: clamp01(Fraction(v)) for dim, v in self.values.items()}
        object.__setattr__(self, "values", clamped)

    @classmethod
    def initial(cls, overrides: dict[str, Fraction] | None = None) -> AffectiveState:
        values = dict(DEFAULT_INITIAL_AFFECT)
        if overrides:
            for dim, v in overrides.items():
                if dim not in values:
                    raise DomainValidationError(f"unknown affect dimension: {dim}")
                values[dim] = Fraction(v)
        return cls(values)

    def to_dict(self) -> dict[str, str]:
        return {dim: fraction_to_str(self.values[dim]) for dim in AFFECT_DIMENSIONS}

    @classmethod
    def from_dict(cls, data: dict[str, str]) -> AffectiveState:
        return cls({dim: fraction_from_str(data[dim]) for dim in AFFECT_DIMENSIONS})

    def __eq__(self, other: object) -> bool:
        return isinstance(other, AffectiveState) and self.values == other.values


@dataclass(frozen=True)
class CaseScenario:
    """An error case: who is in the room and who knows what."""

    case_id: str
    specialty: str
    patient_profile: str
    interlocutor: str  # "patient" or "caregiver"
    medical_situation: str
    medical_error: str
    patient_knowledge: str
    cause_known: bool
    origin: str  # "predefined" or "bespoke"
    relationship: str | None = None  # required iff interlocutor == "caregiver"
    initial_affect: dict[str, Fraction] | None = None

    def __post_init__(self) -> None:
        if self.interlocutor not in ("patient", "caregiver"):
            raise InvalidCase(f"interlocutor must be patient or caregiver, got {self.interlocutor!r}")
        if self.origin not in ("predefined", "bespoke"):
            raise InvalidCase(f"origin must be predefined or bespoke, got {self.origin!r}")
        if not self.medical_error.strip():
            raise InvalidCase("medical_error must be non-empty")
        if not self.patient_knowledge.strip():
            raise InvalidCase("patient_knowledge must be non-empty")
        has_rel = bool(self.relationship and self.relationship.strip())
        if self.interlocutor == "caregiver" and not has_rel:
            raise InvalidCase("caregiver interlocutor requires a relationship")
        if self.interlocutor == "patient" and has_rel:
            raise InvalidCase("relationship only applies to caregiver interlocutors")

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "case_id": self.case_id,
            "specialty": self.specialty,
            "patient_profile": self.patient_profile,
            "interlocutor": self.interlocutor,
            "medical_situation": self.medical_situation,
            "medical_error": self.medical_error,
            "patient_knowledge": self.patient_knowledge,
            "cause_known": self.cause_known,
            "origin": self.origin,
            "relationship": self.relationship,
        }
        if self.initial_affect is not None:
            data["initial_affect"] = {
                dim: fraction_to_str(v) for dim, v in sorted(self.initial_affect.items())
            }
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CaseScenario:
        required = (
            "case_id", "specialty", "patient_profile", "interlocutor",
            "medical_situation", "medical_error", "patient_knowledge",
            "cause_known", "origin",
        )
        for key in required:
            if key not in data:
                raise InvalidCase(f"case is missing required field: {key}")
        initial_affect = None
        if data.get("initial_affect") is not None:
            initial_affect = {
                dim: fraction_from_str(str(v)) for dim, v in data["initial_affect"].items()
            }
        return cls(
            case_id=str(data["case_id"]),
            specialty=str(data["specialty"]),
            patient_profile=str(data["patient_profile"]),
            interlocutor=str(data["interlocutor"]),
            medical_situation=str(data["medical_situation"]),
            medical_error=str(data["medical_error"]),
            patient_knowledge=str(data["patient_knowledge"]),
            cause_known=bool(data["cause_known"]),
            origin=str(data["origin"]),
            relationship=data.get("relationship"),
            initial_affect=initial_affect,
        )


@dataclass(frozen=True)
class StageLabelSet:
    """Validated stage codes for one classification event.

    ``turn_index`` is the 0-based index of the classification event: the
    conversation opening is event 0 (the only place START is legal), and
    each classified patient message advances the index by one.
    """

    codes: tuple[StageCode, ...]
    turn_index: int

    def __post_init__(self) -> None:
        if len(self.codes) == 0:
            raise EmptyStages("at least one stage code is required")
        if len(set(self.codes)) != len(self.codes):
            raise DomainValidationError("duplicate stage codes")
        if len(self.codes) > 2:
            raise TooManyStages(f"maximum two stages allowed, got {len(self.codes)}")
        if StageCode.START in self.codes:
            if len(self.codes) > 1:
                raise IllegalStart("START cannot be combined with other stages")
            if self.turn_index != 0:
                raise IllegalStart("START only applies to the first message")
        if StageCode.END in self.codes and len(self.codes) > 1:
            raise IllegalEnd("END cannot be combined with other stages")

    def render(self) -> str:
        return ",".join(code.value for code in self.codes)

    def to_dict(self) -> dict[str, Any]:
        return {"codes": [c.value for c in self.codes], "turn_index": self.turn_index}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> StageLabelSet:
        return cls(
            codes=tuple(StageCode(c) for c in data["codes"]),
            turn_index=int(data["turn_index"]),
        )


def validate_stage_labels(raw: str, turn_index: int) -> StageLabelSet:
    """Parse a comma-separated stage string into a validated label set.

    Whitespace is trimmed and codes are uppercased; repeated codes
    collapse to one mention. Raises a StageLabelError subclass when the
    result would violate the stage rules.
    """
    parts = [p.strip().upper() for p in raw.split(",")]
    parts = [p for p in parts if p]
    if not parts:
        raise EmptyStages("no stage codes present")
    codes: list[StageCode] = []
    for part in parts:
        try:
            code = StageCode(part)
        except ValueError:
            raise UnknownCode(part) from None
        if code not in codes:
            codes.append(code)
    return StageLabelSet(codes=tuple(codes), turn_index=turn_index)


def stages_to_areas(labels: StageLabelSet) -> list[Area]:
    """Map stage codes to feedback areas, order preserved, deduplicated."""
    areas: list[Area] = []
    for code in labels.codes:
        area = STAGE_TO_AREA[code]
        if area not in areas:
            areas.append(area)
    return areas


@dataclass(frozen=True)
class ImprovementArea:
    """One prioritized improvement with a short subtitle and a concrete rewrite."""

    subtitle: str
    description: str
    suggestion: str
    example_phrasing: str

    def __post_init__(self) -> None:
        words = self.subtitle.split()
        if not 3 <= len(words) <= 5:
            raise DomainValidationError(
                f"improvement subtitle must be 3-5 words, got {len(words)}"
            )

    def to_dict(self) -> dict[str, str]:
        return {
            "subtitle": self.subtitle,
            "description": self.description,
            "suggestion": self.suggestion,
            "example_phrasing": self.example_phrasing,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ImprovementArea:
        return cls(
            subtitle=str(data["subtitle"]),
            description=str(data["description"]),
            suggestion=str(data["suggestion"]),
            example_phrasing=str(data["example_phrasing"]),
        )


def mean_score(scores: dict[str, int]) -> Fraction:
    if not scores:
        raise DomainValidationError("cannot average an empty score map")
    return Fraction(sum(scores.values()), len(scores))


@dataclass(frozen=True)
class TurnFeedback:
    """Rubric feedback for one physician turn.

    Phrase spans are (start, end) character offsets into the evaluated
    physician transcript, resolved at generation time so clients can
    highlight without re-running the matcher.
    """

    turn_index: int
    stages: StageLabelSet
    overall_score: Fraction
    criterion_scores: dict[str, int]
    strengths: tuple[str, ...]
    improvements: tuple[ImprovementArea, ...]
    encouragement: str
    strength_phrases: tuple[str, ...]
    improvement_phrases: tuple[str, ...]
    strength_spans: tuple[tuple[int, int], ...] = ()
    improvement_spans: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if not 1 <= len(self.strengths) <= 2:
            raise DomainValidationError("strengths must have 1 or 2 entries")
        if not 1 <= len(self.improvements) <= 2:
            raise DomainValidationError("improvements must have 1 or 2 entries")
        if not self.encouragement.strip():
            raise DomainValidationError("encouragement must be non-empty")
        if self.strength_spans and len(self.strength_spans) != len(self.strength_phrases):
            raise DomainValidationError("strength spans must parallel the phrases")
        if self.improvement_spans and len(self.improvement_spans) != len(self.improvement_phrases):
            raise DomainValidationError("improvement spans must parallel the phrases")
        allowed = {
            crit.id
            for area in stages_to_areas(self.stages)
            for crit in AREA_CRITERIA[area]
        }
        for cid, score in self.criterion_scores.items():
            if cid not in allowed:
                raise DomainValidationError(
                    f"criterion {cid} does not belong to the selected areas"
                )
            if not isinstance(score, int) or not 0 <= score <= 5:
                raise DomainValidationError(f"criterion {cid} score must be 0..5")
        if self.overall_score != mean_score(self.criterion_scores):
            raise DomainValidationError("overall_score must equal the criterion mean")

    def to_dict(self) -> dict[str, Any]:
        return {
            "turn_index": self.turn_index,
            "stages": self.stages.to_dict(),
            "overall_score": fraction_to_str(self.overall_score),
            "overall_score_display": render_score(self.overall_score),
            "criterion_scores": dict(sorted(self.criterion_scores.items())),
            "strengths": list(self.strengths),
            "improvements": [imp.to_dict() for imp in self.improvements],
            "encouragement": self.encouragement,
            "strength_phrases": list(self.strength_phrases),
            "improvement_phrases": list(self.improvement_phrases),
            "strength_spans": [list(span) for span in self.strength_spans],
            "improvement_spans": [list(span) for span in self.improvement_spans],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TurnFeedback:
        return cls(
            turn_index=int(data["turn_index"]),
            stages=StageLabelSet.from_dict(data["stages"]),
            overall_score=fraction_from_str(data["overall_score"]),
            criterion_scores={k: int(v) for k, v in data["criterion_scores"].items()},
            strengths=tuple(data["strengths"]),
            improvements=tuple(ImprovementArea.from_dict(i) for i in data["improvements"]),
            encouragement=str(data["encouragement"]),
            strength_phrases=tuple(data["strength_phrases"]),
            improvement_phrases=tuple(data["improvement_phrases"]),
            strength_spans=tuple(tuple(s) for s in data.get("strength_spans", [])),
            improvement_spans=tuple(tuple(s) for s in data.get("improvement_spans", [])),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TurnFeedback):
            return NotImplemented
        return self.to_dict() == other.to_dict()


@dataclass(frozen=True)
class AreaReport:
    """Per-area slice of the end-of-session report."""

    addressed: bool
    score: Fraction | None
    assessment: str
    strengths: tuple[str, ...]
    improvements: tuple[str, ...]
    examples: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.addressed and self.score is not None:
            raise DomainValidationError("unaddressed areas must not carry a score")

    def to_dict(self) -> dict[str, Any]:
        return {
            "addressed": self.addressed,
            "score": fraction_to_str(self.score) if self.score is not None else None,
            "score_display": render_score(self.score) if self.score is not None else None,
            "assessment": self.assessment,
            "strengths": list(self.strengths),
            "improvements": list(self.improvements),
            "examples": list(self.examples),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> AreaReport:
        score = data.get("score")
        return cls(
            addressed=bool(data["addressed"]),
            score=fraction_from_str(score) if score is not None else None,
            assessment=str(data["assessment"]),
            strengths=tuple(data["strengths"]),
            improvements=tuple(data["improvements"]),
            examples=tuple(data["examples"]),
        )


@dataclass(frozen=True)
class OverallFeedback:
    """End-of-session report across the four substantive areas."""

    per_area: dict[Area, AreaReport]
    overall_text: str
    overall_score: Fraction | None
    key_strengths: tuple[str, ...]
    key_improvements: tuple[str, ...]

    def __post_init__(self) -> None:
        missing = [a.value for a in SUBSTANTIVE_AREAS if a not in self.per_area]
        if missing:
            raise DomainValidationError(f"missing substantive areas: {missing}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "per_area": {
                area.value: self.per_area[area].to_dict()
                for area in SUBSTANTIVE_AREAS
            },
            "overall_text": self.overall_text,
            "overall_score": (
                fraction_to_str(self.overall_score) if self.overall_score is not None else None
            ),
            "overall_score_display": (
                render_score(self.overall_score) if self.overall_score is not None else None
            ),
            "key_strengths": list(self.key_strengths),
            "key_improvements": list(self.key_improvements),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> OverallFeedback:
        score = data.get("overall_score")
        return cls(
            per_area={
                Area(name): AreaReport.from_dict(report)
                for name, report in data["per_area"].items()
            },
            overall_text=str(data["overall_text"]),
            overall_score=fraction_from_str(score) if score is not None else None,
            key_strengths=tuple(data["key_strengths"]),
            key_improvements=tuple(data["key_improvements"]),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OverallFeedback):
            return NotImplemented
        return self.to_dict() == other.to_dict()


@dataclass(frozen=True)
class EvaluatorDigest:
    """Sanitized keyword summary of one turn's feedback."""

    turn_index: int
    keywords: tuple[str, ...]
    direction: str  # positive | mixed | negative

    def __post_init__(self) -> None:
        if self.direction not in ("positive", "mixed", "negative"):
            raise DomainValidationError(f"bad digest direction: {self.direction!r}")
        if len(self.keywords) > 12:
            raise DomainValidationError("digest keywords capped at 12")

    def to_dict(self) -> dict[str, Any]:
        return {
            "turn_index": self.turn_index,
            "keywords": list(self.keywords),
            "direction": self.direction,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> EvaluatorDigest:
        return cls(
            turn_index=int(data["turn_index"]),
            keywords=tuple(data["keywords"]),
            direction=str(data["direction"]),
        )


# --- speech markup -----------------------------------------------------------

_TAG_RE = re.compile(r"<(/?)(\w+)\s*>")


def strip_markup(ssml_text: str) -> str:
    """Remove speech markup, collapsing whitespace.

    Text with no tags passes through unchanged (so stripping is
    idempotent). Text containing tags must be wrapped in speak tags and
    may only use balanced emphasis tags inside.
    """
    text = ssml_text.strip()
    if "<" not in text and ">" not in text:
        return re.sub(r"\s+", " ", text).strip()

    pos = 0
    out: list[str] = []
    stack: list[str] = []
    saw_speak = False
    for match in _TAG_RE.finditer(text):
        before = text[pos:match.start()]
        if "<" in before or ">" in before:
            raise MalformedMarkup("stray angle bracket outside a tag")
        out.append(before)
        closing, name = match.group(1) == "/", match.group(2).lower()
        if name not in ("speak", "emphasis"):
            raise MalformedMarkup(f"unsupported tag: {name}")
        if not closing:
            if name == "speak":
                if saw_speak or match.start() != 0:
                    raise MalformedMarkup("speak must be the single outer wrapper")
                saw_speak = True
            stack.append(name)
        else:
            if not stack or stack[-1] != name:
                raise MalformedMarkup(f"unbalanced closing tag: {name}")
            stack.pop()
            if name == "speak" and match.end() != len(text):
                raise MalformedMarkup("content after the closing speak tag")
        pos = match.end()
    tail = text[pos:]
    if "<" in tail or ">" in tail:
        raise MalformedMarkup("stray angle bracket outside a tag")
    out.append(tail)
    if stack:
        raise MalformedMarkup(f"unclosed tags: {stack}")
    if not saw_speak:
        raise MalformedMarkup("missing speak wrapper")
    return re.sub(r"\s+", " ", "".join(out)).strip()


def count_sentences(plain_text: str) -> int:
    segments = re.split(r"[.!?]+", plain_text)
    return sum(1 for seg in segments if seg.strip())


def truncate_sentences(plain_text: str, limit: int) -> str:
    """Keep at most ``limit`` sentences of plain text."""
    for match in re.finditer(r"[.!?]+", plain_text):
        prefix = plain_text[:match.end()]
        if count_sentences(prefix) >= limit:
            return prefix.strip()
    return plain_text.strip()


@dataclass(frozen=True)
class PatientUtterance:
    """The simulated patient's reply: markup text plus voice styling."""

    ssml_text: str
    plain_text: str
    voice_instructions: str
    is_closing: bool
    audio_ref: str | None = None

    def __post_init__(self) -> None:
        stripped = self.ssml_text.strip()
        if not (stripped.startswith("<speak>") and stripped.endswith("</speak>")):
            raise MalformedMarkup("utterance must be wrapped in speak tags")
        plain = strip_markup(self.ssml_text)  # raises on unbalanced markup
        if plain != self.plain_text:
            raise DomainValidationError("plain_text must match the stripped markup")
        if count_sentences(self.plain_text) > 3:
            raise DomainValidationError("patient replies are capped at 3 sentences")

    def to_dict(self) -> dict[str, Any]:
        return {
            "ssml_text": self.ssml_text,
            "plain_text": self.plain_text,
            "voice_instructions": self.voice_instructions,
            "is_closing": self.is_closing,
            "audio_ref": self.audio_ref,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PatientUtterance:
        return cls(
            ssml_text=str(data["ssml_text"]),
            plain_text=str(data["plain_text"]),
            voice_instructions=str(data["voice_instructions"]),
            is_closing=bool(data["is_closing"]),
            audio_ref=data.get("audio_ref"),
        )


@dataclass(frozen=True)
class Turn:
    """One utterance in the conversation, clinician or patient."""

    index: int
    speaker: str  # "clinician" | "patient"
    transcript: str
    created_at: str  # ISO 8601 UTC
    audio_ref: str | None = None

    def __post_init__(self) -> None:
        if self.speaker not in ("clinician", "patient"):
            raise DomainValidationError(f"bad speaker: {self.speaker!r}")
        expected = "clinician" if self.index % 2 == 0 else "patient"
        if self.speaker != expected:
            raise DomainValidationError(
                f"turn {self.index} must be spoken by the {expected}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "speaker": self.speaker,
            "transcript": self.transcript,
            "created_at": self.created_at,
            "audio_ref": self.audio_ref,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Turn:
        return cls(
            index=int(data["index"]),
            speaker=str(data["speaker"]),
            transcript=str(data["transcript"]),
            created_at=str(data["created_at"]),
            audio_ref=data.get("audio_ref"),
        )


@dataclass(frozen=True)
class SessionState:
    """Aggregate state of one practice session.

    The memory window is a suffix view over ``turns``; artifacts are
    kept per physician turn index. The whole value is reconstructible
    from the session's event log.
    """

    session_id: str
    case: CaseScenario
    turns: tuple[Turn, ...] = ()
    stage_history: tuple[StageLabelSet, ...] = ()
    affect: AffectiveState = field(default_factory=AffectiveState.initial)
    window: int = 12
    phase: str = "created"  # created | active | ended
    patient_turn_count: int = 0
    feedbacks: tuple[tuple[int, TurnFeedback | None], ...] = ()
    digests: tuple[EvaluatorDigest, ...] = ()
    utterances: tuple[tuple[int, PatientUtterance], ...] = ()
    overall: OverallFeedback | None = None

    def __post_init__(self) -> None:
        if self.phase not in ("created", "active", "ended"):
            raise DomainValidationError(f"bad phase: {self.phase!r}")
        if self.window < 1:
            raise DomainValidationError("memory window must be at least 1")
        for i, turn in enumerate(self.turns):
            if turn.index != i:
                raise DomainValidationError("turn indices must be contiguous")

    @property
    def memory_window(self) -> tuple[Turn, ...]:
        return self.turns[-self.window:]

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "case": self.case.to_dict(),
            "turns": [t.to_dict() for t in self.turns],
            "stage_history": [s.to_dict() for s in self.stage_history],
            "affect": self.affect.to_dict(),
            "window": self.window,
            "phase": self.phase,
            "patient_turn_count": self.patient_turn_count,
            "feedbacks": [
                {"turn_index": idx, "feedback": fb.to_dict() if fb else None}
                for idx, fb in self.feedbacks
            ],
            "digests": [d.to_dict() for d in self.digests],
            "utterances": [
                {"turn_index": idx, "utterance": utt.to_dict()}
                for idx, utt in self.utterances
            ],
            "overall": self.overall.to_dict() if self.overall else None,
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SessionState):
            return NotImplemented
        return self.to_dict() == other.to_dict()


# --- phrase anchoring ---------------------------------------------------------

def normalize_phrase_match(phrase: str, transcript: str) -> tuple[int, int] | None:
    """Find a phrase in a transcript, ignoring case and punctuation.

    Matching is at token granularity: the phrase's tokens must appear as
    a contiguous token run. Returns the character span in the original
    transcript, or None when absent.
    """
    phrase_tokens = [t.text for t in tokenize(phrase)]
    if not phrase_tokens:
        return None
    transcript_tokens = tokenize(transcript)
    k = len(phrase_tokens)
    for i in range(len(transcript_tokens) - k + 1):
        if [t.text for t in transcript_tokens[i:i + k]] == phrase_tokens:
            return (transcript_tokens[i].start, transcript_tokens[i + k - 1].end)
    return None
