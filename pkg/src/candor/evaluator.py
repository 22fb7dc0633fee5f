"""Turn-level and end-of-session feedback generation.

The provider is asked for structured JSON (criterion scores, strengths,
improvements, encouragement, phrases). Output is validated against the
stage-selected rubric; one repair re-prompt is attempted before the
caller degrades gracefully. Turn scores are kept per area so the final
report can attach exact machine means alongside the narrative.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .domain import (
    AREA_CRITERIA,
    CRITERION_AREA,
    CRITERION_TEXT,
    SUBSTANTIVE_AREAS,
    Area,
    AreaReport,
    CaseScenario,
    ImprovementArea,
    OverallFeedback,
    StageCode,
    StageLabelSet,
    TurnFeedback,
    Turn,
    mean_score,
    normalize_phrase_match,
    render_score,
    stages_to_areas,
)
from .errors import DomainValidationError, StructureInvalid
from .providers import Gateway
from .templates import PromptTemplates

logger = logging.getLogger(__name__)

# Stage order used when concatenating framework blocks and reporting.
_STAGE_ORDER = (StageCode.IS, StageCode.EE, StageCode.TA, StageCode.R,
                StageCode.START, StageCode.END)

_AREA_STAGE: dict[Area, StageCode] = {
    Area.ACKNOWLEDGMENT_EXPLANATION: StageCode.IS,
    Area.EMOTIONAL_SUPPORT: StageCode.EE,
    Area.TRUST_ACCOUNTABILITY: StageCode.TA,
    Area.RESOLUTION: StageCode.R,
    Area.OPENING: StageCode.START,
    Area.CLOSING: StageCode.END,
}


@dataclass(frozen=True)
class ScoredTurn:
    turn_index: int
    scores: dict[str, int]

    def to_dict(self) -> dict[str, Any]:
        return {"turn_index": self.turn_index, "scores": dict(sorted(self.scores.items()))}


@dataclass(frozen=True)
class EvaluatorState:
    """Running assessments per area plus the stages seen so far."""

    per_area_running: dict[Area, tuple[ScoredTurn, ...]] = field(default_factory=dict)
    stages_seen: frozenset[StageCode] = frozenset()

    def with_stages(self, stages: StageLabelSet) -> EvaluatorState:
        return EvaluatorState(
            per_area_running=self.per_area_running,
            stages_seen=self.stages_seen | set(stages.codes),
        )

    def with_scores(self, turn_index: int, criterion_scores: dict[str, int]) -> EvaluatorState:
        by_area: dict[Area, dict[str, int]] = {}
        for cid, score in criterion_scores.items():
            by_area.setdefault(CRITERION_AREA[cid], {})[cid] = score
        running = dict(self.per_area_running)
        for area, scores in by_area.items():
            running[area] = running.get(area, ()) + (ScoredTurn(turn_index, scores),)
        return EvaluatorState(per_area_running=running, stages_seen=self.stages_seen)

    def area_scores(self, area: Area) -> list[int]:
        return [
            score
            for scored in self.per_area_running.get(area, ())
            for _, score in sorted(scored.scores.items())
        ]

    def area_mean(self, area: Area) -> Fraction | None:
        scores = self.area_scores(area)
        if not scores:
            return None
        return Fraction(sum(scores), len(scores))


def combine_frameworks(areas: list[Area], templates: PromptTemplates) -> str:
    """Concatenate the verbatim rubric blocks for the given areas, stage order."""
    if not areas:
        raise DomainValidationError("at least one feedback area is required")
    substantive = [a for a in areas if a in SUBSTANTIVE_AREAS]
    if len(substantive) > 2:
        raise DomainValidationError("at most two substantive areas per turn")
    ordered = sorted(areas, key=lambda a: _STAGE_ORDER.index(_AREA_STAGE[a]))
    blocks = [templates.framework_block(_AREA_STAGE[a].value).rstrip() for a in ordered]
    return "\n\n".join(blocks)


def render_history(turns: tuple[Turn, ...] | list[Turn]) -> str:
    if not turns:
        return "(no prior turns)"
    lines = []
    for turn in turns:
        label = "Physician" if turn.speaker == "clinician" else "Patient"
        lines.append(f"{label}: {turn.transcript}")
    return "\n".join(lines)


_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n(.*)\n```$", re.DOTALL)


def parse_provider_json(raw: str) -> Any:
    text = raw.strip()
    fenced = _FENCE_RE.match(text)
    if fenced:
        text = fenced.group(1).strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructureInvalid(f"response is not valid JSON: {exc}") from None


def _require(data: dict[str, Any], key: str, kind: type) -> Any:
    if key not in data:
        raise StructureInvalid(f"missing field: {key}")
    value = data[key]
    if not isinstance(value, kind):
        raise StructureInvalid(f"field {key} must be {kind.__name__}")
    return value


def _string_list(data: dict[str, Any], key: str, *, minimum: int, maximum: int) -> tuple[str, ...]:
    value = _require(data, key, list)
    if not all(isinstance(v, str) and v.strip() for v in value):
        raise StructureInvalid(f"field {key} must contain non-empty strings")
    if not minimum <= len(value) <= maximum:
        raise StructureInvalid(f"field {key} must have {minimum}-{maximum} entries")
    return tuple(value)


def _phrase_list(data: dict[str, Any], key: str) -> tuple[str, ...]:
    value = data.get(key, [])
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise StructureInvalid(f"field {key} must be a list of strings")
    return tuple(value)


def expected_criteria(areas: list[Area]) -> tuple[set[str], set[str]]:
    """Required and optional criterion ids for a set of areas."""
    required: set[str] = set()
    optional: set[str] = set()
    for area in areas:
        for crit in AREA_CRITERIA[area]:
            (optional if crit.conditional else required).add(crit.id)
    return required, optional


def parse_turn_feedback(
    raw: str, stages: StageLabelSet, turn_index: int
) -> TurnFeedback:
    """Validate the provider's structured turn feedback.

    Conditional criteria (the prevention rubric) may be omitted or null,
    meaning not applicable; they are then excluded from the mean.
    """
    data = parse_provider_json(raw)
    if not isinstance(data, dict):
        raise StructureInvalid("turn feedback must be a JSON object")
    areas = stages_to_areas(stages)
    required, optional = expected_criteria(areas)
    raw_scores = _require(data, "criterion_scores", dict)
    scores: dict[str, int] = {}
    for cid, value in raw_scores.items():
        if cid not in required and cid not in optional:
            raise StructureInvalid(f"criterion {cid} does not belong to this turn's areas")
        if value is None and cid in optional:
            continue
        if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= 5:
            raise StructureInvalid(f"criterion {cid} must be an integer 0..5")
        scores[cid] = value
    missing = required - set(scores)
    if missing:
        raise StructureInvalid(f"missing criterion scores: {sorted(missing)}")

    raw_improvements = _require(data, "improvements", list)
    if not 1 <= len(raw_improvements) <= 2:
        raise StructureInvalid("improvements must have 1-2 entries")
    improvements = []
    for item in raw_improvements:
        if not isinstance(item, dict):
            raise StructureInvalid("each improvement must be an object")
        try:
            improvements.append(
                ImprovementArea(
                    subtitle=str(_require(item, "subtitle", str)),
                    description=str(_require(item, "description", str)),
                    suggestion=str(_require(item, "suggestion", str)),
                    example_phrasing=str(_require(item, "example_phrasing", str)),
                )
            )
        except DomainValidationError as exc:
            raise StructureInvalid(str(exc)) from None

    encouragement = _require(data, "encouragement", str)
    if not encouragement.strip():
        raise StructureInvalid("encouragement must be non-empty")

    try:
        return TurnFeedback(
            turn_index=turn_index,
            stages=stages,
            overall_score=mean_score(scores),
            criterion_scores=scores,
            strengths=_string_list(data, "strengths", minimum=1, maximum=2),
            improvements=tuple(improvements),
            encouragement=encouragement,
            strength_phrases=_phrase_list(data, "strength_phrases"),
            improvement_phrases=_phrase_list(data, "improvement_phrases"),
        )
    except DomainValidationError as exc:
        raise StructureInvalid(str(exc)) from None


def _filter_phrases(
    phrases: tuple[str, ...], transcript: str
) -> tuple[tuple[str, ...], tuple[tuple[int, int], ...]]:
    """Keep phrases that anchor in the transcript, with their spans."""
    kept: list[str] = []
    spans: list[tuple[int, int]] = []
    for phrase in phrases:
        span = normalize_phrase_match(phrase, transcript)
        if span is not None:
            kept.append(phrase)
            spans.append(span)
    return tuple(kept), tuple(spans)


def _with_phrases(
    fb: TurnFeedback,
    strengths: tuple[str, ...],
    strength_spans: tuple[tuple[int, int], ...],
    improvements: tuple[str, ...],
    improvement_spans: tuple[tuple[int, int], ...],
) -> TurnFeedback:
    return TurnFeedback(
        turn_index=fb.turn_index,
        stages=fb.stages,
        overall_score=fb.overall_score,
        criterion_scores=fb.criterion_scores,
        strengths=fb.strengths,
        improvements=fb.improvements,
        encouragement=fb.encouragement,
        strength_phrases=strengths,
        improvement_phrases=improvements,
        strength_spans=strength_spans,
        improvement_spans=improvement_spans,
    )


def build_turn_feedback_prompt(
    case: CaseScenario,
    history: tuple[Turn, ...] | list[Turn],
    latest_physician: Turn,
    stages: StageLabelSet,
    templates: PromptTemplates,
) -> str:
    framework = combine_frameworks(stages_to_areas(stages), templates)
    user = templates.turn_level_user.format(
        conversation_stage=stages.render(),
        combined_framework=framework,
        medical_situation=case.medical_situation,
        medical_error=case.medical_error,
        history_text=render_history(history),
        latest_physician_message=latest_physician.transcript,
    )
    return f"{templates.turn_level.rstrip()}\n\n{user.rstrip()}"


def generate_turn_feedback(
    state: EvaluatorState,
    case: CaseScenario,
    history: tuple[Turn, ...] | list[Turn],
    latest_physician: Turn,
    stages: StageLabelSet,
    gateway: Gateway,
    templates: PromptTemplates,
) -> tuple[TurnFeedback, EvaluatorState]:
    """Generate validated feedback for the most recent physician turn.

    Raises StructureInvalid after one failed repair re-prompt; the
    caller then stores the turn with feedback marked unavailable.
    """
    if latest_physician.speaker != "clinician":
        raise DomainValidationError("turn feedback evaluates clinician turns")
    prompt = build_turn_feedback_prompt(case, history, latest_physician, stages, templates)
    raw = gateway.chat(prompt)
    try:
        fb = parse_turn_feedback(raw, stages, latest_physician.index)
    except StructureInvalid as first_error:
        repair = (
            f"{prompt}\n\n"
            f"Your previous answer was invalid: {first_error}. "
            "Respond again as a single JSON object with fields criterion_scores, "
            "strengths, improvements, encouragement, strength_phrases, improvement_phrases."
        )
        fb = parse_turn_feedback(gateway.chat(repair), stages, latest_physician.index)

    strength_phrases, strength_spans = _filter_phrases(
        fb.strength_phrases, latest_physician.transcript
    )
    improvement_phrases, improvement_spans = _filter_phrases(
        fb.improvement_phrases, latest_physician.transcript
    )
    overlap = set(strength_phrases) & set(improvement_phrases)
    if overlap:
        logger.info("turn %d: overlapping feedback phrases %s", fb.turn_index, sorted(overlap))
    fb = _with_phrases(
        fb, strength_phrases, strength_spans, improvement_phrases, improvement_spans
    )
    new_state = state.with_stages(stages).with_scores(fb.turn_index, fb.criterion_scores)
    return fb, new_state


# --- end-of-session report ----------------------------------------------------

_AREA_JSON_KEYS = {
    "IS": Area.ACKNOWLEDGMENT_EXPLANATION,
    "EE": Area.EMOTIONAL_SUPPORT,
    "TA": Area.TRUST_ACCOUNTABILITY,
    "R": Area.RESOLUTION,
}

NOT_ADDRESSED = "Not addressed in this conversation."


def _parse_overall_narrative(raw: str) -> dict[str, Any]:
    data = parse_provider_json(raw)
    if not isinstance(data, dict):
        raise StructureInvalid("overall feedback must be a JSON object")
    areas = _require(data, "areas", dict)
    parsed_areas: dict[Area, dict[str, Any]] = {}
    for key, area in _AREA_JSON_KEYS.items():
        if key not in areas or not isinstance(areas[key], dict):
            raise StructureInvalid(f"missing area section: {key}")
        section = areas[key]
        parsed_areas[area] = {
            "assessment": str(_require(section, "assessment", str)),
            "strengths": tuple(_require(section, "strengths", list)),
            "improvements": tuple(_require(section, "improvements", list)),
            "examples": tuple(section.get("examples", [])),
        }
        for field_name in ("strengths", "improvements", "examples"):
            if not all(isinstance(v, str) for v in parsed_areas[area][field_name]):
                raise StructureInvalid(f"area {key} field {field_name} must be strings")
    return {
        "areas": parsed_areas,
        "overall": str(_require(data, "overall", str)),
        "key_strengths": _string_list(data, "key_strengths", minimum=0, maximum=100),
        "key_improvements": _string_list(data, "key_improvements", minimum=0, maximum=100),
    }


def _machine_area_bullets(state: EvaluatorState, area: Area) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Strength and improvement bullets from criterion means alone."""
    by_criterion: dict[str, list[int]] = {}
    for scored in state.per_area_running.get(area, ()):
        for cid, score in scored.scores.items():
            by_criterion.setdefault(cid, []).append(score)
    strengths: list[str] = []
    improvements: list[str] = []
    for crit in AREA_CRITERIA[area]:
        if crit.id not in by_criterion:
            continue
        values = by_criterion[crit.id]
        mean = Fraction(sum(values), len(values))
        line = f"{CRITERION_TEXT[crit.id]} (mean {render_score(mean)}/5)"
        if mean >= 4:
            strengths.append(line)
        elif mean <= 2:
            improvements.append(line)
    return tuple(strengths), tuple(improvements)


def machine_overall_feedback(state: EvaluatorState) -> OverallFeedback:
    """Report derived from running scores alone, with no narrative."""
    per_area: dict[Area, AreaReport] = {}
    addressed_means: list[Fraction] = []
    key_strengths: list[str] = []
    key_improvements: list[str] = []
    for area in SUBSTANTIVE_AREAS:
        mean = state.area_mean(area)
        if mean is None:
            per_area[area] = AreaReport(
                addressed=False, score=None, assessment=NOT_ADDRESSED,
                strengths=(), improvements=(), examples=(),
            )
            continue
        addressed_means.append(mean)
        strengths, improvements = _machine_area_bullets(state, area)
        key_strengths.extend(strengths)
        key_improvements.extend(improvements)
        n = len(state.area_scores(area))
        per_area[area] = AreaReport(
            addressed=True,
            score=mean,
            assessment=f"Mean score {render_score(mean)} out of 5 across {n} criterion ratings.",
            strengths=strengths,
            improvements=improvements,
            examples=(),
        )
    overall_score = (
        sum(addressed_means, Fraction(0)) / len(addressed_means) if addressed_means else None
    )
    return OverallFeedback(
        per_area=per_area,
        overall_text=(
            "Automated summary: narrative feedback was unavailable; "
            "scores are computed from recorded criterion ratings."
        ),
        overall_score=overall_score,
        key_strengths=tuple(key_strengths),
        key_improvements=tuple(key_improvements),
    )


def build_overall_prompt(
    case: CaseScenario, history: tuple[Turn, ...] | list[Turn], templates: PromptTemplates
) -> str:
    user = templates.overall_user.format(
        medical_situation=case.medical_situation,
        medical_error=case.medical_error,
        history_text=render_history(history),
    )
    return f"{templates.overall.rstrip()}\n\n{user.rstrip()}"


def generate_overall_feedback(
    state: EvaluatorState,
    case: CaseScenario,
    history: tuple[Turn, ...] | list[Turn],
    gateway: Gateway,
    templates: PromptTemplates,
) -> OverallFeedback:
    """Produce the four-area end-of-session report.

    Narrative comes from the provider; exact machine means from the
    running scores are attached per area. If the provider output stays
    malformed after one repair, the machine-only report is returned.
    """
    if not history:
        raise DomainValidationError("cannot generate overall feedback for an empty session")
    prompt = build_overall_prompt(case, history, templates)
    raw = gateway.chat(prompt)
    try:
        narrative = _parse_overall_narrative(raw)
    except StructureInvalid as first_error:
        repair = (
            f"{prompt}\n\n"
            f"Your previous answer was invalid: {first_error}. "
            "Respond again as a single JSON object with fields areas (IS, EE, TA, R, "
            "each with assessment, strengths, improvements, examples), overall, "
            "key_strengths, key_improvements."
        )
        try:
            narrative = _parse_overall_narrative(gateway.chat(repair))
        except StructureInvalid:
            return machine_overall_feedback(state)

    per_area: dict[Area, AreaReport] = {}
    addressed_means: list[Fraction] = []
    for area in SUBSTANTIVE_AREAS:
        mean = state.area_mean(area)
        if mean is None:
            per_area[area] = AreaReport(
                addressed=False, score=None, assessment=NOT_ADDRESSED,
                strengths=(), improvements=(), examples=(),
            )
            continue
        addressed_means.append(mean)
        section = narrative["areas"][area]
        per_area[area] = AreaReport(
            addressed=True,
            score=mean,
            assessment=section["assessment"],
            strengths=section["strengths"],
            improvements=section["improvements"],
            examples=section["examples"],
        )
    overall_score = (
        sum(addressed_means, Fraction(0)) / len(addressed_means) if addressed_means else None
    )
    return OverallFeedback(
        per_area=per_area,
        overall_text=narrative["overall"],
        overall_score=overall_score,
        key_strengths=narrative["key_strengths"],
        key_improvements=narrative["key_improvements"],
    )


def score_schema_export(state: EvaluatorState) -> dict[str, Any]:
    """Flat, analysis-ready record of every criterion rating.

    The numbers are anchor points for reflection, not absolute
    judgments, and are meant to sit alongside qualitative review.
    """
    rows: list[dict[str, Any]] = []
    aggregates: list[dict[str, Any]] = []
    for area in Area:
        scored_turns = state.per_area_running.get(area, ())
        for scored in scored_turns:
            for cid, score in sorted(scored.scores.items()):
                rows.append(
                    {
                        "turn_index": scored.turn_index,
                        "area": area.value,
                        "criterion_id": cid,
                        "criterion_text": CRITERION_TEXT[cid],
                        "score": score,
                    }
                )
        mean = state.area_mean(area)
        if mean is not None:
            aggregates.append(
                {
                    "area": area.value,
                    "mean": str(mean),
                    "mean_display": render_score(mean),
                    "score_count": len(state.area_scores(area)),
                    "turn_count": len(scored_turns),
                }
            )
    rows.sort(key=lambda r: (r["turn_index"], r["criterion_id"]))
    return {
        "rows": rows,
        "area_aggregates": aggregates,
        "note": (
            "Criterion scores are anchor points to guide reflection, "
            "not absolute judgments of communication quality."
        ),
    }
