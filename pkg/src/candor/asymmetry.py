"""Knowledge partition and feedback digest filtering.

The physician-only vocabulary is the word-level difference between the
error description and everything the patient can see; words the
clinician speaks aloud migrate to the patient side, so disclosure is
monotone. Digest keywords are drawn from feedback text and mechanically
scrubbed against the physician-only set. Suggested example phrasings
are excluded from digests since they may embed undisclosed facts.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .domain import CaseScenario, EvaluatorDigest, TurnFeedback
from .errors import DomainValidationError
from .textnorm import normalize_words

MIN_CONTENT_WORD_LEN = 3
MAX_DIGEST_KEYWORDS = 12

POSITIVE_THRESHOLD = Fraction(4)
NEGATIVE_THRESHOLD = Fraction(2)


def content_words(text: str, stopwords: frozenset[str]) -> list[str]:
    """Normalized tokens of length >= 3 that are not stopwords, in order."""
    return [
        w
        for w in normalize_words(text)
        if len(w) >= MIN_CONTENT_WORD_LEN and w not in stopwords
    ]


@dataclass(frozen=True)
class KnowledgePartition:
    """Disjoint patient-visible and physician-only word sets."""

    patient_words: frozenset[str]
    physician_only_words: frozenset[str]

    def __post_init__(self) -> None:
        if self.patient_words & self.physician_only_words:
            raise DomainValidationError("knowledge partition sets must be disjoint")

    @classmethod
    def from_case(cls, case: CaseScenario, stopwords: frozenset[str]) -> KnowledgePartition:
        """Initial partition: everything the patient prompt can see counts as known."""
        visible = (
            content_words(case.patient_knowledge, stopwords)
            + content_words(case.medical_situation, stopwords)
            + content_words(case.patient_profile, stopwords)
        )
        patient = frozenset(visible)
        physician_only = frozenset(content_words(case.medical_error, stopwords)) - patient
        return cls(patient_words=patient, physician_only_words=physician_only)


def update_partition(
    part: KnowledgePartition, spoken: str, stopwords: frozenset[str]
) -> KnowledgePartition:
    """Move every content word of a spoken transcript to the patient side."""
    words = frozenset(content_words(spoken, stopwords))
    if not words:
        return part
    return KnowledgePartition(
        patient_words=part.patient_words | words,
        physician_only_words=part.physician_only_words - words,
    )


def score_direction(overall_score: Fraction) -> str:
    if overall_score >= POSITIVE_THRESHOLD:
        return "positive"
    if overall_score <= NEGATIVE_THRESHOLD:
        return "negative"
    return "mixed"


def make_digest(
    fb: TurnFeedback, part: KnowledgePartition, stopwords: frozenset[str]
) -> EvaluatorDigest:
    """Reduce turn feedback to sanitized keywords plus a quality direction."""
    pool: list[str] = list(fb.strengths)
    for imp in fb.improvements:
        pool.extend((imp.subtitle, imp.description, imp.suggestion))
    keywords: list[str] = []
    for text in pool:
        for word in content_words(text, stopwords):
            if word in part.physician_only_words:
                continue
            if word not in keywords:
                keywords.append(word)
            if len(keywords) >= MAX_DIGEST_KEYWORDS:
                break
        if len(keywords) >= MAX_DIGEST_KEYWORDS:
            break
    return EvaluatorDigest(
        turn_index=fb.turn_index,
        keywords=tuple(keywords),
        direction=score_direction(fb.overall_score),
    )


def neutral_digest(turn_index: int) -> EvaluatorDigest:
    """Digest used when turn feedback is unavailable; steers nothing."""
    return EvaluatorDigest(turn_index=turn_index, keywords=(), direction="mixed")
