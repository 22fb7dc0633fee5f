"""Independent oracle implementations used to freeze expected values.

Everything here is deliberately written from the rules themselves,
without importing the production code paths it checks.
"""

from __future__ import annotations

from fractions import Fraction

STAGE_CODES = ("IS", "EE", "TA", "R", "START", "END")


def stage_subset_is_legal(codes: frozenset[str], first: bool) -> bool:
    """Rule-by-rule check of a candidate stage set at a message position."""
    if not codes or len(codes) > 2:
        return False
    if "START" in codes:
        return codes == frozenset({"START"}) and first
    if "END" in codes:
        return codes == frozenset({"END"})
    return True


def enumerate_stage_cases() -> list[tuple[frozenset[str], bool]]:
    """All 63 nonempty subsets of the six codes, at first and non-first."""
    import itertools

    cases = []
    for r in range(1, len(STAGE_CODES) + 1):
        for combo in itertools.combinations(STAGE_CODES, r):
            for first in (True, False):
                cases.append((frozenset(combo), first))
    return cases


_DIRECTION_SIGNS = {"positive": 1, "mixed": 0, "negative": -1}


def affect_step_oracle(
    values: dict[str, Fraction], direction: str, eta: Fraction
) -> dict[str, Fraction]:
    """Step-function update: trust moves with the direction, distress against it."""
    s = _DIRECTION_SIGNS[direction]
    out: dict[str, Fraction] = {}
    for dim, value in values.items():
        moved = value + eta * s if dim == "trust" else value - eta * s
        out[dim] = max(Fraction(0), min(Fraction(1), moved))
    return out


def mean_oracle(scores: list[int]) -> Fraction:
    """Mean as a sum of equal weights, kept exact."""
    assert scores
    weight = Fraction(1, len(scores))
    total = Fraction(0)
    for s in scores:
        total += Fraction(s) * weight
    return total


def normalize_tokens(text: str) -> list[str]:
    """Lowercase, drop apostrophes, treat other punctuation as separators."""
    lowered = text.lower().replace("'", "")
    cleaned = "".join(ch if ch.isalnum() else " " for ch in lowered)
    return cleaned.split()


def normalized_contains(phrase: str, transcript: str) -> bool:
    """Contiguous token-run containment under shared normalization."""
    p = normalize_tokens(phrase)
    t = normalize_tokens(transcript)
    if not p:
        return False
    return any(t[i:i + len(p)] == p for i in range(len(t) - len(p) + 1))


def content_word_set(text: str, stopwords: frozenset[str]) -> set[str]:
    return {w for w in normalize_tokens(text) if len(w) >= 3 and w not in stopwords}
