"""Printable renderings of feedback records for the CLI and UI."""

from __future__ import annotations

from .domain import (
    SUBSTANTIVE_AREAS,
    Area,
    OverallFeedback,
    TurnFeedback,
    render_score,
)

AREA_TITLES = {
    Area.ACKNOWLEDGMENT_EXPLANATION: "Acknowledgment & Explanation",
    Area.EMOTIONAL_SUPPORT: "Emotional Support",
    Area.TRUST_ACCOUNTABILITY: "Trust & Accountability",
    Area.RESOLUTION: "Resolution",
    Area.OPENING: "Opening",
    Area.CLOSING: "Closing",
}


def render_turn_feedback_markdown(fb: TurnFeedback) -> str:
    lines = [
        f"## Turn {fb.turn_index} feedback",
        "",
        f"Stages: {fb.stages.render()}",
        f"Score: {render_score(fb.overall_score)} / 5",
        "",
        "### Strengths",
    ]
    lines += [f"- {s}" for s in fb.strengths]
    lines += ["", "### Opportunities for improvement"]
    for imp in fb.improvements:
        lines += [
            f"- **{imp.subtitle}**",
            f"  - {imp.description}",
            f"  - Suggestion: {imp.suggestion}",
            f"  - Example: {imp.example_phrasing}",
        ]
    lines += ["", f"> {fb.encouragement}"]
    if fb.strength_phrases:
        lines += ["", f"Highlighted strengths: {', '.join(fb.strength_phrases)}"]
    if fb.improvement_phrases:
        lines += [f"Highlighted improvements: {', '.join(fb.improvement_phrases)}"]
    return "\n".join(lines) + "\n"


def render_overall_markdown(overall: OverallFeedback) -> str:
    score = (
        f"{render_score(overall.overall_score)} / 5"
        if overall.overall_score is not None
        else "n/a"
    )
    lines = [
        "# Overall feedback report",
        "",
        f"Overall performance: {score}",
        "",
        overall.overall_text,
        "",
        "## Key strengths",
    ]
    lines += [f"- {s}" for s in overall.key_strengths] or ["- (none recorded)"]
    lines += ["", "## Key improvements"]
    lines += [f"- {s}" for s in overall.key_improvements] or ["- (none recorded)"]
    for area in SUBSTANTIVE_AREAS:
        report = overall.per_area[area]
        lines += ["", f"## {AREA_TITLES[area]}"]
        if not report.addressed:
            lines += ["Not addressed."]
            continue
        assert report.score is not None
        lines += [f"Score: {render_score(report.score)} / 5", "", report.assessment]
        if report.strengths:
            lines += ["", "Strengths:"] + [f"- {s}" for s in report.strengths]
        if report.improvements:
            lines += ["", "Improvements:"] + [f"- {s}" for s in report.improvements]
        if report.examples:
            lines += ["", "Examples:"] + [f"- {s}" for s in report.examples]
    return "\n".join(lines) + "\n"
