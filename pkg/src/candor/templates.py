"""Loading and rendering of the versioned prompt template file."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .errors import CandorError


class TemplateError(CandorError):
    pass


@dataclass(frozen=True)
class PromptTemplates:
    """The template set shipped with the repo, identified by template_id."""

    template_id: str
    profile: str
    conv_stage: str
    frameworks: dict[str, str]  # keyed by stage code
    turn_level: str
    turn_level_user: str
    overall: str
    overall_user: str
    patient_response: str
    patient_history: str
    content_hash: str

    def framework_block(self, stage_code: str) -> str:
        try:
            return self.frameworks[stage_code]
        except KeyError:
            raise TemplateError(f"no framework for stage {stage_code!r}") from None


_REQUIRED_FRAMEWORKS = ("IS", "EE", "TA", "R", "START", "END")


def parse_templates(raw_text: str) -> PromptTemplates:
    data = yaml.safe_load(raw_text)
    if not isinstance(data, dict):
        raise TemplateError("template file must be a mapping")
    try:
        feedback = data["feedback"]
        patient = data["patient"]
        frameworks = {k: str(v) for k, v in feedback["frameworks"].items()}
        templates = PromptTemplates(
            template_id=str(data["template_id"]),
            profile=str(data["profile"]),
            conv_stage=str(data["conv_stage"]),
            frameworks=frameworks,
            turn_level=str(feedback["turn_level"]),
            turn_level_user=str(feedback["turn_level_user"]),
            overall=str(feedback["overall"]),
            overall_user=str(feedback["overall_user"]),
            patient_response=str(patient["response"]),
            patient_history=str(patient["history"]),
            content_hash=hashlib.sha256(raw_text.encode("utf-8")).hexdigest(),
        )
    except KeyError as exc:
        raise TemplateError(f"template file is missing section: {exc}") from None
    missing = [code for code in _REQUIRED_FRAMEWORKS if code not in templates.frameworks]
    if missing:
        raise TemplateError(f"template file is missing frameworks: {missing}")
    return templates


def load_templates(path: str | Path | None = None) -> PromptTemplates:
    """Load templates from a file, defaulting to the copy shipped in-package."""
    if path is None:
        raw = resources.files("candor.data").joinpath("templates.yaml").read_text("utf-8")
    else:
        raw = Path(path).read_text("utf-8")
    return parse_templates(raw)


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Stopword list, one word per line; hash is recorded in session logs."""
    if path is None:
        raw = resources.files("candor.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        raw = Path(path).read_text("utf-8")
    return frozenset(w.strip().lower() for w in raw.splitlines() if w.strip())


def stopwords_hash(words: frozenset[str]) -> str:
    joined = "\n".join(sorted(words))
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()
