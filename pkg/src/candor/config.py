"""Application configuration loaded from a YAML file."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import yaml

from .errors import CandorError
from .providers import ProviderConfig

DEFAULT_MAX_UPLOAD_BYTES = 10 * 1024 * 1024


@dataclass(frozen=True)
class AppConfig:
    data_dir: str = "./data"
    case_dir: str | None = None
    window: int = 12
    eta: Fraction = Fraction(1, 5)
    turn_budget: int = 5
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES
    max_sessions: int | None = None
    api_token: str | None = None
    host: str = "127.0.0.1"
    port: int = 8420
    provider: ProviderConfig = field(default_factory=lambda: ProviderConfig(
        kind="scripted", fixture_path="fixtures/session.json"
    ))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> AppConfig:
        if not isinstance(data, dict):
            raise CandorError("config must be a mapping")
        provider = data.get("provider") or data.get("providers")
        return cls(
            data_dir=str(data.get("data_dir", "./data")),
            case_dir=data.get("case_dir"),
            window=int(data.get("window", 12)),
            eta=Fraction(str(data.get("eta", "1/5"))),
            turn_budget=int(data.get("turn_budget", 5)),
            max_upload_bytes=int(data.get("max_upload_bytes", DEFAULT_MAX_UPLOAD_BYTES)),
            max_sessions=(
                int(data["max_sessions"]) if data.get("max_sessions") is not None else None
            ),
            api_token=data.get("api_token"),
            host=str(data.get("host", "127.0.0.1")),
            port=int(data.get("port", 8420)),
            provider=ProviderConfig.from_dict(provider) if provider else ProviderConfig(
                kind="scripted", fixture_path="fixtures/session.json"
            ),
        )


def load_config(path: str | Path) -> AppConfig:
    raw = yaml.safe_load(Path(path).read_text("utf-8"))
    return AppConfig.from_dict(raw or {})
