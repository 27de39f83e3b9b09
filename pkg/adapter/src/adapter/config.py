"""Adapter configuration: which backend implements each model slot.

Backend ids are strings. Built-in ids name self-contained classical
implementations; the form "boxes:FILE" points a slot at a precomputed-boxes
JSON file, resolved relative to the config file that mentions it. Every
referenced artifact is checked before any image is processed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    """The config file is malformed or names an unknown option."""


@dataclass(frozen=True)
class AdapterConfig:
    detector: str = "contour-m"
    human_detector: str = "silhouette"
    pose_top_down: str = "geometric"
    pose_bottom_up: str = "geometric"
    deblur_model: str = "unsharp"
    deblur_backbone: str = "gaussian9"
    pose_person_threshold: int = 3
    device: str = "cpu"

    def __post_init__(self) -> None:
        if self.device != "cpu":
            raise ConfigError(f"only the cpu device is supported, got {self.device!r}")
        if not isinstance(self.pose_person_threshold, int):
            raise ConfigError(
                f"pose_person_threshold must be an integer, got {self.pose_person_threshold!r}"
            )


def _resolve_artifact_refs(doc: dict, base: Path) -> dict:
    # boxes:FILE paths are written relative to the config file
    out = {}
    for key, value in doc.items():
        if isinstance(value, str) and value.startswith("boxes:"):
            ref = value[len("boxes:"):]
            value = "boxes:" + str((base / ref).resolve())
        out[key] = value
    return out


def load_config(path: str | None) -> AdapterConfig:
    """Config from a JSON file, or the defaults when no file is given."""
    if path is None:
        return AdapterConfig()
    file_path = Path(path)
    try:
        doc = json.loads(file_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    known = {f.name for f in fields(AdapterConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"{path}: unknown config keys: {sorted(unknown)}")
    doc = _resolve_artifact_refs(doc, file_path.resolve().parent)
    try:
        return AdapterConfig(**doc)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
