"""Access to the bundled app corpus."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

from ..catgen import EventDescriptor, load_guidance
from ..impact import ChangeSet, TargetSet, load_change_set
from ..model import AppModel, load_app_model

CHANGE_TYPES = ("function", "new_element", "modified_activity")
ENV_VAR = "CHANGEHOUND_CORPUS"


def corpus_dir() -> Path:
    override = os.environ.get(ENV_VAR)
    if override:
        return Path(override)
    return Path(__file__).resolve().parent


@dataclass
class CorpusEntry:
    name: str
    root: Path
    model_file: str
    changes_file: str
    expected_targets_file: str
    change_type: str
    faults: dict[str, str] = field(default_factory=dict)
    guidance_file: Optional[str] = None

    @property
    def model_path(self) -> Path:
        return self.root / self.model_file

    @property
    def changes_path(self) -> Path:
        return self.root / self.changes_file

    @property
    def guidance_path(self) -> Optional[Path]:
        return self.root / self.guidance_file if self.guidance_file else None

    @cached_property
    def model(self) -> AppModel:
        return load_app_model(self.model_path)

    @cached_property
    def changes(self) -> ChangeSet:
        return load_change_set(self.changes_path)

    def expected_targets(self) -> TargetSet:
        data = json.loads((self.root / self.expected_targets_file).read_text(encoding="utf-8"))
        return TargetSet.from_dict(data)

    def guidance(self) -> list[EventDescriptor]:
        path = self.guidance_path
        return load_guidance(path) if path else []


def load_manifest(root: Optional[Path] = None) -> dict:
    root = Path(root) if root else corpus_dir()
    return json.loads((root / "manifest.json").read_text(encoding="utf-8"))


def entries(root: Optional[Path] = None) -> list[CorpusEntry]:
    root = Path(root) if root else corpus_dir()
    out = []
    for rec in load_manifest(root)["entries"]:
        if rec["change_type"] not in CHANGE_TYPES:
            raise ValueError(f"{rec['name']}: unknown change type {rec['change_type']}")
        out.append(CorpusEntry(
            name=rec["name"],
            root=root,
            model_file=rec["model"],
            changes_file=rec["changes"],
            expected_targets_file=rec["expected_targets"],
            change_type=rec["change_type"],
            faults=dict(rec.get("faults", {})),
            guidance_file=rec.get("guidance"),
        ))
    return out


def entry(name: str, root: Optional[Path] = None) -> CorpusEntry:
    for e in entries(root):
        if e.name == name:
            return e
    raise KeyError(f"no corpus app named {name!r}")


def fixture_path(name: str, root: Optional[Path] = None) -> Path:
    root = Path(root) if root else corpus_dir()
    return root / load_manifest(root)["fixtures"][name]


def resolve_app(ref: str) -> Path:
    """Accept either a path to an ``.app.json`` file or a corpus app name."""
    path = Path(ref)
    if path.suffix == ".json" or path.exists():
        return path
    return entry(ref).model_path
