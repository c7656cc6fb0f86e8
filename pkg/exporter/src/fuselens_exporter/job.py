"""Export job documents.

A job names the dataset folder, the base/novel class split, the prompt
template, the backbone, and the output directory. The template must
contain exactly one ``{}`` placeholder for the class name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import JobError

DEFAULT_TEMPLATE = "a photo of a {}"


@dataclass(frozen=True)
class ExportJob:
    dataset: Path
    base_classes: tuple[str, ...]
    novel_classes: tuple[str, ...]
    output_dir: Path
    template: str = DEFAULT_TEMPLATE
    backbone: str = "toy-64"

    def __post_init__(self) -> None:
        object.__setattr__(self, "dataset", Path(self.dataset))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        object.__setattr__(self, "base_classes", tuple(self.base_classes))
        object.__setattr__(self, "novel_classes", tuple(self.novel_classes))
        if not self.base_classes or not self.novel_classes:
            raise JobError("both base_classes and novel_classes must be non-empty")
        overlap = set(self.base_classes) & set(self.novel_classes)
        if overlap:
            raise JobError(f"base and novel classes overlap: {sorted(overlap)}")
        for names in (self.base_classes, self.novel_classes):
            if len(set(names)) != len(names):
                raise JobError("class lists contain duplicates")
        if self.template.count("{}") != 1:
            raise JobError(
                "template must contain exactly one {} placeholder, got "
                f"{self.template!r}"
            )

    def prompt(self, class_name: str) -> str:
        return self.template.format(class_name.replace("_", " "))


def read_job(path: str | Path) -> ExportJob:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise JobError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise JobError(f"{path}: job document must be a JSON object")
    known = {"dataset", "base_classes", "novel_classes", "output_dir",
             "template", "backbone"}
    unknown = set(doc) - known
    if unknown:
        raise JobError(f"{path}: unknown job fields {sorted(unknown)}")
    missing = {"dataset", "base_classes", "novel_classes", "output_dir"} - set(doc)
    if missing:
        raise JobError(f"{path}: missing job fields {sorted(missing)}")
    try:
        return ExportJob(**doc)
    except TypeError as exc:
        raise JobError(f"{path}: {exc}") from exc
