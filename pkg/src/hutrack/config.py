"""Flat ``section.key = value`` configuration files.

Blank lines are ignored and ``#`` starts a comment when it begins a line
or follows whitespace.  Keys are unique; later ``--set`` overrides replace
file values.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from typing import Iterable

from .errors import ParseError, ValidationError
from .moments import HU_TRANSFORMS
from .segmentation import SegmentationParams
from .tracker import TrackerParams


def parse_kv_lines(lines: Iterable[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = re.sub(r"(^|\s)#.*$", "", raw).strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError("empty key", lineno)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", lineno)
        out[key] = value
    return out


def read_kv_file(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kv_lines(fh)


def parse_override(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise ValidationError(f"override must look like section.key=value, got {text!r}")
    key, value = (s.strip() for s in text.split("=", 1))
    return key, value


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {text!r}")


def _coerce(text: str, kind):
    if kind is bool:
        return parse_bool(text)
    try:
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
    except ValueError as exc:
        raise ValidationError(f"expected {kind.__name__}, got {text!r}") from exc
    return text


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


@dataclass(frozen=True)
class MorphologyParams:
    erode_iterations: int = 1
    min_area: int = 150
    scale_min_area: bool = True

    def __post_init__(self):
        if self.erode_iterations < 1:
            raise ValidationError(f"erode_iterations must be >= 1, got {self.erode_iterations}")
        if self.min_area < 1:
            raise ValidationError(f"min_area must be >= 1, got {self.min_area}")


@dataclass(frozen=True)
class FeatureParams:
    hu_transform: str = "raw"

    def __post_init__(self):
        if self.hu_transform not in HU_TRANSFORMS:
            raise ValidationError(f"hu_transform must be one of {HU_TRANSFORMS}, got {self.hu_transform!r}")


@dataclass(frozen=True)
class EvalParams:
    iou_threshold: float = 0.5

    def __post_init__(self):
        if not 0 < self.iou_threshold <= 1:
            raise ValidationError(f"iou_threshold must be in (0, 1], got {self.iou_threshold}")


@dataclass(frozen=True)
class OutputParams:
    annotated: bool = True
    masks: bool = False
    features: bool = False
    associations: bool = False


@dataclass(frozen=True)
class PipelineConfig:
    segmentation: SegmentationParams = field(default_factory=SegmentationParams)
    morphology: MorphologyParams = field(default_factory=MorphologyParams)
    features: FeatureParams = field(default_factory=FeatureParams)
    tracker: TrackerParams = field(default_factory=TrackerParams)
    eval: EvalParams = field(default_factory=EvalParams)
    output: OutputParams = field(default_factory=OutputParams)

    @classmethod
    def from_mapping(cls, values: dict[str, str], base: "PipelineConfig | None" = None) -> "PipelineConfig":
        """Apply ``section.key -> text`` entries on top of ``base`` (or defaults)."""
        cfg = base or cls()
        grouped: dict[str, dict[str, str]] = {}
        for key, text in values.items():
            section, _, name = key.partition(".")
            grouped.setdefault(section, {})[name] = text
        sections = {f.name: getattr(cfg, f.name) for f in dataclasses.fields(cfg)}
        for section, entries in grouped.items():
            if section not in sections:
                raise ValidationError(f"unknown config section {section!r}")
            current = sections[section]
            types = {f.name: type(getattr(current, f.name)) for f in dataclasses.fields(current)}
            changes = {}
            for name, text in entries.items():
                if name not in types:
                    raise ValidationError(f"unknown config key {section}.{name}")
                changes[name] = _coerce(text, types[name])
            sections[section] = dataclasses.replace(current, **changes)
        return cls(**sections)

    def to_mapping(self) -> dict[str, str]:
        out = {}
        for f in dataclasses.fields(self):
            section = getattr(self, f.name)
            for sf in dataclasses.fields(section):
                out[f"{f.name}.{sf.name}"] = _format(getattr(section, sf.name))
        return out

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_mapping().items())


def load_config(path=None, overrides: Iterable[str] = ()) -> PipelineConfig:
    values = read_kv_file(path) if path else {}
    cfg = PipelineConfig.from_mapping(values)
    extra = dict(parse_override(o) for o in overrides)
    if extra:
        cfg = PipelineConfig.from_mapping(extra, base=cfg)
    return cfg
