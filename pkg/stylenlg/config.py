"""
Run configuration: a JSON file of nested sections, overridden by command-line flags.

    {
      "seed": 7,
      "paths": {"train": "personage-train.jsonl", "data_dir": "data"},
      "model": {"method": "m3", "granularity": "fine", "rnn_size": 300},
      "training": {"max_epochs": 30},
      "metrics": {"smooth_bleu": false},
      "grid": {"workers": 4}
    }

Every section and key is optional. Flags win over the file.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Type, TypeVar

from .errors import ConfigError, MissingPath
from .metrics.contrast import DEFAULT_CUES
from .seq2seq.model import ModelConfig
from .seq2seq.training import GRID_LAYERS, GRID_SIZES, TrainingConfig
from .textpipe import DEFAULT_DELEX_SLOTS, placeholder
from .utils import canonical_json, fingerprint

T = TypeVar("T")


@dataclass(frozen=True)
class Paths:
    # raw datasets, local paths or http(s) URLs
    train: Optional[str] = None
    dev: Optional[str] = None
    test: Optional[str] = None
    data_dir: str = "data"
    run_root: str = "runs"

    def require(self, name: str) -> str:
        """The raw dataset `name`; it must be configured and, unless remote, exist."""
        value = getattr(self, name)
        if not value:
            raise MissingPath(f"no {name} dataset configured (paths.{name})")
        if not value.startswith(("http://", "https://")) and not Path(value).is_file():
            raise MissingPath(f"paths.{name} '{value}' does not exist")
        return str(value)


@dataclass(frozen=True)
class MetricOptions:
    smooth_bleu: bool = False
    contrast_cues: Tuple[str, ...] = tuple(sorted(DEFAULT_CUES))
    # replacements for the shipped data files
    slot_lexicon: Optional[str] = None
    polarity_table: Optional[str] = None
    marker_lexicon: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "contrast_cues", tuple(self.contrast_cues))
        if not self.contrast_cues:
            raise ConfigError("metrics.contrast_cues cannot be empty")
        for name in ("slot_lexicon", "polarity_table", "marker_lexicon"):
            value = getattr(self, name)
            if value is not None and not Path(value).is_file():
                raise MissingPath(f"metrics.{name} '{value}' does not exist")


@dataclass(frozen=True)
class GridSpec:
    layers: Tuple[int, ...] = GRID_LAYERS
    sizes: Tuple[int, ...] = GRID_SIZES
    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "sizes", tuple(self.sizes))
        if not self.layers or any(n not in (1, 2) for n in self.layers):
            raise ConfigError("grid.layers must be a non-empty subset of {1, 2}")
        if not self.sizes or any(s < 1 for s in self.sizes):
            raise ConfigError("grid.sizes must be positive")
        if self.workers < 1:
            raise ConfigError("grid.workers must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    paths: Paths = field(default_factory=Paths)
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    metrics: MetricOptions = field(default_factory=MetricOptions)
    grid: GridSpec = field(default_factory=GridSpec)
    seed: int = 0
    delex_slots: Tuple[str, ...] = tuple(sorted(DEFAULT_DELEX_SLOTS))
    min_count: int = 1
    dev_fraction: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "delex_slots", tuple(sorted(set(self.delex_slots))))
        if any(not s.strip() for s in self.delex_slots):
            raise ConfigError("delex_slots cannot contain blank slot types")
        by_placeholder: Dict[str, str] = {}
        for slot in self.delex_slots:
            other = by_placeholder.setdefault(placeholder(slot), slot)
            if other != slot:
                raise ConfigError(
                    f"delex_slots {other!r} and {slot!r} share the placeholder"
                    f" {placeholder(slot)}"
                )
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.min_count < 1:
            raise ConfigError("min_count must be >= 1")
        if not 0.0 <= self.dev_fraction < 1.0:
            raise ConfigError("dev_fraction must be in [0, 1)")

    def as_dict(self) -> Dict[str, Any]:
        return _plain(asdict(self))

    def fingerprint(self) -> str:
        return fingerprint(canonical_json(self.as_dict()))

    def data_fingerprint(self) -> str:
        """Covers only what ingestion depends on, so one dataset serves many runs."""
        return fingerprint(
            canonical_json(
                {
                    "train": self.paths.train,
                    "dev": self.paths.dev,
                    "test": self.paths.test,
                    "seed": self.seed,
                    "delex_slots": list(self.delex_slots),
                    "min_count": self.min_count,
                    "dev_fraction": self.dev_fraction,
                }
            )
        )

    def with_overrides(self, **flags: Any) -> "RunConfig":
        """Applies every flag that is not None to the section that owns it."""
        sections: Dict[str, Dict[str, Any]] = {}
        top: Dict[str, Any] = {}
        for name, value in flags.items():
            if value is None:
                continue
            owner = _OWNER.get(name)
            if owner is None:
                raise ConfigError(f"unknown setting {name!r}")
            if owner == "":
                top[name] = value
            else:
                sections.setdefault(owner, {})[name] = value

        updated = {
            section: replace(getattr(self, section), **values)
            for section, values in sections.items()
        }
        return replace(self, **updated, **top)

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "RunConfig":
        sections = {f.name: f.type for f in fields(cls)}
        kwargs: Dict[str, Any] = {}
        for key, value in obj.items():
            if key not in sections:
                raise ConfigError(f"unknown configuration key {key!r}")
            section = _SECTIONS.get(key)
            if section is not None:
                if not isinstance(value, Mapping):
                    raise ConfigError(f"section {key!r} must be an object")
                kwargs[key] = _build(section, value, key)
            else:
                kwargs[key] = value
        try:
            return cls(**kwargs)
        except TypeError as err:
            raise ConfigError(str(err)) from err

    @classmethod
    def load(cls, path: Optional[Path] = None, **flags: Any) -> "RunConfig":
        config = cls()
        if path is not None:
            if not Path(path).is_file():
                raise MissingPath(f"configuration file '{path}' does not exist")
            try:
                obj = json.loads(Path(path).read_text(encoding="utf-8"))
            except json.JSONDecodeError as err:
                raise ConfigError(f"{path}: invalid JSON ({err.msg})") from err
            if not isinstance(obj, Mapping):
                raise ConfigError(f"{path}: expected a JSON object")
            config = cls.from_dict(obj)
        return config.with_overrides(**flags)

    def dump(self, path: Path) -> None:
        Path(path).write_text(
            json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


_SECTIONS: Dict[str, Type[Any]] = {
    "paths": Paths,
    "model": ModelConfig,
    "training": TrainingConfig,
    "metrics": MetricOptions,
    "grid": GridSpec,
}

# which section owns a flag; "" is the top level
_OWNER: Dict[str, str] = {
    f.name: section for section, cls in _SECTIONS.items() for f in fields(cls)
}
_OWNER.update({f.name: "" for f in fields(RunConfig) if f.name not in _SECTIONS})


def _build(cls: Type[T], values: Mapping[str, Any], section: str) -> T:
    known = {f.name for f in fields(cls)}  # type: ignore[arg-type]
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(sorted(unknown))}")
    try:
        return cls(**values)
    except TypeError as err:
        raise ConfigError(f"{section}: {err}") from err


def _plain(obj: Any) -> Any:
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


__all__ = ["GridSpec", "MetricOptions", "Paths", "RunConfig"]
