"""Pipeline configuration: a flat JSON key-value file, every key
overridable from the command line."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .eventuality import TEMPORAL_RELATIONS
from .retrieval import DEFAULT_FREQ_WEIGHT, DEFAULT_K, DEFAULT_VERB_BOOST


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    lexicon_dir: str = ""
    ontology_path: str = ""
    ontology_flavor: str = "audioset_json"
    events_path: str = ""
    edges_path: str = ""
    annotations_path: str = ""
    excluded_labels_path: str = ""
    out_dir: str = "out"
    selection_mode: str = "manual"  # manual | auto
    k: int = DEFAULT_K
    verb_boost: float = DEFAULT_VERB_BOOST
    freq_weight: float = DEFAULT_FREQ_WEIGHT
    kept_relations: list[str] = field(default_factory=lambda: list(TEMPORAL_RELATIONS))
    symmetrize_precedence: bool = False
    min_frequency: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.selection_mode not in ("manual", "auto"):
            raise ConfigError(f"selection_mode must be manual or auto, got {self.selection_mode!r}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")

    def validate_paths(self) -> None:
        required = {
            "lexicon_dir": self.lexicon_dir,
            "ontology_path": self.ontology_path,
            "events_path": self.events_path,
            "edges_path": self.edges_path,
        }
        for key, value in required.items():
            if not value:
                raise ConfigError(f"config key {key!r} is required")
            if not Path(value).exists():
                raise ConfigError(f"config key {key!r}: path {value!r} does not exist")

    @staticmethod
    def load(path: str | Path) -> "PipelineConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
        known = {f for f in PipelineConfig.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
        return PipelineConfig(**obj)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
