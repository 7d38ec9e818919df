"""Synthetic multi-label data with a planted hierarchy and temporal pairs.

Labels live in a branching-factor tree (activating a label activates its
ancestors). A planted pair (i, j, p) activates label j with probability p
whenever i fired, simulating short-horizon co-occurrence. Features are a
fixed random linear projection of the label vector plus Gaussian noise
scaled by 1/snr, so an infinite snr makes labels exactly linearly
decodable. The generator also emits the matching ground-truth ontology and
temporal KG so models can be trained against correct, perturbed, or empty
knowledge.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, save_dataset
from .kgbuild import TemporalKG, temporal_kg_to_jsonl
from .ontology import TagOntology, load_ontology, save_ontology, Tag
from .seeding import derive_rng


class SyntheticError(ValueError):
    pass


@dataclass
class SyntheticConfig:
    n_labels: int = 30
    branching: int = 3
    planted_pairs: list[tuple[int, int, float]] = field(default_factory=list)
    n_train: int = 5000
    n_eval: int = 500
    d_feat: int = 32
    snr: float = 4.0  # label signal-to-noise ratio; inf disables noise
    base_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_labels < 1 or self.branching < 1:
            raise SyntheticError("n_labels and branching must be positive")
        if not 0 <= self.base_rate <= 1:
            raise SyntheticError("base_rate must be a probability")
        for i, j, p in self.planted_pairs:
            if not (0 <= i < self.n_labels and 0 <= j < self.n_labels) or i == j:
                raise SyntheticError(f"planted pair ({i}, {j}) references invalid labels")
            if not 0 <= p <= 1:
                raise SyntheticError(f"planted pair ({i}, {j}): probability {p} out of range")

    @staticmethod
    def from_json(text: str) -> "SyntheticConfig":
        obj = json.loads(text)
        pairs = [tuple(p) for p in obj.pop("planted_pairs", [])]
        snr = obj.pop("snr", 4.0)
        if isinstance(snr, str):
            snr = math.inf if snr == "inf" else float(snr)
        return SyntheticConfig(planted_pairs=pairs, snr=snr, **obj)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_labels": self.n_labels,
                "branching": self.branching,
                "planted_pairs": [list(p) for p in self.planted_pairs],
                "n_train": self.n_train,
                "n_eval": self.n_eval,
                "d_feat": self.d_feat,
                "snr": "inf" if math.isinf(self.snr) else self.snr,
                "base_rate": self.base_rate,
                "seed": self.seed,
            },
            sort_keys=True,
        )


def label_name(i: int) -> str:
    return f"label_{i:03d}"


def parents_for(config: SyntheticConfig) -> list[int | None]:
    """Node i's parent in the branching tree (None for the root)."""
    return [None if i == 0 else (i - 1) // config.branching for i in range(config.n_labels)]


def true_ontology(config: SyntheticConfig) -> TagOntology:
    parents = parents_for(config)
    tags: dict[str, Tag] = {}
    for i in range(config.n_labels):
        tags[label_name(i)] = Tag(id=label_name(i), name=label_name(i))
    for i, parent in enumerate(parents):
        if parent is not None:
            tags[label_name(parent)].child_ids.append(label_name(i))
    ontology = TagOntology(tags=tags, flavor="audioset_json")
    for i, parent in enumerate(parents):
        if parent is not None:
            tags[label_name(i)].father_ids.append(label_name(parent))
    return ontology


def true_temporal_kg(config: SyntheticConfig) -> TemporalKG:
    """Planted pairs become Conjunction edges (count 1) in both directions
    of the listed orientation."""
    edges: dict[tuple[int, int], dict[str, int]] = {}
    for i, j, _p in config.planted_pairs:
        edges[(i, j)] = {"Conjunction": 1}
    return TemporalKG(tag_ids=[label_name(i) for i in range(config.n_labels)], edges=edges)


def _sample_labels(config: SyntheticConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    parents = parents_for(config)
    y = np.zeros((n, config.n_labels), dtype=np.float64)
    for s in range(n):
        active = rng.random(config.n_labels) < config.base_rate
        for i, j, p in config.planted_pairs:
            if active[i] and not active[j] and rng.random() < p:
                active[j] = True
        # hierarchy closure: a label implies its ancestors
        for i in range(config.n_labels):
            if active[i]:
                node = parents[i]
                while node is not None and not active[node]:
                    active[node] = True
                    node = parents[node]
        y[s] = active.astype(np.float64)
    return y


def generate(config: SyntheticConfig) -> tuple[Dataset, TagOntology, TemporalKG]:
    label_rng = derive_rng(config.seed, "synthetic-labels")
    y_train = _sample_labels(config, config.n_train, label_rng)
    y_eval = _sample_labels(config, config.n_eval, label_rng)
    labels = np.vstack([y_train, y_eval])

    proj_rng = derive_rng(config.seed, "synthetic-projection")
    projection = proj_rng.normal(0.0, 1.0, size=(config.d_feat, config.n_labels))
    features = labels @ projection.T
    if not math.isinf(config.snr):
        noise_rng = derive_rng(config.seed, "synthetic-noise")
        features = features + noise_rng.normal(0.0, 1.0 / config.snr, size=features.shape)

    split = np.array(["train"] * config.n_train + ["eval"] * config.n_eval, dtype=object)
    dataset = Dataset(
        features=features,
        labels=labels,
        split=split,
        label_names=[label_name(i) for i in range(config.n_labels)],
    )
    return dataset, true_ontology(config), true_temporal_kg(config)


def write_synthetic(config: SyntheticConfig, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dataset, ontology, kg = generate(config)
    save_dataset(dataset, directory / "dataset")
    save_ontology(ontology, directory / "ontology.json")
    (directory / "temporal_kg.jsonl").write_text(temporal_kg_to_jsonl(kg), encoding="utf-8")
    (directory / "synthetic_config.json").write_text(config.to_json() + "\n", encoding="utf-8")
