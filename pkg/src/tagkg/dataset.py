"""Multi-label dataset with train/eval split tags and its CSV layout.

A dataset directory holds:

* ``features.csv``    -- first line ``<n_samples>,<d_feat>``, then one row
                         of comma-separated floats per sample;
* ``labels.csv``      -- first line ``<n_samples>,<n_labels>``, then 0/1 rows;
* ``split.csv``       -- one of ``train``/``eval`` per sample line;
* ``label_names.txt`` -- one tag id per label column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .seeding import derive_rng


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    features: np.ndarray  # n_samples x d_feat
    labels: np.ndarray  # n_samples x n_labels, entries in {0, 1}
    split: np.ndarray  # n_samples, "train" or "eval"
    label_names: list[str]

    def __post_init__(self):
        n = self.features.shape[0]
        if self.labels.shape[0] != n or self.split.shape[0] != n:
            raise DatasetError("features, labels and split must align by sample")
        if self.labels.shape[1] != len(self.label_names):
            raise DatasetError("label columns must match label_names")
        bad = ~np.isin(self.labels, (0.0, 1.0))
        if bad.any():
            raise DatasetError("label entries must be 0 or 1")
        if not set(np.unique(self.split)) <= {"train", "eval"}:
            raise DatasetError("split tags must be 'train' or 'eval'")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def d_feat(self) -> int:
        return self.features.shape[1]

    @property
    def n_labels(self) -> int:
        return self.labels.shape[1]

    def mask(self, which: str) -> np.ndarray:
        return self.split == which

    def train_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        m = self.mask("train")
        return self.features[m], self.labels[m]

    def eval_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        m = self.mask("eval")
        return self.features[m], self.labels[m]

    def per_class_train_counts(self) -> np.ndarray:
        _, y = self.train_arrays()
        return y.sum(axis=0).astype(int)


def _write_matrix_csv(path: Path, matrix: np.ndarray, as_int: bool) -> None:
    n, d = matrix.shape
    lines = [f"{n},{d}"]
    for row in matrix.tolist():
        if as_int:
            lines.append(",".join(str(int(v)) for v in row))
        else:
            lines.append(",".join(repr(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_matrix_csv(path: Path) -> np.ndarray:
    lines = [l for l in path.read_text(encoding="utf-8").split("\n") if l.strip()]
    if not lines:
        raise DatasetError(f"{path}: empty matrix file")
    try:
        n, d = (int(v) for v in lines[0].split(","))
    except ValueError as exc:
        raise DatasetError(f"{path}: first line must be '<rows>,<cols>'") from exc
    if len(lines) - 1 != n:
        raise DatasetError(f"{path}: header says {n} rows, found {len(lines) - 1}")
    matrix = np.empty((n, d), dtype=np.float64)
    for i, line in enumerate(lines[1:]):
        values = line.split(",")
        if len(values) != d:
            raise DatasetError(f"{path}: row {i + 1} has {len(values)} values, expected {d}")
        matrix[i] = [float(v) for v in values]
    return matrix


def save_dataset(dataset: Dataset, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    _write_matrix_csv(directory / "features.csv", dataset.features, as_int=False)
    _write_matrix_csv(directory / "labels.csv", dataset.labels, as_int=True)
    (directory / "split.csv").write_text(
        "\n".join(dataset.split.tolist()) + "\n", encoding="utf-8"
    )
    (directory / "label_names.txt").write_text(
        "\n".join(dataset.label_names) + "\n", encoding="utf-8"
    )


def load_dataset(directory: str | Path) -> Dataset:
    directory = Path(directory)
    features = _read_matrix_csv(directory / "features.csv")
    labels = _read_matrix_csv(directory / "labels.csv")
    split = np.array(
        [l for l in (directory / "split.csv").read_text(encoding="utf-8").split("\n") if l],
        dtype=object,
    )
    label_names = [
        l for l in (directory / "label_names.txt").read_text(encoding="utf-8").split("\n") if l
    ]
    return Dataset(features=features, labels=labels, split=split, label_names=label_names)


def subsample(dataset: Dataset, fraction: float, seed: int) -> Dataset:
    """Keep a seeded uniform sample of floor(fraction * n_train) training
    samples; the eval split is untouched. Sample order is preserved."""
    if not 0 < fraction <= 1:
        raise DatasetError(f"fraction must be in (0, 1], got {fraction}")
    train_idx = np.flatnonzero(dataset.mask("train"))
    k = math.floor(fraction * len(train_idx))
    rng = derive_rng(seed, "subsample")
    chosen = rng.choice(train_idx, size=k, replace=False)
    keep = np.zeros(dataset.n_samples, dtype=bool)
    keep[chosen] = True
    keep[dataset.mask("eval")] = True
    return Dataset(
        features=dataset.features[keep],
        labels=dataset.labels[keep],
        split=dataset.split[keep],
        label_names=list(dataset.label_names),
    )
