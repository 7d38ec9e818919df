"""Relation-aware graph convolution layers.

A layer owns one weight matrix and one bias per relation and computes

    act( sum_r [ A_r @ H @ W_r + 1 b_r^T ] )

where A_r is a row-normalized adjacency with self-loops, so each node
averages its relation-r neighbourhood (itself included) before the
relation-specific linear map. With a single relation this is a plain GCN
layer; no basis or block decomposition is applied to the weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import Tape, Tensor, add, apply_activation, matmul
from .kgbuild import RelationAdjacency


class GNNError(ValueError):
    pass


@dataclass
class DGCNLayer:
    relations: list[RelationAdjacency]
    weights: list[Tensor]  # per relation, d_in x d_out
    biases: list[Tensor]  # per relation, 1 x d_out
    activation: str = "leaky_relu"
    _adj_tensors: list[Tensor] = field(default_factory=list, repr=False)

    def __post_init__(self):
        r = len(self.relations)
        if r < 1:
            raise GNNError("a layer needs at least one relation")
        if len(self.weights) != r or len(self.biases) != r:
            raise GNNError("need exactly one weight and one bias per relation")
        d_in, d_out = self.weights[0].shape
        n = self.relations[0].n
        for adj in self.relations:
            if adj.n != n:
                raise GNNError("all relation adjacencies must share the node count")
        for w in self.weights:
            if w.shape != (d_in, d_out):
                raise GNNError("all relation weights must share dimensions")
        for b in self.biases:
            if b.shape != (1, d_out):
                raise GNNError(f"biases must be 1 x {d_out}")
        self._adj_tensors = [Tensor(adj.matrix) for adj in self.relations]

    @property
    def n_nodes(self) -> int:
        return self.relations[0].n

    @property
    def d_in(self) -> int:
        return self.weights[0].rows

    @property
    def d_out(self) -> int:
        return self.weights[0].cols


def dgcn_forward(layer: DGCNLayer, h: Tensor, tape: Tape | None = None) -> Tensor:
    if h.rows != layer.n_nodes or h.cols != layer.d_in:
        raise GNNError(
            f"input is {h.shape}, layer expects ({layer.n_nodes}, {layer.d_in})"
        )
    total: Tensor | None = None
    for adj, w, b in zip(layer._adj_tensors, layer.weights, layer.biases):
        mixed = matmul(adj, h, tape)
        term = add(matmul(mixed, w, tape), b, tape)
        total = term if total is None else add(total, term, tape)
    return apply_activation(layer.activation, total, tape)


def gcn_stack(layers: list[DGCNLayer], h0: Tensor, tape: Tape | None = None) -> Tensor:
    if not layers:
        raise GNNError("empty layer stack")
    for prev, nxt in zip(layers, layers[1:]):
        if prev.d_out != nxt.d_in:
            raise GNNError(f"layer dimension chain broken: {prev.d_out} -> {nxt.d_in}")
    h = h0
    for layer in layers:
        h = dgcn_forward(layer, h, tape)
    return h


def init_dgcn_layer(
    relations: list[RelationAdjacency],
    d_in: int,
    d_out: int,
    rng: np.random.Generator,
    activation: str = "leaky_relu",
) -> DGCNLayer:
    """Glorot-uniform weights, zero biases, one pair per relation."""
    limit = np.sqrt(6.0 / (d_in + d_out))
    weights = [
        Tensor(rng.uniform(-limit, limit, size=(d_in, d_out)), requires_grad=True)
        for _ in relations
    ]
    biases = [Tensor(np.zeros((1, d_out)), requires_grad=True) for _ in relations]
    return DGCNLayer(relations=list(relations), weights=weights, biases=biases, activation=activation)


CHECKPOINT_VERSION = 1


def tensors_to_payload(tensors: dict[str, Tensor]) -> dict:
    return {
        name: {"rows": t.rows, "cols": t.cols, "data": t.data.flatten().tolist()}
        for name, t in tensors.items()
    }


def tensors_from_payload(payload: dict, requires_grad: set[str] | None = None) -> dict[str, Tensor]:
    tensors = {}
    for name, spec in payload.items():
        data = np.array(spec["data"], dtype=np.float64).reshape(spec["rows"], spec["cols"])
        grad = requires_grad is None or name in requires_grad
        tensors[name] = Tensor(data, requires_grad=grad, name=name)
    return tensors


def save_checkpoint(path: str | Path, manifest: dict, tensors: dict[str, Tensor]) -> None:
    """Single JSON file: format version, layer/relation manifest, named tensors."""
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "manifest": manifest,
        "tensors": tensors_to_payload(tensors),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, Tensor]]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    version = payload.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise GNNError(f"unsupported checkpoint format version {version!r}")
    tensors = tensors_from_payload(payload["tensors"], requires_grad=set())
    return payload["manifest"], tensors
