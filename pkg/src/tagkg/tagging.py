"""Multi-label tagging model: feature encoder, label branch, dot-product
classifier with a sigmoid, binary cross-entropy, and Adam training.

The encoder is a 2-layer perceptron over precomputed per-recording feature
vectors. The label branch is either a trainable free embedding matrix
(``baseline_no_kg``) or a stack of graph convolutions over one or two
relation adjacencies; sample embeddings are dot-producted against the
label embeddings to produce per-label probabilities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import (
    Tape,
    Tensor,
    add,
    clip,
    log,
    matmul,
    mean_all,
    mul,
    relu,
    scale,
    sigmoid,
    sub,
    transpose,
)
from .dataset import Dataset
from .gnn import DGCNLayer, dgcn_forward, gcn_stack, init_dgcn_layer, load_checkpoint, save_checkpoint
from .kgbuild import RelationAdjacency
from .metrics import EvalReport, evaluate
from .seeding import derive_rng

VARIANT_BASELINE = "baseline_no_kg"
VARIANT_GCN_SINGLE = "gcn_single"
VARIANT_GCN_MERGED = "gcn_merged"
VARIANT_DGCN = "dgcn"
VARIANTS = (VARIANT_BASELINE, VARIANT_GCN_SINGLE, VARIANT_GCN_MERGED, VARIANT_DGCN)

PROB_EPS = 1e-12

DEFAULT_HIDDEN_DIM = 64
DEFAULT_EMBED_DIM = 32


class TaggingError(ValueError):
    pass


@dataclass
class TrainConfig:
    batch_size: int = 32
    learning_rate: float | None = None  # None: 1e-3, or 3e-4 for the dgcn variant
    epochs: int = 20
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.batch_size <= 0 or self.epochs < 0:
            raise TaggingError("batch_size and epochs must be positive")
        if self.learning_rate is not None and self.learning_rate < 0:
            raise TaggingError("learning_rate must be non-negative")

    def lr_for(self, variant: str) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return 3e-4 if variant == VARIANT_DGCN else 1e-3


@dataclass
class TaggingModel:
    variant: str
    enc_w1: Tensor
    enc_b1: Tensor
    enc_w2: Tensor
    enc_b2: Tensor
    h0: Tensor  # n_labels x d_label initial label features
    label_layers: list[DGCNLayer] = field(default_factory=list)
    label_free: Tensor | None = None  # baseline replacement for the label branch

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise TaggingError(f"unknown variant {self.variant!r}")
        if self.variant == VARIANT_BASELINE:
            if self.label_free is None:
                raise TaggingError("baseline needs the free label matrix")
        elif not self.label_layers:
            raise TaggingError(f"variant {self.variant!r} needs label layers")

    @property
    def d_feat(self) -> int:
        return self.enc_w1.rows

    @property
    def n_labels(self) -> int:
        return self.h0.rows

    def parameters(self) -> dict[str, Tensor]:
        """Named parameters in a fixed order (drives Adam and checkpoints)."""
        params = {
            "encoder/w1": self.enc_w1,
            "encoder/b1": self.enc_b1,
            "encoder/w2": self.enc_w2,
            "encoder/b2": self.enc_b2,
        }
        if self.label_free is not None:
            params["label/free"] = self.label_free
        for li, layer in enumerate(self.label_layers):
            for ri in range(len(layer.relations)):
                params[f"label/layer{li}/rel{ri}/w"] = layer.weights[ri]
                params[f"label/layer{li}/rel{ri}/b"] = layer.biases[ri]
        return params


def build_model(
    variant: str,
    d_feat: int,
    n_labels: int,
    adjacencies: list[RelationAdjacency] | None,
    seed: int,
    d_hidden: int = DEFAULT_HIDDEN_DIM,
    d_embed: int = DEFAULT_EMBED_DIM,
    n_gcn_layers: int = 2,
    h0: np.ndarray | None = None,
) -> TaggingModel:
    """Seeded model construction; hidden GCN layers use the leaky rectifier
    and the final one is linear. H0 defaults to one-hot identity."""
    if variant not in VARIANTS:
        raise TaggingError(f"unknown variant {variant!r}")
    rng = derive_rng(seed, "init")

    def glorot(rows, cols):
        limit = np.sqrt(6.0 / (rows + cols))
        return Tensor(rng.uniform(-limit, limit, size=(rows, cols)), requires_grad=True)

    enc_w1 = glorot(d_feat, d_hidden)
    enc_b1 = Tensor(np.zeros((1, d_hidden)), requires_grad=True)
    enc_w2 = glorot(d_hidden, d_embed)
    enc_b2 = Tensor(np.zeros((1, d_embed)), requires_grad=True)

    if h0 is None:
        h0_t = Tensor(np.eye(n_labels))
    else:
        if h0.shape[0] != n_labels:
            raise TaggingError("h0 must have one row per label")
        h0_t = Tensor(h0)

    label_free = None
    label_layers: list[DGCNLayer] = []
    if variant == VARIANT_BASELINE:
        label_free = glorot(n_labels, d_embed)
    else:
        if not adjacencies:
            raise TaggingError(f"variant {variant!r} needs at least one adjacency")
        if variant == VARIANT_DGCN and len(adjacencies) < 2:
            raise TaggingError("dgcn expects two relation adjacencies")
        if variant in (VARIANT_GCN_SINGLE, VARIANT_GCN_MERGED) and len(adjacencies) != 1:
            raise TaggingError(f"{variant} expects exactly one adjacency")
        dims = [h0_t.cols] + [d_hidden] * (n_gcn_layers - 1) + [d_embed]
        for li in range(n_gcn_layers):
            activation = "identity" if li == n_gcn_layers - 1 else "leaky_relu"
            label_layers.append(
                init_dgcn_layer(adjacencies, dims[li], dims[li + 1], rng, activation)
            )

    return TaggingModel(
        variant=variant,
        enc_w1=enc_w1,
        enc_b1=enc_b1,
        enc_w2=enc_w2,
        enc_b2=enc_b2,
        h0=h0_t,
        label_layers=label_layers,
        label_free=label_free,
    )


def encode(model: TaggingModel, x: Tensor, tape: Tape | None = None) -> Tensor:
    hidden = relu(add(matmul(x, model.enc_w1, tape), model.enc_b1, tape), tape)
    return add(matmul(hidden, model.enc_w2, tape), model.enc_b2, tape)


def label_matrix(model: TaggingModel, tape: Tape | None = None) -> Tensor:
    if model.variant == VARIANT_BASELINE:
        return model.label_free
    return gcn_stack(model.label_layers, model.h0, tape)


def model_forward(
    model: TaggingModel,
    x: Tensor,
    tape: Tape | None = None,
    label_override: Tensor | None = None,
) -> Tensor:
    """sigmoid(encoder(x) @ L^T); every variant shares this code path."""
    if x.cols != model.d_feat:
        raise TaggingError(f"input has {x.cols} features, model expects {model.d_feat}")
    embeddings = encode(model, x, tape)
    labels = label_override if label_override is not None else label_matrix(model, tape)
    logits = matmul(embeddings, transpose(labels, tape), tape)
    return sigmoid(logits, tape)


def bce_loss(probs: Tensor, targets: Tensor, tape: Tape | None = None) -> Tensor:
    """Mean binary cross-entropy, probabilities clamped away from 0 and 1."""
    if probs.shape != targets.shape:
        raise TaggingError(f"shape mismatch: {probs.shape} vs {targets.shape}")
    p = clip(probs, PROB_EPS, 1.0 - PROB_EPS, tape)
    one = Tensor(np.ones_like(p.data))
    pos = mul(targets, log(p, tape), tape)
    neg = mul(sub(one, targets, tape), log(sub(one, p, tape), tape), tape)
    return scale(mean_all(add(pos, neg, tape), tape), -1.0, tape)


class Adam:
    def __init__(self, params: dict[str, Tensor], lr: float, config: TrainConfig):
        self.params = params
        self.lr = lr
        self.beta1 = config.beta1
        self.beta2 = config.beta2
        self.eps = config.eps
        self.t = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def step(self) -> None:
        self.t += 1
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = self.m[name] / (1 - self.beta1**self.t)
            v_hat = self.v[name] / (1 - self.beta2**self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    eval_map: float | None


def predict(model: TaggingModel, features: np.ndarray) -> np.ndarray:
    return model_forward(model, Tensor(features)).data


def evaluate_model(model: TaggingModel, features: np.ndarray, labels: np.ndarray) -> EvalReport:
    return evaluate(predict(model, features), labels)


def train(model: TaggingModel, dataset: Dataset, config: TrainConfig) -> list[EpochLog]:
    """Adam training with a seeded shuffle each epoch.

    Deterministic: the same (seed, config, data) reproduces the parameter
    trajectory bit for bit. Returns the per-epoch loss / eval-mAP log.
    """
    x_train, y_train = dataset.train_arrays()
    x_eval, y_eval = dataset.eval_arrays()
    if x_train.shape[0] == 0:
        raise TaggingError("dataset has no training samples")

    lr = config.lr_for(model.variant)
    params = model.parameters()
    optimizer = Adam(params, lr, config)
    shuffle_rng = derive_rng(config.seed, "train-shuffle")
    logs: list[EpochLog] = []
    n = x_train.shape[0]

    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        total_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            tape = Tape()
            probs = model_forward(model, Tensor(x_train[batch]), tape)
            loss = bce_loss(probs, Tensor(y_train[batch]), tape)
            tape.backward(loss)
            optimizer.step()
            optimizer.zero_grad()
            total_loss += loss.item() * len(batch)
        eval_map = None
        if x_eval.shape[0] > 0:
            eval_map = evaluate_model(model, x_eval, y_eval).map
        logs.append(EpochLog(epoch=epoch, train_loss=total_loss / n, eval_map=eval_map))
    return logs


def logs_to_jsonl(logs: list[EpochLog]) -> str:
    lines = [
        json.dumps({"epoch": l.epoch, "loss": l.train_loss, "map": l.eval_map}, sort_keys=True)
        for l in logs
    ]
    return "".join(line + "\n" for line in lines)


def save_model(model: TaggingModel, path: str | Path) -> None:
    tensors = dict(model.parameters())
    tensors["h0"] = model.h0
    manifest: dict = {
        "variant": model.variant,
        "d_feat": model.d_feat,
        "n_labels": model.n_labels,
        "layers": [],
    }
    for li, layer in enumerate(model.label_layers):
        manifest["layers"].append(
            {
                "activation": layer.activation,
                "relations": [adj.relation for adj in layer.relations],
            }
        )
        for ri, adj in enumerate(layer.relations):
            tensors[f"adjacency/layer{li}/rel{ri}"] = Tensor(adj.matrix)
    save_checkpoint(path, manifest, tensors)


def load_model(path: str | Path) -> TaggingModel:
    manifest, tensors = load_checkpoint(path)
    variant = manifest["variant"]

    def param(name):
        t = tensors[name]
        t.requires_grad = True
        return t

    label_layers = []
    for li, layer_spec in enumerate(manifest["layers"]):
        relations = [
            RelationAdjacency(
                relation=rel,
                matrix=tensors[f"adjacency/layer{li}/rel{ri}"].data,
                n=tensors[f"adjacency/layer{li}/rel{ri}"].rows,
            )
            for ri, rel in enumerate(layer_spec["relations"])
        ]
        weights = [param(f"label/layer{li}/rel{ri}/w") for ri in range(len(relations))]
        biases = [param(f"label/layer{li}/rel{ri}/b") for ri in range(len(relations))]
        label_layers.append(
            DGCNLayer(
                relations=relations,
                weights=weights,
                biases=biases,
                activation=layer_spec["activation"],
            )
        )
    return TaggingModel(
        variant=variant,
        enc_w1=param("encoder/w1"),
        enc_b1=param("encoder/b1"),
        enc_w2=param("encoder/w2"),
        enc_b2=param("encoder/b2"),
        h0=tensors["h0"],
        label_layers=label_layers,
        label_free=param("label/free") if variant == VARIANT_BASELINE else None,
    )
