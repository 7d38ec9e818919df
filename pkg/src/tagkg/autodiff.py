"""Minimal dense-tensor engine with reverse-mode gradients.

Values are 2-D float64 matrices (scalars are 1x1). Passing a Tape to an op
records a backward closure; the same ops run untaped for pure evaluation.
Gradients accumulate into ``Tensor.grad`` when ``Tape.backward`` replays
the recorded operations once, in reverse order.
"""

from __future__ import annotations

import numpy as np


class AutodiffError(ValueError):
    pass


class Tensor:
    """A 2-D float64 matrix node."""

    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2:
            raise AutodiffError(f"tensors are 2-D; got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise AutodiffError("tensor entries must be finite")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.shape != (1, 1):
            raise AutodiffError(f"item() needs a 1x1 tensor, got {self.data.shape}")
        return float(self.data[0, 0])

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{label})"


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = g.copy()
    else:
        t.grad += g


class Tape:
    """Forward-order record of operations; backward replays it reversed."""

    def __init__(self):
        self._records: list[tuple[Tensor, callable]] = []
        self._produced: set[int] = set()
        self._consumed = False

    def record(self, out: Tensor, backward_fn) -> None:
        self._records.append((out, backward_fn))
        self._produced.add(id(out))

    def backward(self, loss: Tensor) -> None:
        if self._consumed:
            raise AutodiffError("tape already consumed; build a fresh forward pass")
        if not self._records:
            raise AutodiffError("backward before forward: the tape has no records")
        if loss.shape != (1, 1):
            raise AutodiffError(f"loss must be scalar (1x1), got {loss.shape}")
        if id(loss) not in self._produced:
            raise AutodiffError("loss was not produced on this tape")
        self._consumed = True
        loss.grad = np.ones((1, 1), dtype=np.float64)
        for out, backward_fn in reversed(self._records):
            if out.grad is not None:
                backward_fn(out.grad)


def _binary_requires(a: Tensor, b: Tensor) -> bool:
    return a.requires_grad or b.requires_grad


def matmul(a: Tensor, b: Tensor, tape: Tape | None = None) -> Tensor:
    if a.cols != b.rows:
        raise AutodiffError(f"matmul mismatch: {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data, requires_grad=_binary_requires(a, b))
    if tape is not None and out.requires_grad:

        def backward(g):
            if a.requires_grad:
                _accumulate(a, g @ b.data.T)
            if b.requires_grad:
                _accumulate(b, a.data.T @ g)

        tape.record(out, backward)
    return out


def transpose(x: Tensor, tape: Tape | None = None) -> Tensor:
    out = Tensor(x.data.T, requires_grad=x.requires_grad)
    if tape is not None and out.requires_grad:
        tape.record(out, lambda g: _accumulate(x, g.T))
    return out


def add(a: Tensor, b: Tensor, tape: Tape | None = None) -> Tensor:
    """Elementwise sum; b may be a 1 x d row broadcast over a's rows."""
    broadcast = b.shape != a.shape
    if broadcast and not (b.rows == 1 and b.cols == a.cols):
        raise AutodiffError(f"add mismatch: {a.shape} + {b.shape}")
    out = Tensor(a.data + b.data, requires_grad=_binary_requires(a, b))
    if tape is not None and out.requires_grad:

        def backward(g):
            if a.requires_grad:
                _accumulate(a, g)
            if b.requires_grad:
                _accumulate(b, g.sum(axis=0, keepdims=True) if broadcast else g)

        tape.record(out, backward)
    return out


def sub(a: Tensor, b: Tensor, tape: Tape | None = None) -> Tensor:
    if a.shape != b.shape:
        raise AutodiffError(f"sub mismatch: {a.shape} - {b.shape}")
    out = Tensor(a.data - b.data, requires_grad=_binary_requires(a, b))
    if tape is not None and out.requires_grad:

        def backward(g):
            if a.requires_grad:
                _accumulate(a, g)
            if b.requires_grad:
                _accumulate(b, -g)

        tape.record(out, backward)
    return out


def mul(a: Tensor, b: Tensor, tape: Tape | None = None) -> Tensor:
    if a.shape != b.shape:
        raise AutodiffError(f"mul mismatch: {a.shape} * {b.shape}")
    out = Tensor(a.data * b.data, requires_grad=_binary_requires(a, b))
    if tape is not None and out.requires_grad:

        def backward(g):
            if a.requires_grad:
                _accumulate(a, g * b.data)
            if b.requires_grad:
                _accumulate(b, g * a.data)

        tape.record(out, backward)
    return out


def scale(x: Tensor, factor: float, tape: Tape | None = None) -> Tensor:
    out = Tensor(x.data * factor, requires_grad=x.requires_grad)
    if tape is not None and out.requires_grad:
        tape.record(out, lambda g: _accumulate(x, g * factor))
    return out


def log(x: Tensor, tape: Tape | None = None) -> Tensor:
    if np.any(x.data <= 0):
        raise AutodiffError("log needs strictly positive entries")
    out = Tensor(np.log(x.data), requires_grad=x.requires_grad)
    if tape is not None and out.requires_grad:
        tape.record(out, lambda g: _accumulate(x, g / x.data))
    return out


def clip(x: Tensor, lo: float, hi: float, tape: Tape | None = None) -> Tensor:
    out = Tensor(np.clip(x.data, lo, hi), requires_grad=x.requires_grad)
    if tape is not None and out.requires_grad:
        mask = ((x.data >= lo) & (x.data <= hi)).astype(np.float64)
        tape.record(out, lambda g: _accumulate(x, g * mask))
    return out


def relu(x: Tensor, tape: Tape | None = None) -> Tensor:
    out = Tensor(np.maximum(x.data, 0.0), requires_grad=x.requires_grad)
    if tape is not None and out.requires_grad:
        mask = (x.data > 0).astype(np.float64)
        tape.record(out, lambda g: _accumulate(x, g * mask))
    return out


def leaky_relu(x: Tensor, slope: float = 0.2, tape: Tape | None = None) -> Tensor:
    out = Tensor(np.where(x.data > 0, x.data, slope * x.data), requires_grad=x.requires_grad)
    if tape is not None and out.requires_grad:
        mask = np.where(x.data > 0, 1.0, slope)
        tape.record(out, lambda g: _accumulate(x, g * mask))
    return out


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(x: Tensor, tape: Tape | None = None) -> Tensor:
    s = _stable_sigmoid(x.data)
    out = Tensor(s, requires_grad=x.requires_grad)
    if tape is not None and out.requires_grad:
        tape.record(out, lambda g: _accumulate(x, g * s * (1.0 - s)))
    return out


def sum_all(x: Tensor, tape: Tape | None = None) -> Tensor:
    out = Tensor([[x.data.sum()]], requires_grad=x.requires_grad)
    if tape is not None and out.requires_grad:
        tape.record(out, lambda g: _accumulate(x, np.full_like(x.data, g[0, 0])))
    return out


def mean_all(x: Tensor, tape: Tape | None = None) -> Tensor:
    size = x.data.size
    out = Tensor([[x.data.mean()]], requires_grad=x.requires_grad)
    if tape is not None and out.requires_grad:
        tape.record(out, lambda g: _accumulate(x, np.full_like(x.data, g[0, 0] / size)))
    return out


ACTIVATIONS = ("leaky_relu", "sigmoid", "identity", "relu")


def apply_activation(name: str, x: Tensor, tape: Tape | None = None) -> Tensor:
    if name == "identity":
        return x
    if name == "leaky_relu":
        return leaky_relu(x, 0.2, tape)
    if name == "sigmoid":
        return sigmoid(x, tape)
    if name == "relu":
        return relu(x, tape)
    raise AutodiffError(f"unknown activation {name!r}")
