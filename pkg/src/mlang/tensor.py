"""f32 tensors with a reverse-mode gradient tape.

Storage is numpy float32 (int64 for id tensors). Every op has a fixed
evaluation order and single-threaded reductions, so identical inputs give
bitwise identical outputs. Rank is capped at 3; broadcasting is
scalar-only (rank-0 against anything)."""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from .errors import (
    IndexOutOfRange,
    MissingGrad,
    NotScalar,
    ShapeMismatch,
    TapeConsumed,
)


class Tape:
    """Shared marker for one forward graph; backward consumes it."""

    __slots__ = ("consumed",)

    def __init__(self):
        self.consumed = False


_grad_enabled = True


@contextmanager
def no_grad():
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "tape")

    def __init__(self, data, requires_grad: bool = False, dtype=np.float32):
        if isinstance(data, np.ndarray):
            arr = data if data.dtype == dtype else data.astype(dtype)
        else:
            arr = np.asarray(data, dtype=dtype)
        if arr.ndim > 3:
            raise ShapeMismatch(f"rank {arr.ndim} exceeds the supported maximum of 3")
        if requires_grad and arr.dtype != np.float32:
            raise ShapeMismatch("only f32 tensors can require gradients")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple = ()
        self._backward = None
        self.tape: Tape | None = None

    # ------------------------------------------------------------- basics

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise NotScalar(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy(), dtype=self.data.dtype)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _int_tensor(data) -> Tensor:
    return Tensor(np.asarray(data, dtype=np.int64), dtype=np.int64)


def _tracked(*inputs: Tensor) -> bool:
    return _grad_enabled and any(t.requires_grad or t._parents for t in inputs)


def _merge_tape(*inputs: Tensor) -> Tape:
    for t in inputs:
        if t.tape is not None:
            return t.tape
    return Tape()


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    out = Tensor(data)
    if _tracked(*parents):
        out._parents = parents
        out._backward = backward
        out.tape = _merge_tape(*parents)
    return out


def _check_same_shape(a: Tensor, b: Tensor, op: str):
    if a.shape != b.shape and a.data.ndim != 0 and b.data.ndim != 0:
        raise ShapeMismatch(f"{op}: shapes {a.shape} and {b.shape} differ")


def _reduce_to(shape: tuple[int, ...], g: np.ndarray) -> np.ndarray:
    # scalar-broadcast reduction: collapse the gradient for a rank-0 operand
    if shape == g.shape:
        return g
    return np.asarray(g.sum(dtype=np.float32), dtype=np.float32).reshape(shape)


# ------------------------------------------------------------ elementwise ops


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "add")
    data = a.data + b.data
    return _make(data, (a, b), lambda g: (_reduce_to(a.shape, g), _reduce_to(b.shape, g)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "sub")
    data = a.data - b.data
    return _make(data, (a, b), lambda g: (_reduce_to(a.shape, g), _reduce_to(b.shape, -g)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "mul")
    data = a.data * b.data
    return _make(
        data,
        (a, b),
        lambda g: (_reduce_to(a.shape, g * b.data), _reduce_to(b.shape, g * a.data)),
    )


def scale(a: Tensor, c: float) -> Tensor:
    c32 = np.float32(c)
    return _make(a.data * c32, (a,), lambda g: (g * c32,))


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, (a,), lambda g: (-g,))


def relu(a: Tensor) -> Tensor:
    mask = (a.data > 0).astype(np.float32)
    return _make(a.data * mask, (a,), lambda g: (g * mask,))


def tanh_(a: Tensor) -> Tensor:
    y = np.tanh(a.data).astype(np.float32)
    return _make(y, (a,), lambda g: (g * (np.float32(1.0) - y * y),))


def sigmoid(a: Tensor) -> Tensor:
    y = (np.float32(1.0) / (np.float32(1.0) + np.exp(-a.data))).astype(np.float32)
    return _make(y, (a,), lambda g: (g * y * (np.float32(1.0) - y),))


# --------------------------------------------------------------- contractions


def _mm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # broadcast-multiply then single-threaded numpy sum: deterministic
    # regardless of BLAS backend or thread count
    return (a[:, :, None] * b[None, :, :]).sum(axis=1, dtype=np.float32)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: shapes {a.shape} and {b.shape}")
    data = _mm(a.data, b.data)
    return _make(
        data,
        (a, b),
        lambda g: (_mm(g, b.data.T.copy()), _mm(a.data.T.copy(), g)),
    )


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeMismatch(f"transpose: expected rank 2, got {a.shape}")
    data = np.ascontiguousarray(a.data.T)
    return _make(data, (a,), lambda g: (np.ascontiguousarray(g.T),))


def bias_add(x: Tensor, b: Tensor) -> Tensor:
    if x.data.ndim != 2 or b.data.ndim != 1 or x.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"biasAdd: shapes {x.shape} and {b.shape}")
    data = x.data + b.data

    def backward(g):
        return (g, g.sum(axis=0, dtype=np.float32))

    return _make(data, (x, b), backward)


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    if x.data.ndim != 2:
        raise ShapeMismatch(f"sliceCols: expected rank 2, got {x.shape}")
    if not 0 <= start < stop <= x.shape[1]:
        raise IndexOutOfRange(f"sliceCols: [{start}, {stop}) outside width {x.shape[1]}")
    data = np.ascontiguousarray(x.data[:, start:stop])

    def backward(g):
        gx = np.zeros_like(x.data)
        gx[:, start:stop] = g
        return (gx,)

    return _make(data, (x,), backward)


def softmax(x: Tensor) -> Tensor:
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z).astype(np.float32)
    y = (e / e.sum(axis=-1, keepdims=True, dtype=np.float32)).astype(np.float32)

    def backward(g):
        dot = (g * y).sum(axis=-1, keepdims=True, dtype=np.float32)
        return (y * (g - dot),)

    return _make(y, (x,), backward)


def cross_entropy(logits: Tensor, targets) -> Tensor:
    if logits.data.ndim != 2:
        raise ShapeMismatch(f"crossEntropy: logits must be rank 2, got {logits.shape}")
    t = np.asarray(
        targets.data if isinstance(targets, Tensor) else targets, dtype=np.int64
    ).reshape(-1)
    b, c = logits.shape
    if t.shape[0] != b:
        raise ShapeMismatch(f"crossEntropy: {b} rows but {t.shape[0]} targets")
    if t.size and (t.min() < 0 or t.max() >= c):
        raise IndexOutOfRange(f"crossEntropy: target outside [0, {c})")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    e = np.exp(z).astype(np.float32)
    p = (e / e.sum(axis=1, keepdims=True, dtype=np.float32)).astype(np.float32)
    nll = -np.log(p[np.arange(b), t])
    loss = np.asarray(nll.mean(dtype=np.float32), dtype=np.float32)

    def backward(g):
        onehot = np.zeros((b, c), dtype=np.float32)
        onehot[np.arange(b), t] = 1.0
        return ((p - onehot) * (np.float32(g) / np.float32(b)),)

    return _make(loss.reshape(()), (logits,), backward)


def mse(pred: Tensor, target: Tensor) -> Tensor:
    if pred.shape != target.shape:
        raise ShapeMismatch(f"mse: shapes {pred.shape} and {target.shape} differ")
    diff = pred.data - target.data
    loss = np.asarray((diff * diff).mean(dtype=np.float32), dtype=np.float32)
    n = np.float32(pred.data.size)

    def backward(g):
        base = diff * (np.float32(2.0) * np.float32(g) / n)
        return (base, -base)

    return _make(loss.reshape(()), (pred, target), backward)


# ----------------------------------------------------------- structural ops


def embedding_lookup(table: Tensor, ids: Tensor) -> Tensor:
    if table.data.ndim != 2:
        raise ShapeMismatch(f"embeddingLookup: table must be rank 2, got {table.shape}")
    idx = np.asarray(ids.data, dtype=np.int64)
    v = table.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= v):
        raise IndexOutOfRange(f"embeddingLookup: id outside [0, {v})")
    data = table.data[idx]
    if data.ndim > 3:
        raise ShapeMismatch("embeddingLookup: result rank exceeds 3")

    def backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, idx.reshape(-1), g.reshape(-1, table.shape[1]))
        return (gt,)

    return _make(data, (table,), backward)


def mean_pool(x: Tensor) -> Tensor:
    if x.data.ndim != 3:
        raise ShapeMismatch(f"meanPool: expected rank 3, got {x.shape}")
    _, seq_len, _ = x.shape
    data = x.data.mean(axis=1, dtype=np.float32)

    def backward(g):
        return (np.repeat(g[:, None, :], seq_len, axis=1) / np.float32(seq_len),)

    return _make(data, (x,), backward)


def flatten(x: Tensor) -> Tensor:
    if x.data.ndim < 2:
        raise ShapeMismatch(f"flatten: expected rank >= 2, got {x.shape}")
    b = x.shape[0]
    data = x.data.reshape(b, -1)
    return _make(data, (x,), lambda g: (g.reshape(x.shape),))


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    data = x.data.reshape(shape)
    return _make(data, (x,), lambda g: (g.reshape(x.shape),))


def sum_(x: Tensor) -> Tensor:
    data = np.asarray(x.data.sum(dtype=np.float32), dtype=np.float32)
    return _make(data.reshape(()), (x,), lambda g: (np.full_like(x.data, np.float32(g)),))


def mean_(x: Tensor) -> Tensor:
    n = np.float32(x.data.size)
    data = np.asarray(x.data.mean(dtype=np.float32), dtype=np.float32)
    return _make(
        data.reshape(()), (x,), lambda g: (np.full_like(x.data, np.float32(g) / n),)
    )


def concat(parts: list[Tensor]) -> Tensor:
    # concatenation along the last (feature) axis
    ndim = parts[0].data.ndim
    for p in parts:
        if p.data.ndim != ndim or p.shape[:-1] != parts[0].shape[:-1]:
            raise ShapeMismatch(
                f"concat: incompatible shapes {[p.shape for p in parts]}"
            )
    data = np.concatenate([p.data for p in parts], axis=-1)
    widths = [p.shape[-1] for p in parts]

    def backward(g):
        grads = []
        off = 0
        for w in widths:
            grads.append(np.ascontiguousarray(g[..., off : off + w]))
            off += w
        return tuple(grads)

    return _make(data, tuple(parts), backward)


# ------------------------------------------------------------------ backward


def backward(loss: Tensor):
    if loss.data.ndim != 0:
        raise NotScalar(f"backward() requires a scalar loss, got shape {loss.shape}")
    if loss.tape is None:
        raise MissingGrad("backward() on a tensor with no recorded operations")
    if loss.tape.consumed:
        raise TapeConsumed("backward() already ran on this tape")
    loss.tape.consumed = True

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones((), dtype=np.float32)}
    for node in reversed(topo):
        g = grads.get(id(node))
        if g is None:
            continue
        if node.requires_grad and not node._parents:
            if node.grad is None:
                node.grad = np.zeros_like(node.data)
            node.grad += g
        if node._backward is None:
            continue
        parent_grads = node._backward(g)
        for parent, pg in zip(node._parents, parent_grads):
            if pg is None:
                continue
            if id(parent) in grads:
                grads[id(parent)] = grads[id(parent)] + pg
            else:
                grads[id(parent)] = pg


def int_tensor(data) -> Tensor:
    return _int_tensor(data)
