"""Minimal reverse-mode automatic differentiation over float64 numpy arrays.

A Tensor wraps an ndarray plus a closure that routes upstream gradients to
its parents.  Graphs are built eagerly by the op functions below; calling
``backward`` on a scalar walks the graph once in reverse topological order
and then retires it, so a second backward without a fresh forward raises.
Ops skip tape construction entirely when no input requires gradients.
"""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_retired")

    def __init__(self, data, requires_grad=False, grad_buffer=None, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = grad_buffer  # leaves may share an external accumulation buffer
        self._parents = _parents
        self._backward = _backward
        self._retired = False

    @property
    def shape(self):
        return self.data.shape

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def item(self) -> float:
        return float(self.data)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_const(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward requires a scalar objective")
        if self._retired:
            raise RuntimeError("backward already ran on this graph; run a fresh forward")
        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and not p._retired:
                    stack.append((p, False))
        grads = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is not None:
                node._backward(g, grads)
            else:
                if node.grad is None:
                    node.grad = np.zeros_like(node.data)
                node.grad += g
            node._retired = True
            node._parents = ()
            node._backward = None


def _const(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _accumulate(grads: dict, node: Tensor, g: np.ndarray):
    if not node.requires_grad:
        return
    if node._backward is None and node.grad is not None:
        node.grad += g  # leaf with an external buffer
        return
    key = id(node)
    if key in grads:
        grads[key] = grads[key] + g
    else:
        grads[key] = g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _make(data, parents, backward) -> Tensor:
    if any(p.requires_grad for p in parents):
        t = Tensor(data, requires_grad=True, _parents=tuple(parents), _backward=backward)
        return t
    return Tensor(data)


def add(a, b) -> Tensor:
    a, b = _const(a), _const(b)
    out_data = a.data + b.data

    def bw(g, grads):
        _accumulate(grads, a, _unbroadcast(g, a.data.shape))
        _accumulate(grads, b, _unbroadcast(g, b.data.shape))

    return _make(out_data, (a, b), bw)


def sub(a, b) -> Tensor:
    a, b = _const(a), _const(b)
    out_data = a.data - b.data

    def bw(g, grads):
        _accumulate(grads, a, _unbroadcast(g, a.data.shape))
        _accumulate(grads, b, _unbroadcast(-g, b.data.shape))

    return _make(out_data, (a, b), bw)


def mul(a, b) -> Tensor:
    a, b = _const(a), _const(b)
    out_data = a.data * b.data

    def bw(g, grads):
        _accumulate(grads, a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(grads, b, _unbroadcast(g * a.data, b.data.shape))

    return _make(out_data, (a, b), bw)


def matmul(a, b) -> Tensor:
    a, b = _const(a), _const(b)
    out_data = a.data @ b.data

    def bw(g, grads):
        _accumulate(grads, a, g @ b.data.T)
        _accumulate(grads, b, a.data.T @ g)

    return _make(out_data, (a, b), bw)


def reshape(a, shape) -> Tensor:
    a = _const(a)
    out_data = a.data.reshape(shape)

    def bw(g, grads):
        _accumulate(grads, a, g.reshape(a.data.shape))

    return _make(out_data, (a,), bw)


def getitem(a, idx) -> Tensor:
    a = _const(a)
    out_data = a.data[idx]

    def bw(g, grads):
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        _accumulate(grads, a, full)

    return _make(out_data, (a,), bw)


def take_rows(a, index: np.ndarray) -> Tensor:
    """Gather a[r, index[r]] for each row r of a 2D tensor."""
    a = _const(a)
    rows = np.arange(a.data.shape[0])
    out_data = a.data[rows, index]

    def bw(g, grads):
        full = np.zeros_like(a.data)
        np.add.at(full, (rows, index), g)
        _accumulate(grads, a, full)

    return _make(out_data, (a,), bw)


def concat(tensors: Iterable, axis=0) -> Tensor:
    ts = [_const(t) for t in tensors]
    out_data = np.concatenate([t.data for t in ts], axis=axis)
    sizes = [t.data.shape[axis] for t in ts]
    offsets = np.cumsum([0] + sizes)

    def bw(g, grads):
        for t, lo, hi in zip(ts, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            _accumulate(grads, t, g[tuple(sl)])

    return _make(out_data, tuple(ts), bw)


def tsum(a, axis=None) -> Tensor:
    a = _const(a)
    out_data = a.data.sum(axis=axis)

    def bw(g, grads):
        if axis is None:
            _accumulate(grads, a, np.broadcast_to(g, a.data.shape).copy())
        else:
            _accumulate(grads, a, np.broadcast_to(np.expand_dims(g, axis), a.data.shape).copy())

    return _make(out_data, (a,), bw)


def tmean(a, axis=None) -> Tensor:
    a = _const(a)
    n = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis), 1.0 / n)


def relu(a) -> Tensor:
    a = _const(a)
    out_data = np.maximum(a.data, 0.0)

    def bw(g, grads):
        _accumulate(grads, a, g * (a.data > 0.0))

    return _make(out_data, (a,), bw)


def sigmoid(a) -> Tensor:
    a = _const(a)
    out_data = 1.0 / (1.0 + np.exp(-a.data))

    def bw(g, grads):
        _accumulate(grads, a, g * out_data * (1.0 - out_data))

    return _make(out_data, (a,), bw)


def tanh(a) -> Tensor:
    a = _const(a)
    out_data = np.tanh(a.data)

    def bw(g, grads):
        _accumulate(grads, a, g * (1.0 - out_data * out_data))

    return _make(out_data, (a,), bw)


def exp(a) -> Tensor:
    a = _const(a)
    out_data = np.exp(a.data)

    def bw(g, grads):
        _accumulate(grads, a, g * out_data)

    return _make(out_data, (a,), bw)


def log_softmax(a, axis=-1) -> Tensor:
    a = _const(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    out_data = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    softmax = np.exp(out_data)

    def bw(g, grads):
        _accumulate(grads, a, g - softmax * g.sum(axis=axis, keepdims=True))

    return _make(out_data, (a,), bw)
