"""Reverse-mode automatic differentiation over numpy arrays.

A `Tensor` wraps an ndarray and remembers how it was produced; `grad`
replays the recorded graph backwards to get exact derivatives of a scalar
with respect to any leaf tensors. The op set is deliberately small: what an
MLP forward pass, its forward-propagated spatial tangents, and mean-square
losses need, nothing more.

Second spatial derivatives of the surrogate are NOT obtained by nesting
tapes: the network propagates coordinate tangents forward using these same
ops, so the tape sees one composite graph and a single reverse sweep yields
exact parameter gradients of any expression built from values, first, and
second spatial derivatives.

Ops between a Tensor and a plain array/scalar lift the latter to a
non-differentiable constant. The module is pure and thread-safe: there is
no global tape, each Tensor carries its own parents.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Tensor", "tensor", "constant", "grad", "matmul", "tanh", "sigmoid", "softplus", "square", "mean"]


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `g` down to `shape`, undoing numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


class Tensor:
    """Array node in a differentiation graph."""

    __slots__ = ("value", "_parents", "_vjps", "requires_grad")

    # keep numpy from consuming Tensors in mixed expressions; our dunders run instead
    __array_ufunc__ = None

    def __init__(self, value, parents=(), vjps=(), requires_grad=False):
        self.value = np.asarray(value, dtype=float)
        self._parents = parents
        self._vjps = vjps
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def __repr__(self):
        return f"Tensor({self.value!r}, requires_grad={self.requires_grad})"

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return Tensor(-self.value, (self,), (lambda g: -g,))

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, key):
        return take(self, key)


def tensor(value) -> Tensor:
    """Differentiable leaf."""
    return Tensor(value, requires_grad=True)


def constant(value) -> Tensor:
    """Non-differentiable wrapper."""
    return Tensor(value)


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(value, parents, vjps) -> Tensor:
    if not any(p.requires_grad for p in parents):
        return Tensor(value)  # nothing upstream to differentiate; drop the graph
    return Tensor(value, parents, vjps)


def add(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    return _node(
        a.value + b.value,
        (a, b),
        (lambda g: _unbroadcast(g, a.value.shape), lambda g: _unbroadcast(g, b.value.shape)),
    )


def sub(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    return _node(
        a.value - b.value,
        (a, b),
        (lambda g: _unbroadcast(g, a.value.shape), lambda g: _unbroadcast(-g, b.value.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    av, bv = a.value, b.value
    return _node(
        av * bv,
        (a, b),
        (lambda g: _unbroadcast(g * bv, av.shape), lambda g: _unbroadcast(g * av, bv.shape)),
    )


def div(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    av, bv = a.value, b.value
    out = av / bv
    return _node(
        out,
        (a, b),
        (lambda g: _unbroadcast(g / bv, av.shape), lambda g: _unbroadcast(-g * out / bv, bv.shape)),
    )


def matmul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    av, bv = a.value, b.value
    return _node(av @ bv, (a, b), (lambda g: g @ bv.T, lambda g: av.T @ g))


def take(a, key) -> Tensor:
    """Differentiable indexing/slicing."""
    a = _lift(a)
    av = a.value

    def vjp(g):
        out = np.zeros_like(av)
        out[key] = g
        return out

    return _node(av[key], (a,), (vjp,))


def square(x):
    if isinstance(x, Tensor):
        xv = x.value
        return _node(xv * xv, (x,), (lambda g: 2.0 * xv * g,))
    return np.square(x)


def tanh(x):
    if isinstance(x, Tensor):
        out = np.tanh(x.value)
        return _node(out, (x,), (lambda g: (1.0 - out * out) * g,))
    return np.tanh(x)


def sigmoid(x):
    if isinstance(x, Tensor):
        out = _sigmoid_np(x.value)
        return _node(out, (x,), (lambda g: out * (1.0 - out) * g,))
    return _sigmoid_np(np.asarray(x, dtype=float))


def softplus(x):
    if isinstance(x, Tensor):
        s = _sigmoid_np(x.value)
        return _node(np.logaddexp(0.0, x.value), (x,), (lambda g: s * g,))
    return np.logaddexp(0.0, np.asarray(x, dtype=float))


def _sigmoid_np(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def mean(x):
    if isinstance(x, Tensor):
        n = x.value.size
        return _node(x.value.mean(), (x,), (lambda g: np.broadcast_to(g / n, x.value.shape).copy(),))
    return np.mean(x)


def grad(loss: Tensor, wrt) -> list[np.ndarray]:
    """Exact gradients of a scalar `loss` with respect to leaf tensors `wrt`.

    Leaves never reached by the graph get zero gradients of their shape.
    """
    if loss.value.ndim != 0:
        raise ValueError("grad expects a scalar loss")
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
    for node in reversed(order):
        g = grads.get(id(node))
        if g is None:
            continue
        for p, vjp in zip(node._parents, node._vjps):
            if not p.requires_grad:
                continue
            contrib = vjp(g)
            acc = grads.get(id(p))
            grads[id(p)] = contrib if acc is None else acc + contrib
    return [grads.get(id(w), np.zeros_like(w.value)) for w in wrt]
