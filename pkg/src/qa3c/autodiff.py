"""A small reverse-mode autodiff over numpy arrays.

Only the node types the actor/critic losses need are provided: linear
layers, the variational circuit, arctan, softmax / log-softmax, log,
square, sum and elementwise arithmetic.  Circuit nodes delegate their
backward pass to the adjoint vector-Jacobian product.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from .exceptions import ConfigurationError, NumericError, UsageError
from .vqc import VqcLayerSpec, vqc_forward, vqc_vjp

GradientBundle = Dict[str, np.ndarray]


@dataclass
class LinearLayer:
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ConfigurationError(
                f"linear layer needs weight (out, in) and bias (out,), got {self.weight.shape} and {self.bias.shape}"
            )

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def n_params(self) -> int:
        return self.weight.size + self.bias.size


def linear_forward(layer: LinearLayer, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != layer.in_dim:
        raise ConfigurationError(f"linear layer expects inputs of length {layer.in_dim}, got shape {x.shape}")
    return x @ layer.weight.T + layer.bias


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=float)
    if np.isnan(z).any():
        raise NumericError("softmax received NaN logits")
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=float)
    if np.isnan(z).any():
        raise NumericError("log_softmax received NaN logits")
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


# ---------------------------------------------------------------------------
# graph


class Node:
    """A value in the computation graph.

    ``parents`` pairs each input node with a function mapping the upstream
    gradient of this node to the gradient contribution for that input.
    """

    __slots__ = ("value", "parents", "name")
    # make numpy defer to Node's reflected operators
    __array_ufunc__ = None

    def __init__(self, value, parents=(), name=None):
        self.value = np.asarray(value, dtype=float)
        self.parents = parents
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, -as_node(other))

    def __rsub__(self, other):
        return add(as_node(other), -self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Node{label}(shape={self.value.shape})"


def parameter(name: str, value) -> Node:
    return Node(value, name=name)


def constant(value) -> Node:
    return Node(value)


def as_node(x) -> Node:
    return x if isinstance(x, Node) else constant(x)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a, b) -> Node:
    a, b = as_node(a), as_node(b)
    return Node(
        a.value + b.value,
        ((a, lambda g: _unbroadcast(g, a.shape)), (b, lambda g: _unbroadcast(g, b.shape))),
    )


def mul(a, b) -> Node:
    a, b = as_node(a), as_node(b)
    av, bv = a.value, b.value
    return Node(
        av * bv,
        ((a, lambda g: _unbroadcast(g * bv, a.shape)), (b, lambda g: _unbroadcast(g * av, b.shape))),
    )


def linear(x, weight: Node, bias: Node) -> Node:
    x = as_node(x)
    if x.shape[-1] != weight.shape[1]:
        raise ConfigurationError(f"linear layer expects inputs of length {weight.shape[1]}, got shape {x.shape}")
    xv, wv = x.value, weight.value
    out = xv @ wv.T + bias.value

    def d_weight(g):
        return g.reshape(-1, g.shape[-1]).T @ xv.reshape(-1, xv.shape[-1])

    def d_bias(g):
        return g.reshape(-1, g.shape[-1]).sum(axis=0)

    return Node(out, ((x, lambda g: g @ wv), (weight, d_weight), (bias, d_bias)))


def vqc(x, weights: Node, n_qubits: int, n_layers: int) -> Node:
    x = as_node(x)
    spec = VqcLayerSpec(n_qubits, n_layers, weights.value)
    out = vqc_forward(spec, x.value)
    cache = {}

    def _vjp(g):
        key = id(g)
        if key not in cache:
            cache.clear()
            cache[key] = (g, vqc_vjp(spec, x.value, g))
        return cache[key][1]

    return Node(out, ((x, lambda g: _vjp(g)[0]), (weights, lambda g: _vjp(g)[1])))


def arctan(x) -> Node:
    x = as_node(x)
    xv = x.value
    return Node(np.arctan(xv), ((x, lambda g: g / (1.0 + xv * xv)),))


def softmax_node(x) -> Node:
    x = as_node(x)
    p = softmax(x.value)

    def d(g):
        return p * (g - np.sum(g * p, axis=-1, keepdims=True))

    return Node(p, ((x, d),))


def log_softmax_node(x) -> Node:
    x = as_node(x)
    lp = log_softmax(x.value)
    p = np.exp(lp)

    def d(g):
        return g - p * np.sum(g, axis=-1, keepdims=True)

    return Node(lp, ((x, d),))


def log(x) -> Node:
    x = as_node(x)
    xv = x.value
    if np.any(xv <= 0):
        raise NumericError("log of a non-positive value")
    return Node(np.log(xv), ((x, lambda g: g / xv),))


def square(x) -> Node:
    x = as_node(x)
    xv = x.value
    return Node(xv * xv, ((x, lambda g: 2.0 * g * xv),))


def total(x) -> Node:
    """Sum of all entries, as a scalar node."""
    x = as_node(x)
    shape = x.shape
    return Node(np.sum(x.value), ((x, lambda g: np.broadcast_to(g, shape)),))


def pick(x, index) -> Node:
    """``x[b, index[b]]`` for a batch of rows."""
    x = as_node(x)
    index = np.asarray(index, dtype=int)
    rows = np.arange(x.shape[0])

    def d(g):
        out = np.zeros(x.shape)
        np.add.at(out, (rows, index), g)
        return out

    return Node(x.value[rows, index], ((x, d),))


def column(x, j: int) -> Node:
    x = as_node(x)

    def d(g):
        out = np.zeros(x.shape)
        out[..., j] = g
        return out

    return Node(x.value[..., j], ((x, d),))


def backward(root: Node) -> GradientBundle:
    """Gradients of a scalar ``root`` for every named parameter node feeding it."""
    if root.value.size != 1 or root.value.ndim != 0:
        raise UsageError(f"backward needs a scalar root, got shape {root.value.shape}")
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))

    grads = {id(root): np.ones(())}
    bundle: GradientBundle = {}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.name is not None:
            bundle[node.name] = bundle.get(node.name, 0.0) + g
        for parent, vjp in node.parents:
            contrib = np.asarray(vjp(g), dtype=float)
            prev = grads.get(id(parent))
            grads[id(parent)] = contrib if prev is None else prev + contrib
    return bundle


Loss = Callable[..., Node]
