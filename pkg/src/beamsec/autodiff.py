"""Tape-based reverse-mode automatic differentiation over float64 numpy arrays.

Supports exactly the primitives an MLP needs: matmul, row-broadcast bias add,
relu, tanh, temperature softmax, and MSE loss. A Graph instance is single-use:
build the forward pass eagerly (ops record themselves on the tape), then call
``backward()`` once.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


class Node:
    """One tape entry: cached forward value plus vector-Jacobian products."""

    __slots__ = ("value", "parents", "vjps", "grad")

    def __init__(self, value: np.ndarray, parents=(), vjps=()):
        self.value = value
        self.parents = parents
        self.vjps = vjps  # one callable per parent: upstream grad -> parent grad
        self.grad = None


def _as_f64(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    return a


class Graph:
    """Single-use computation tape (single-threaded; see module docstring)."""

    def __init__(self):
        self._tape: list[Node] = []
        self._backward_done = False

    def _record(self, node: Node) -> Node:
        self._tape.append(node)
        return node

    def leaf(self, value, name: str = "leaf") -> Node:
        a = _as_f64(value)
        if not np.all(np.isfinite(a)):
            raise ValueError(f"non-finite values in {name}")
        return self._record(Node(a))

    def matmul(self, a: Node, b: Node) -> Node:
        if a.value.shape[1] != b.value.shape[0]:
            raise ValueError(
                f"matmul dimension mismatch: ({a.value.shape[0]}x{a.value.shape[1]}) "
                f"@ ({b.value.shape[0]}x{b.value.shape[1]})"
            )
        out = a.value @ b.value
        return self._record(Node(
            out,
            parents=(a, b),
            vjps=(lambda g: g @ b.value.T, lambda g: a.value.T @ g),
        ))

    def add_bias(self, x: Node, b: Node) -> Node:
        if b.value.shape != (1, x.value.shape[1]):
            raise ValueError(
                f"bias shape {b.value.shape} incompatible with activations "
                f"of width {x.value.shape[1]}"
            )
        return self._record(Node(
            x.value + b.value,
            parents=(x, b),
            vjps=(lambda g: g, lambda g: g.sum(axis=0, keepdims=True)),
        ))

    def relu(self, x: Node) -> Node:
        # subgradient at 0 fixed to 0
        mask = x.value > 0.0
        return self._record(Node(
            np.where(mask, x.value, 0.0),
            parents=(x,),
            vjps=(lambda g: g * mask,),
        ))

    def tanh(self, x: Node) -> Node:
        t = np.tanh(x.value)
        return self._record(Node(
            t,
            parents=(x,),
            vjps=(lambda g: g * (1.0 - t * t),),
        ))

    def softmax_t(self, x: Node, temperature: float) -> Node:
        """Row-wise softmax of logits divided by ``temperature``.

        Computed with max-subtraction so large logits over small temperatures
        do not overflow.
        """
        if temperature <= 0.0:
            raise ValueError(f"temperature must be positive, got {temperature}")
        z = x.value / temperature
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        p = e / e.sum(axis=1, keepdims=True)

        def vjp(g):
            inner = (g * p).sum(axis=1, keepdims=True)
            return p * (g - inner) / temperature

        return self._record(Node(p, parents=(x,), vjps=(vjp,)))

    def mse(self, pred: Node, target: Node) -> Node:
        if pred.value.shape != target.value.shape:
            raise ValueError(
                f"mse shape mismatch: prediction {pred.value.shape} "
                f"vs target {target.value.shape}"
            )
        diff = pred.value - target.value
        n = diff.size
        out = np.array([[np.mean(diff * diff)]])
        return self._record(Node(
            out,
            parents=(pred, target),
            vjps=(
                lambda g: g[0, 0] * 2.0 * diff / n,
                lambda g: g[0, 0] * -2.0 * diff / n,
            ),
        ))

    def backward(self, loss: Node) -> None:
        """Accumulate gradients of the scalar ``loss`` into every tape node."""
        if not self._tape:
            raise RuntimeError("backward called on an empty graph")
        if loss.value.size != 1:
            raise ValueError("backward requires a scalar loss node")
        if self._backward_done:
            raise RuntimeError("graph is single-use: backward already ran")
        self._backward_done = True
        for node in self._tape:
            node.grad = np.zeros_like(node.value)
        loss.grad = np.ones_like(loss.value)
        for node in reversed(self._tape):
            if node.grad is None or not node.vjps:
                continue
            for parent, vjp in zip(node.parents, node.vjps):
                parent.grad = parent.grad + vjp(node.grad)


def finite_difference_gradient(f: Callable[[np.ndarray], float],
                               x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient estimate of a scalar function, coordinate-wise."""
    if h <= 0.0:
        raise ValueError(f"step must be positive, got {h}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        xp = x.copy().reshape(-1)
        xm = x.copy().reshape(-1)
        xp[i] += h
        xm[i] -= h
        fp = f(xp.reshape(x.shape))
        fm = f(xm.reshape(x.shape))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"non-finite function value while probing coordinate {i}")
        flat[i] = (fp - fm) / (2.0 * h)
    return grad
