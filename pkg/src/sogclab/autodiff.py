"""Minimal tape-based reverse-mode differentiation over matrices.

A :class:`Tape` records operations in construction order together with their
forward values; :func:`backward` walks the tape once in reverse and
accumulates adjoints into every parameter leaf. Shapes are fixed and checked
when an op is recorded, never during the backward pass. A tape is single-use:
build, run backward, discard.

Backward rules worth noting:
  * relu passes gradient only through strictly positive entries (the
    subgradient at exactly zero is taken as zero);
  * aggregate is self-adjoint because the normalized adjacency is symmetric;
  * mae_loss backprops sign(pred - target) / count;
  * add supports a (1, C) bias row against an (N, C) matrix, summing the
    gradient over rows on the broadcast side.

All arithmetic is float64 and runs in recorded order, so gradients are
bit-identical between runs of the same tape.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import Graph, aggregate_once


@dataclass(frozen=True, eq=False)
class Var:
    """Handle to one tape node; shape is fixed at creation."""

    tape: "Tape" = field(repr=False)
    index: int

    @property
    def value(self) -> np.ndarray:
        return self.tape.values[self.index]

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def __eq__(self, other):
        return (
            isinstance(other, Var)
            and other.tape is self.tape
            and other.index == self.index
        )

    def __hash__(self):
        return hash((id(self.tape), self.index))


class Tape:
    """Append-only operation record; inputs always precede consumers."""

    def __init__(self):
        self.ops: list[tuple] = []  # (opname, parent indices, aux)
        self.values: list[np.ndarray] = []
        self.parameters: list[Var] = []

    def _push(self, op: str, parents: tuple[int, ...], value: np.ndarray,
              aux=None) -> Var:
        self.ops.append((op, parents, aux))
        self.values.append(value)
        return Var(self, len(self.values) - 1)

    def const(self, value) -> Var:
        """Leaf that receives no gradient (inputs, targets)."""
        return self._push("leaf", (), _as_matrix(value))

    def param(self, value) -> Var:
        """Leaf whose gradient is accumulated and reported by backward()."""
        var = self._push("leaf", (), _as_matrix(value))
        self.parameters.append(var)
        return var


def _as_matrix(value) -> np.ndarray:
    a = np.asarray(value, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    return a


def _same_tape(*vars_: Var) -> Tape:
    tape = vars_[0].tape
    for v in vars_[1:]:
        if v.tape is not tape:
            raise ValueError("operands belong to different tapes")
    return tape


def matmul(a: Var, b: Var) -> Var:
    tape = _same_tape(a, b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch {a.shape} @ {b.shape}")
    return tape._push("matmul", (a.index, b.index), a.value @ b.value)


def add(a: Var, b: Var) -> Var:
    """Elementwise sum; also accepts a (1, C) row against an (N, C) matrix."""
    tape = _same_tape(a, b)
    sa, sb = a.shape, b.shape
    ok = sa == sb or (sa[1] == sb[1] and (sa[0] == 1 or sb[0] == 1))
    if not ok:
        raise ValueError(f"add shape mismatch {sa} + {sb}")
    return tape._push("add", (a.index, b.index), a.value + b.value)


def scale(a: Var, r: float) -> Var:
    return a.tape._push("scale", (a.index,), float(r) * a.value, aux=float(r))


def hadamard(a: Var, b: Var) -> Var:
    """Elementwise product; one side may be a (1, 1) scalar multiplier."""
    tape = _same_tape(a, b)
    if a.shape != b.shape and (1, 1) not in (a.shape, b.shape):
        raise ValueError(f"hadamard shape mismatch {a.shape} * {b.shape}")
    return tape._push("hadamard", (a.index, b.index), a.value * b.value)


def relu(a: Var) -> Var:
    return a.tape._push("relu", (a.index,), np.maximum(a.value, 0.0))


def sigmoid(a: Var) -> Var:
    v = a.value
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return a.tape._push("sigmoid", (a.index,), out)


def tanh(a: Var) -> Var:
    return a.tape._push("tanh", (a.index,), np.tanh(a.value))


def one_minus(a: Var) -> Var:
    return a.tape._push("one_minus", (a.index,), 1.0 - a.value)


def aggregate(graph: Graph, a: Var) -> Var:
    if a.shape[0] != graph.num_nodes:
        raise ValueError(
            f"signal has {a.shape[0]} rows, graph has {graph.num_nodes} nodes"
        )
    return a.tape._push("aggregate", (a.index,), aggregate_once(graph, a.value),
                        aux=graph)


def sum_rows(a: Var) -> Var:
    """Column-wise sum over nodes: (N, C) -> (1, C). Permutation invariant."""
    return a.tape._push("sum_rows", (a.index,), a.value.sum(axis=0, keepdims=True))


def mae_loss(pred: Var, target) -> Var:
    t = _as_matrix(target)
    if pred.shape != t.shape:
        raise ValueError(f"loss shape mismatch {pred.shape} vs {t.shape}")
    v = np.abs(pred.value - t).mean()
    return pred.tape._push("mae", (pred.index,), np.asarray([[v]]), aux=t)


def mse_loss(pred: Var, target) -> Var:
    """Mean squared error; smooth companion of mae_loss for gradient checks."""
    t = _as_matrix(target)
    if pred.shape != t.shape:
        raise ValueError(f"loss shape mismatch {pred.shape} vs {t.shape}")
    d = pred.value - t
    v = (d * d).mean()
    return pred.tape._push("mse", (pred.index,), np.asarray([[v]]), aux=t)


def backward(tape: Tape, loss: Var) -> dict[Var, np.ndarray]:
    """Gradients of the scalar ``loss`` with respect to every parameter leaf."""
    if loss.tape is not tape:
        raise ValueError("loss does not belong to this tape")
    if loss.shape != (1, 1):
        raise ValueError(f"loss must be 1x1, got shape {loss.shape}")
    adj: dict[int, np.ndarray] = {loss.index: np.ones((1, 1))}
    for idx in range(loss.index, -1, -1):
        g = adj.pop(idx, None)
        if g is None:
            continue
        op, parents, aux = tape.ops[idx]
        if op == "leaf":
            adj[idx] = g  # keep parameter gradients around
            continue

        def _acc(parent: int, grad: np.ndarray):
            if parent in adj:
                adj[parent] = adj[parent] + grad
            else:
                adj[parent] = grad

        if op == "matmul":
            ia, ib = parents
            _acc(ia, g @ tape.values[ib].T)
            _acc(ib, tape.values[ia].T @ g)
        elif op == "add":
            for i in parents:
                if tape.values[i].shape[0] == 1 and g.shape[0] > 1:
                    _acc(i, g.sum(axis=0, keepdims=True))
                else:
                    _acc(i, g)
        elif op == "scale":
            _acc(parents[0], aux * g)
        elif op == "hadamard":
            ia, ib = parents
            for i, j in ((ia, ib), (ib, ia)):
                grad = g * tape.values[j]
                if tape.values[i].shape == (1, 1) and grad.shape != (1, 1):
                    grad = grad.sum().reshape(1, 1)
                _acc(i, grad)
        elif op == "relu":
            ia = parents[0]
            _acc(ia, g * (tape.values[ia] > 0.0))
        elif op == "sigmoid":
            s = tape.values[idx]
            _acc(parents[0], g * s * (1.0 - s))
        elif op == "tanh":
            t = tape.values[idx]
            _acc(parents[0], g * (1.0 - t * t))
        elif op == "one_minus":
            _acc(parents[0], -g)
        elif op == "aggregate":
            _acc(parents[0], aggregate_once(aux, g))
        elif op == "sum_rows":
            ia = parents[0]
            _acc(ia, np.broadcast_to(g, tape.values[ia].shape).copy())
        elif op == "mae":
            ia = parents[0]
            d = tape.values[ia] - aux
            _acc(ia, g[0, 0] * np.sign(d) / d.size)
        elif op == "mse":
            ia = parents[0]
            d = tape.values[ia] - aux
            _acc(ia, g[0, 0] * 2.0 * d / d.size)
        else:  # pragma: no cover
            raise AssertionError(f"unknown op {op}")
    return {p: adj.get(p.index, np.zeros_like(p.value)) for p in tape.parameters}
