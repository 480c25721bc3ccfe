"""Reverse-mode differentiation of scalar expressions."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .analysis import evaluate_all
from .atoms import index_bounds
from .errors import NonDifferentiableError, ShapeError
from .expression import Expression, Variable, postorder


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    if g.shape == tuple(shape):
        return g
    return np.full(tuple(shape), g.sum())


def _sign_nonzero(kind: str, v: np.ndarray) -> np.ndarray:
    if np.any(v == 0):
        raise NonDifferentiableError(kind, "argument has a zero entry")
    return np.sign(v)


def _unique_arg(kind: str, v: np.ndarray, target: float) -> np.ndarray:
    hits = v == target
    if hits.sum() != 1:
        raise NonDifferentiableError(kind, "tie between entries")
    return hits.astype(float)


def _vjp(node, adj: np.ndarray, vals: Sequence[np.ndarray], out: np.ndarray) -> list[np.ndarray]:
    kind = node.kind
    shapes = [a.shape for a in node.args]
    if kind == "add":
        return [_unbroadcast(adj, s) for s in shapes]
    if kind == "negate":
        return [-adj]
    if kind == "scale":
        return [node.data * adj]
    if kind == "index":
        g = np.zeros(tuple(shapes[0]))
        rows, cols = index_bounds(node.data)
        g[rows, cols] = adj
        return [g]
    if kind == "transpose":
        return [adj.T]
    if kind == "sum":
        return [np.full(tuple(shapes[0]), adj[0, 0])]
    if kind == "matmul":
        a, b = vals
        return [adj @ b.T, a.T @ adj]
    if kind == "multiply":
        a, b = vals
        return [_unbroadcast(adj * b, shapes[0]), _unbroadcast(adj * a, shapes[1])]
    if kind == "conv":
        a, b = (v.ravel(order="F") for v in vals)
        r = adj.ravel()
        ga = np.correlate(r, b, mode="valid")
        gb = np.correlate(r, a, mode="valid")
        return [ga.reshape(tuple(shapes[0]), order="F"), gb.reshape(tuple(shapes[1]), order="F")]
    v = vals[0]
    if kind == "abs":
        return [adj * _sign_nonzero(kind, v)]
    if kind == "square":
        return [2.0 * v * adj]
    if kind == "sum_squares":
        return [2.0 * v * adj[0, 0]]
    if kind == "norm1":
        return [adj[0, 0] * _sign_nonzero(kind, v)]
    if kind in ("norm2", "fro"):
        nrm = out[0, 0]
        if nrm == 0:
            raise NonDifferentiableError(kind, "argument is zero")
        return [adj[0, 0] * v / nrm]
    if kind == "norm_inf":
        a = np.abs(v)
        if a.max() == 0:
            raise NonDifferentiableError(kind, "argument is zero")
        return [adj[0, 0] * np.sign(v) * _unique_arg(kind, a, a.max())]
    if kind == "max_entries":
        return [adj[0, 0] * _unique_arg(kind, v, v.max())]
    if kind == "min_entries":
        return [adj[0, 0] * _unique_arg(kind, v, v.min())]
    if kind == "sqrt":
        if np.any(out <= 0):
            raise NonDifferentiableError(kind, "argument is zero")
        return [adj / (2.0 * out)]
    if kind == "inv_pos":
        return [-adj * out ** 2]
    raise NonDifferentiableError(kind, "no derivative rule")


def gradient(e: Expression, blocks: Sequence[Variable], point: Mapping | None = None) -> list[np.ndarray]:
    """Gradient of scalar ``e`` with respect to each block at ``point``.

    Only atoms on a path from ``e`` to a requested block are differentiated, so
    a kink elsewhere in the tree is harmless.
    """
    if not e.shape.is_scalar:
        raise ShapeError("gradient needs a scalar expression")
    order = list(postorder(e))
    wanted = {b.uid for b in blocks}
    live: set[int] = set()
    for node in order:
        if node.uid in wanted or any(a.uid in live for a in node.args):
            live.add(node.uid)
    vals = evaluate_all([e], point)
    adj: dict[int, np.ndarray] = {e.uid: np.ones((1, 1))}
    for node in reversed(order):
        if node.is_leaf or node.uid not in live or node.uid not in adj:
            continue
        grads = _vjp(node, adj[node.uid], [vals[a.uid] for a in node.args], vals[node.uid])
        for a, g in zip(node.args, grads):
            if a.uid not in live:
                continue
            if a.uid in adj:
                adj[a.uid] = adj[a.uid] + g
            else:
                adj[a.uid] = np.asarray(g, dtype=float)
    return [adj.get(b.uid, np.zeros(tuple(b.shape))) for b in blocks]
