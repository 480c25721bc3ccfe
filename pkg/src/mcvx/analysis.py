"""Signed DCP analysis and numeric evaluation."""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from .atoms import Mono
from .errors import ShapeError, UnboundError
from .expression import Atom, Constant, Expression, Variable, as_array, postorder
from .lattice import Curvature, Sign


def sign_of(e: Expression) -> Sign:
    return e.sign


def _fixed_ids(fixed: Iterable | None) -> frozenset[int]:
    if not fixed:
        return frozenset()
    return frozenset(v.uid if isinstance(v, Variable) else int(v) for v in fixed)


def atom_curvature(node: Atom, arg_curvs) -> Curvature:
    """Apply the signed DCP composition rule at one atom node."""
    if all(c is Curvature.CONSTANT for c in arg_curvs):
        return Curvature.CONSTANT
    spec = node.spec
    if spec.multiconvex:
        if sum(c is not Curvature.CONSTANT for c in arg_curvs) > 1:
            return Curvature.UNKNOWN
        kind = "affine"
    else:
        kind = spec.curvature
    convex_ok = kind in ("affine", "convex")
    concave_ok = kind in ("affine", "concave")
    signs = None
    for i, c in enumerate(arg_curvs):
        if c is Curvature.CONSTANT or c is Curvature.AFFINE:
            continue
        if c is Curvature.UNKNOWN:
            return Curvature.UNKNOWN
        if signs is None:
            signs = [a.sign for a in node.args]
        m: Mono = spec.monotonicity(i, signs, node.data)
        if c is Curvature.CONVEX:
            convex_ok = convex_ok and m.nondecreasing
            concave_ok = concave_ok and m.nonincreasing
        else:
            convex_ok = convex_ok and m.nonincreasing
            concave_ok = concave_ok and m.nondecreasing
    if convex_ok and concave_ok:
        return Curvature.AFFINE
    if convex_ok:
        return Curvature.CONVEX
    if concave_ok:
        return Curvature.CONCAVE
    return Curvature.UNKNOWN


def curvatures(nodes: Iterable[Expression], fixed: Iterable | None = None) -> dict[int, Curvature]:
    """Curvature of every node in a children-first node sequence.

    Variables listed in ``fixed`` are treated as parameters of the same sign,
    which is exactly what fixing does to the analysis.
    """
    fixed_ids = _fixed_ids(fixed)
    out: dict[int, Curvature] = {}
    for node in nodes:
        if isinstance(node, Variable):
            out[node.uid] = Curvature.CONSTANT if node.uid in fixed_ids else Curvature.AFFINE
        elif node.is_leaf:
            out[node.uid] = Curvature.CONSTANT
        else:
            out[node.uid] = atom_curvature(node, [out[a.uid] for a in node.args])
    return out


def curvature_of(e: Expression, fixed: Iterable | None = None) -> Curvature:
    return curvatures(postorder(e), fixed)[e.uid]


def _leaf_value(node, bindings: Mapping | None):
    if bindings is not None and node in bindings:
        return as_array(bindings[node], node.shape)
    if isinstance(node, Constant):
        return node.value
    if node.value is None:
        raise UnboundError(f"{node.kind} {node.name!r} has no value")
    return node.value


def evaluate_all(roots: Iterable[Expression], bindings: Mapping | None = None) -> dict[int, np.ndarray]:
    """Values of every node reachable from ``roots`` keyed by uid."""
    vals: dict[int, np.ndarray] = {}
    for node in postorder(*roots):
        if node.is_leaf:
            vals[node.uid] = _leaf_value(node, bindings)
        else:
            v = node.spec.numeric([vals[a.uid] for a in node.args], node.data)
            v = np.asarray(v, dtype=float)
            if v.shape != tuple(node.shape):
                v = np.broadcast_to(v, tuple(node.shape)).copy()
            vals[node.uid] = v
    return vals


def evaluate(e: Expression, bindings: Mapping | None = None) -> np.ndarray:
    """Numeric value of ``e``. ``bindings`` maps Variables (and optionally
    Parameters) to values; otherwise leaf ``.value`` attributes are used."""
    return evaluate_all([e], bindings)[e.uid]


def check_shape(value, e: Expression) -> np.ndarray:
    arr = as_array(value)
    if arr.shape != tuple(e.shape):
        raise ShapeError(f"expected shape {tuple(e.shape)}, got {arr.shape}")
    return arr
