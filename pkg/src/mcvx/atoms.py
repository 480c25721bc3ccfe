"""Atom library: shape, sign, curvature and monotonicity metadata plus numerics.

Nothing here knows about expression trees; :mod:`mcvx.expression` looks atoms
up by ``kind`` in :data:`ATOMS`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .errors import DomainError, ShapeError, UnknownAtomError
from .lattice import Sign

# sqrt arguments within this distance below zero are clipped instead of raising;
# solver output sits on the boundary only up to the default solver tolerance.
DOMAIN_TOL = 1e-6


class Shape(tuple):
    """(rows, cols); scalars are 1x1 and vectors n x 1."""

    __slots__ = ()

    def __new__(cls, rows: int, cols: int = 1):
        rows, cols = int(rows), int(cols)
        if rows < 1 or cols < 1:
            raise ShapeError(f"invalid shape ({rows}, {cols})")
        return super().__new__(cls, (rows, cols))

    @property
    def rows(self) -> int:
        return self[0]

    @property
    def cols(self) -> int:
        return self[1]

    @property
    def size(self) -> int:
        return self[0] * self[1]

    @property
    def is_scalar(self) -> bool:
        return self[0] == 1 and self[1] == 1

    @property
    def is_vector(self) -> bool:
        return self[0] == 1 or self[1] == 1

    def __repr__(self) -> str:
        return f"Shape({self[0]}, {self[1]})"

    @classmethod
    def of(cls, value) -> "Shape":
        if isinstance(value, Shape):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(value, 1)
        value = tuple(value)
        if len(value) == 0:
            return cls(1, 1)
        if len(value) == 1:
            return cls(value[0], 1)
        if len(value) == 2:
            return cls(*value)
        raise ShapeError(f"only 2-D shapes are supported, got {value}")


class Mono(enum.Enum):
    NONDECREASING = "nondecreasing"
    NONINCREASING = "nonincreasing"
    BOTH = "both"  # argument is identically zero
    NONE = "none"

    @property
    def nondecreasing(self) -> bool:
        return self in (Mono.NONDECREASING, Mono.BOTH)

    @property
    def nonincreasing(self) -> bool:
        return self in (Mono.NONINCREASING, Mono.BOTH)


def _mono_from_sign(s: Sign) -> Mono:
    return {Sign.POSITIVE: Mono.NONDECREASING, Sign.NEGATIVE: Mono.NONINCREASING,
            Sign.ZERO: Mono.BOTH, Sign.UNKNOWN: Mono.NONE}[s]


@dataclass(frozen=True)
class AtomSpec:
    kind: str
    arity: int | None  # None: two or more
    curvature: str  # affine | convex | concave | multiconvex
    shape: Callable[[Sequence[Shape], Any], Shape]
    sign: Callable[[Sequence[Sign], Any], Sign]
    monotonicity: Callable[[int, Sequence[Sign], Any], Mono]
    numeric: Callable[[Sequence[np.ndarray], Any], np.ndarray]
    graph: str
    differentiable: bool = True

    @property
    def multiconvex(self) -> bool:
        return self.curvature == "multiconvex"


# -- shape rules -------------------------------------------------------------

def _same_shape(shapes, data):
    return shapes[0]


def _scalar_shape(shapes, data):
    return Shape(1, 1)


def _broadcast_shape(shapes, data):
    out = None
    for s in shapes:
        if s.is_scalar:
            continue
        if out is None:
            out = s
        elif s != out:
            raise ShapeError(f"incompatible shapes {tuple(out)} and {tuple(s)}")
    return out if out is not None else Shape(1, 1)


def _matmul_shape(shapes, data):
    a, b = shapes
    if a.cols != b.rows:
        raise ShapeError(f"matmul of {tuple(a)} and {tuple(b)}")
    return Shape(a.rows, b.cols)


def _conv_shape(shapes, data):
    a, b = shapes
    if not (a.is_vector and b.is_vector):
        raise ShapeError("convolution needs vector arguments")
    return Shape(a.size + b.size - 1, 1)


def _transpose_shape(shapes, data):
    return Shape(shapes[0].cols, shapes[0].rows)


def _vector_scalar_shape(shapes, data):
    if not shapes[0].is_vector:
        raise ShapeError("norm2 needs a vector argument; use fro for matrices")
    return Shape(1, 1)


def index_bounds(data) -> tuple[slice, slice]:
    (r0, r1, rs), (c0, c1, cs) = data
    return slice(r0, r1, rs), slice(c0, c1, cs)


def _index_shape(shapes, data):
    rows, cols = index_bounds(data)
    n_r = len(range(*rows.indices(shapes[0].rows)))
    n_c = len(range(*cols.indices(shapes[0].cols)))
    if n_r == 0 or n_c == 0:
        raise ShapeError("empty index")
    return Shape(n_r, n_c)


# -- sign rules --------------------------------------------------------------

def _sign_same(signs, data):
    return signs[0]


def _sign_sum(signs, data):
    out = Sign.ZERO
    for s in signs:
        out = out + s
    return out


def _sign_product(signs, data):
    out = Sign.POSITIVE
    for s in signs:
        out = out * s
    return out


def _sign_neg(signs, data):
    return -signs[0]


def _sign_scale(signs, data):
    return Sign.of_value(data) * signs[0]


def _sign_positive(signs, data):
    return Sign.POSITIVE


# -- monotonicity ------------------------------------------------------------

def _mono_inc(i, signs, data):
    return Mono.NONDECREASING


def _mono_dec(i, signs, data):
    return Mono.NONINCREASING


def _mono_abs_like(i, signs, data):
    return _mono_from_sign(signs[i])


def _mono_scale(i, signs, data):
    return _mono_from_sign(Sign.of_value(data))


def _mono_product(i, signs, data):
    other = Sign.POSITIVE
    for j, s in enumerate(signs):
        if j != i:
            other = other * s
    return _mono_from_sign(other)


# -- numerics ----------------------------------------------------------------

def _num_add(vals, data):
    out = vals[0]
    for v in vals[1:]:
        out = out + v
    return np.asarray(out, dtype=float)


def _num_index(vals, data):
    rows, cols = index_bounds(data)
    return vals[0][rows, cols]


def _num_conv(vals, data):
    return np.convolve(vals[0].ravel(order="F"), vals[1].ravel(order="F")).reshape(-1, 1)


def _num_sqrt(vals, data):
    v = vals[0]
    if np.any(v < -DOMAIN_TOL):
        raise DomainError("sqrt", f"argument min {v.min():.3g} < 0")
    return np.sqrt(np.maximum(v, 0.0))


def _num_inv_pos(vals, data):
    v = vals[0]
    if np.any(v <= 0):
        raise DomainError("inv_pos", f"argument min {v.min():.3g} <= 0")
    return 1.0 / v


def _s(x) -> np.ndarray:
    return np.array([[float(x)]])


ATOMS: dict[str, AtomSpec] = {}


def _register(*specs: AtomSpec) -> None:
    for spec in specs:
        ATOMS[spec.kind] = spec


_register(
    AtomSpec("add", None, "affine", _broadcast_shape, _sign_sum, _mono_inc, _num_add, "add"),
    AtomSpec("negate", 1, "affine", _same_shape, _sign_neg, _mono_dec,
             lambda v, d: -v[0], "negate"),
    AtomSpec("scale", 1, "affine", _same_shape, _sign_scale, _mono_scale,
             lambda v, d: d * v[0], "scale"),
    AtomSpec("index", 1, "affine", _index_shape, _sign_same, _mono_inc, _num_index, "index"),
    AtomSpec("transpose", 1, "affine", _transpose_shape, _sign_same, _mono_inc,
             lambda v, d: v[0].T, "transpose"),
    AtomSpec("sum", 1, "affine", _scalar_shape, _sign_same, _mono_inc,
             lambda v, d: _s(v[0].sum()), "sum"),
    AtomSpec("matmul", 2, "multiconvex", _matmul_shape, _sign_product, _mono_product,
             lambda v, d: v[0] @ v[1], "matmul"),
    AtomSpec("multiply", 2, "multiconvex", _broadcast_shape, _sign_product, _mono_product,
             lambda v, d: v[0] * v[1], "multiply"),
    AtomSpec("conv", 2, "multiconvex", _conv_shape, _sign_product, _mono_product,
             _num_conv, "conv"),
    AtomSpec("abs", 1, "convex", _same_shape, _sign_positive, _mono_abs_like,
             lambda v, d: np.abs(v[0]), "abs", differentiable=False),
    AtomSpec("square", 1, "convex", _same_shape, _sign_positive, _mono_abs_like,
             lambda v, d: v[0] ** 2, "square"),
    AtomSpec("sum_squares", 1, "convex", _scalar_shape, _sign_positive, _mono_abs_like,
             lambda v, d: _s(np.sum(v[0] ** 2)), "sum_squares"),
    AtomSpec("norm1", 1, "convex", _scalar_shape, _sign_positive, _mono_abs_like,
             lambda v, d: _s(np.abs(v[0]).sum()), "norm1", differentiable=False),
    AtomSpec("norm2", 1, "convex", _vector_scalar_shape, _sign_positive, _mono_abs_like,
             lambda v, d: _s(np.linalg.norm(v[0])), "norm2", differentiable=False),
    AtomSpec("norm_inf", 1, "convex", _scalar_shape, _sign_positive, _mono_abs_like,
             lambda v, d: _s(np.abs(v[0]).max()), "norm_inf", differentiable=False),
    AtomSpec("fro", 1, "convex", _scalar_shape, _sign_positive, _mono_abs_like,
             lambda v, d: _s(np.linalg.norm(v[0])), "norm2", differentiable=False),
    AtomSpec("max_entries", 1, "convex", _scalar_shape, _sign_same, _mono_inc,
             lambda v, d: _s(v[0].max()), "max_entries", differentiable=False),
    AtomSpec("min_entries", 1, "concave", _scalar_shape, _sign_same, _mono_inc,
             lambda v, d: _s(v[0].min()), "min_entries", differentiable=False),
    AtomSpec("sqrt", 1, "concave", _same_shape, _sign_positive, _mono_inc, _num_sqrt, "sqrt"),
    AtomSpec("inv_pos", 1, "convex", _same_shape, _sign_positive, _mono_dec,
             _num_inv_pos, "inv_pos"),
)


def get_spec(kind: str) -> AtomSpec:
    try:
        return ATOMS[kind]
    except KeyError:
        raise UnknownAtomError(kind) from None
