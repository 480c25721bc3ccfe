"""Expression trees over variables, parameters and constants.

Trees are immutable once built. Variable values are never stored in the tree
for analysis purposes; numeric routines take explicit bindings.
"""

from __future__ import annotations

import itertools
import numbers
from typing import Iterator, Sequence

import numpy as np

from .atoms import Shape, get_spec
from .errors import ShapeError
from .lattice import Sign

_uid = itertools.count()


def as_array(value, shape: Shape | None = None) -> np.ndarray:
    """Coerce a scalar / 1-D / 2-D value to a float 2-D array (vectors as columns)."""
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise ShapeError(f"expected at most 2 dimensions, got {arr.ndim}")
    if shape is not None and arr.shape != tuple(shape):
        if arr.size == shape.size and shape.is_vector and arr.shape[0] * arr.shape[1] == arr.size \
                and 1 in arr.shape:
            arr = arr.reshape(tuple(shape))
        else:
            raise ShapeError(f"value of shape {arr.shape} does not fit {tuple(shape)}")
    return arr


class Expression:
    """Base class of every node. Supports numpy-like operator overloading:
    ``*`` is elementwise (scalars broadcast) and ``@`` is matrix product."""

    __array_ufunc__ = None  # make numpy defer to our reflected operators
    __slots__ = ("shape", "sign", "args", "uid")

    kind = "expression"

    def __init__(self, shape: Shape, sign: Sign, args: tuple = ()):
        self.shape = shape
        self.sign = sign
        self.args = args
        self.uid = next(_uid)

    __hash__ = object.__hash__

    @property
    def size(self) -> int:
        return self.shape.size

    @property
    def is_leaf(self) -> bool:
        return not self.args

    # -- operators -------------------------------------------------------
    def __add__(self, other):
        return apply_atom("add", [self, wrap(other)])

    def __radd__(self, other):
        return apply_atom("add", [wrap(other), self])

    def __sub__(self, other):
        return apply_atom("add", [self, -wrap(other)])

    def __rsub__(self, other):
        return apply_atom("add", [wrap(other), -self])

    def __neg__(self):
        return apply_atom("negate", [self])

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, numbers.Real):
            return apply_atom("scale", [self], float(other))
        return apply_atom("multiply", [self, wrap(other)])

    def __rmul__(self, other):
        if isinstance(other, numbers.Real):
            return apply_atom("scale", [self], float(other))
        return apply_atom("multiply", [wrap(other), self])

    def __truediv__(self, other):
        if isinstance(other, numbers.Real):
            return apply_atom("scale", [self], 1.0 / float(other))
        if isinstance(other, Constant) and other.shape.is_scalar:
            return apply_atom("scale", [self], 1.0 / float(other.value[0, 0]))
        return NotImplemented

    def __matmul__(self, other):
        other = wrap(other)
        if self.shape.is_scalar or other.shape.is_scalar:
            return apply_atom("multiply", [self, other])
        return apply_atom("matmul", [self, other])

    def __rmatmul__(self, other):
        return wrap(other).__matmul__(self)

    def __getitem__(self, key):
        return apply_atom("index", [self], normalize_key(key, self.shape))

    @property
    def T(self):
        return apply_atom("transpose", [self])

    # constraints
    def __le__(self, other):
        from .problem import Inequality
        return Inequality(self - wrap(other))

    def __ge__(self, other):
        from .problem import Inequality
        return Inequality(wrap(other) - self)

    def __eq__(self, other):  # type: ignore[override]
        from .problem import Equality
        return Equality(self - wrap(other))

    def variables(self) -> list["Variable"]:
        """Variables reachable from this node, in declaration order."""
        found = {n.uid: n for n in postorder(self) if isinstance(n, Variable)}
        return [found[k] for k in sorted(found)]

    def parameters(self) -> list["Parameter"]:
        found = {n.uid: n for n in postorder(self) if isinstance(n, Parameter)}
        return [found[k] for k in sorted(found)]

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.kind} {tuple(self.shape)} {self.sign.value}>"


class Leaf(Expression):
    __slots__ = ()


class Variable(Leaf):
    """A decision variable block. ``sign`` is an attribute that the solver
    enforces as a hard domain constraint."""

    __slots__ = ("name", "value")
    kind = "variable"

    def __init__(self, shape=1, name: str | None = None, sign=None, value=None):
        shape = Shape.of(shape)
        super().__init__(shape, Sign.parse(sign))
        self.name = name if name is not None else f"var{self.uid}"
        self.value = None if value is None else as_array(value, shape)

    def __repr__(self) -> str:
        return f"Variable({self.name!r}, {tuple(self.shape)}, sign={self.sign.value})"


class Parameter(Leaf):
    """A constant of known sign whose value may be (re)bound at any time."""

    __slots__ = ("name", "_value")
    kind = "parameter"

    def __init__(self, shape=1, name: str | None = None, sign=None, value=None):
        shape = Shape.of(shape)
        super().__init__(shape, Sign.parse(sign))
        self.name = name if name is not None else f"param{self.uid}"
        self._value = None
        if value is not None:
            self.value = value

    @property
    def value(self):
        return self._value

    @value.setter
    def value(self, val):
        if val is None:
            self._value = None
            return
        arr = as_array(val, self.shape)
        if not (Sign.of_value(arr) <= self.sign):
            raise ValueError(f"value violates the {self.sign.value} sign of {self.name}")
        self._value = arr

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, {tuple(self.shape)}, sign={self.sign.value})"


class Constant(Leaf):
    __slots__ = ("value",)
    kind = "constant"

    def __init__(self, value):
        arr = as_array(value)
        arr.setflags(write=False)
        super().__init__(Shape(*arr.shape), Sign.of_value(arr))
        self.value = arr

    def __repr__(self) -> str:
        if self.shape.is_scalar:
            return f"Constant({self.value[0, 0]:g})"
        return f"Constant({tuple(self.shape)})"


class Atom(Expression):
    __slots__ = ("spec", "data")

    def __init__(self, spec, args: tuple, data=None):
        shape = spec.shape([a.shape for a in args], data)
        sign = spec.sign([a.sign for a in args], data)
        super().__init__(shape, sign, args)
        self.spec = spec
        self.data = data

    @property
    def kind(self) -> str:  # type: ignore[override]
        return self.spec.kind


def wrap(value) -> Expression:
    if isinstance(value, Expression):
        return value
    return Constant(value)


def apply_atom(kind: str, children: Sequence, data=None) -> Expression:
    """Build an atom node, checking arity and shape rules."""
    spec = get_spec(kind)
    args = tuple(wrap(c) for c in children)
    if spec.arity is None:
        if len(args) < 2:
            raise ShapeError(f"{kind} needs at least two arguments")
    elif len(args) != spec.arity:
        raise ShapeError(f"{kind} takes {spec.arity} argument(s), got {len(args)}")
    return Atom(spec, args, data)


def normalize_key(key, shape: Shape):
    """Turn a numpy-style key into ((r0, r1, rs), (c0, c1, cs)); ints keep a dim of 1."""
    if not isinstance(key, tuple):
        key = (key, slice(None)) if shape.cols > 1 and shape.rows > 1 else (
            (key, 0) if shape.cols == 1 else (0, key))
    if len(key) != 2:
        raise ShapeError("index must have at most two components")
    out = []
    for k, n in zip(key, shape):
        if isinstance(k, (int, np.integer)):
            k = int(k)
            if not -n <= k < n:
                raise IndexError(f"index {k} out of range for size {n}")
            k = k % n
            out.append((k, k + 1, 1))
        elif isinstance(k, slice):
            start, stop, step = k.indices(n)
            if step < 0:
                raise ShapeError("negative slice steps are not supported")
            out.append((start, stop, step))
        else:
            raise ShapeError(f"unsupported index component {k!r}")
    return tuple(out)


def postorder(*roots: Expression) -> Iterator[Expression]:
    """Yield every distinct node reachable from ``roots``, children first.

    Iterative, so arbitrarily deep chains are fine.
    """
    seen: set[int] = set()
    for root in roots:
        if root.uid in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                yield node
                continue
            if node.uid in seen:
                continue
            seen.add(node.uid)
            stack.append((node, True))
            for child in reversed(node.args):
                if child.uid not in seen:
                    stack.append((child, False))
