"""User-facing atom constructors."""

from __future__ import annotations

from .expression import Expression, apply_atom, wrap


def abs(x) -> Expression:  # noqa: A001 - mirrors the modeling vocabulary
    return apply_atom("abs", [x])


def square(x) -> Expression:
    return apply_atom("square", [x])


def sum_squares(x) -> Expression:
    return apply_atom("sum_squares", [x])


def sqrt(x) -> Expression:
    return apply_atom("sqrt", [x])


def inv_pos(x) -> Expression:
    return apply_atom("inv_pos", [x])


def norm1(x) -> Expression:
    return apply_atom("norm1", [x])


def norm2(x) -> Expression:
    return apply_atom("norm2", [x])


def norm_inf(x) -> Expression:
    return apply_atom("norm_inf", [x])


def fro(x) -> Expression:
    return apply_atom("fro", [x])


def norm(x, p=2) -> Expression:
    """``p`` in {1, 2, 'inf', 'fro'}; ``p=2`` on a matrix means Frobenius."""
    x = wrap(x)
    if p == 1:
        return norm1(x)
    if p in ("inf", float("inf")):
        return norm_inf(x)
    if p == "fro" or (p == 2 and not x.shape.is_vector):
        return fro(x)
    if p == 2:
        return norm2(x)
    raise ValueError(f"unsupported norm {p!r}")


def max_entries(x) -> Expression:
    return apply_atom("max_entries", [x])


def min_entries(x) -> Expression:
    return apply_atom("min_entries", [x])


def sum_entries(x) -> Expression:
    return apply_atom("sum", [x])


def add(*terms) -> Expression:
    """n-ary sum (a single node, unlike chained ``+``)."""
    if len(terms) == 1:
        return wrap(terms[0])
    return apply_atom("add", list(terms))


def multiply(x, y) -> Expression:
    return apply_atom("multiply", [x, y])


def matmul(x, y) -> Expression:
    return apply_atom("matmul", [x, y])


def conv(x, y) -> Expression:
    return apply_atom("conv", [x, y])


def transpose(x) -> Expression:
    return apply_atom("transpose", [x])


def power(x, p) -> Expression:
    """Integer/half powers expressed through the base atoms."""
    if p == 1:
        return wrap(x)
    if p == 2:
        return square(x)
    if p == -1:
        return inv_pos(x)
    if p == -2:
        return square(inv_pos(x))
    if p == 0.5:
        return sqrt(x)
    raise ValueError(f"power {p} is not supported")
