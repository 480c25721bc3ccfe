"""Sign and curvature lattices used by the signed DCP analysis."""

from __future__ import annotations

import enum

import numpy as np


class Sign(enum.Enum):
    ZERO = "zero"
    POSITIVE = "positive"
    NEGATIVE = "negative"
    UNKNOWN = "unknown"

    def __le__(self, other: "Sign") -> bool:
        """Lattice order: ``a <= b`` when ``a`` is at least as specific as ``b``."""
        if self is other or other is Sign.UNKNOWN:
            return True
        return self is Sign.ZERO

    def __lt__(self, other: "Sign") -> bool:
        return self is not other and self <= other

    def join(self, other: "Sign") -> "Sign":
        if self <= other:
            return other
        if other <= self:
            return self
        return Sign.UNKNOWN

    def meet(self, other: "Sign") -> "Sign":
        if self <= other:
            return self
        if other <= self:
            return other
        return Sign.ZERO

    @property
    def is_nonneg(self) -> bool:
        return self in (Sign.ZERO, Sign.POSITIVE)

    @property
    def is_nonpos(self) -> bool:
        return self in (Sign.ZERO, Sign.NEGATIVE)

    def __neg__(self) -> "Sign":
        return _NEG[self]

    def __add__(self, other: "Sign") -> "Sign":
        if self is Sign.ZERO:
            return other
        if other is Sign.ZERO:
            return self
        if self is other:
            return self
        return Sign.UNKNOWN

    def __mul__(self, other: "Sign") -> "Sign":
        if Sign.ZERO in (self, other):
            return Sign.ZERO
        if Sign.UNKNOWN in (self, other):
            return Sign.UNKNOWN
        return Sign.POSITIVE if self is other else Sign.NEGATIVE

    @classmethod
    def of_value(cls, value) -> "Sign":
        """Collapse a numeric tensor to a single sign."""
        arr = np.asarray(value, dtype=float)
        if arr.size == 0 or np.all(arr == 0):
            return cls.ZERO
        if np.all(arr >= 0):
            return cls.POSITIVE
        if np.all(arr <= 0):
            return cls.NEGATIVE
        return cls.UNKNOWN

    @classmethod
    def parse(cls, s: "str | Sign | None") -> "Sign":
        if s is None:
            return cls.UNKNOWN
        if isinstance(s, Sign):
            return s
        key = s.lower()
        aliases = {"nonneg": "positive", "nonnegative": "positive",
                   "nonpos": "negative", "nonpositive": "negative"}
        return cls(aliases.get(key, key))


_NEG = {Sign.ZERO: Sign.ZERO, Sign.POSITIVE: Sign.NEGATIVE,
        Sign.NEGATIVE: Sign.POSITIVE, Sign.UNKNOWN: Sign.UNKNOWN}


class Curvature(enum.Enum):
    CONSTANT = "constant"
    AFFINE = "affine"
    CONVEX = "convex"
    CONCAVE = "concave"
    UNKNOWN = "unknown"

    def __le__(self, other: "Curvature") -> bool:
        """Lattice order: ``a <= b`` when ``a`` is at least as specific as ``b``."""
        return other in _CURV_UP[self]

    def __lt__(self, other: "Curvature") -> bool:
        return self is not other and self <= other

    def join(self, other: "Curvature") -> "Curvature":
        if self <= other:
            return other
        if other <= self:
            return self
        return Curvature.UNKNOWN

    def meet(self, other: "Curvature") -> "Curvature":
        if self <= other:
            return self
        if other <= self:
            return other
        # convex/concave are the only incomparable pair
        return Curvature.AFFINE

    @property
    def is_convex(self) -> bool:
        return self <= Curvature.CONVEX

    @property
    def is_concave(self) -> bool:
        return self <= Curvature.CONCAVE

    @property
    def is_affine(self) -> bool:
        return self <= Curvature.AFFINE

    @property
    def is_constant(self) -> bool:
        return self is Curvature.CONSTANT


_C = Curvature
_CURV_UP = {
    _C.CONSTANT: {_C.CONSTANT, _C.AFFINE, _C.CONVEX, _C.CONCAVE, _C.UNKNOWN},
    _C.AFFINE: {_C.AFFINE, _C.CONVEX, _C.CONCAVE, _C.UNKNOWN},
    _C.CONVEX: {_C.CONVEX, _C.UNKNOWN},
    _C.CONCAVE: {_C.CONCAVE, _C.UNKNOWN},
    _C.UNKNOWN: {_C.UNKNOWN},
}
