"""Problems: minimize a scalar objective subject to inequality, equality and
second-order-cone constraints."""

from __future__ import annotations

from typing import Iterable, Sequence

from .analysis import curvatures
from .errors import ShapeError
from .expression import Expression, Variable, postorder, wrap


class Constraint:
    relation = ""

    @property
    def args(self) -> tuple[Expression, ...]:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.relation} {tuple(self.args[0].shape)}>"


class Inequality(Constraint):
    """``expr <= 0`` elementwise (a generalized inequality on the nonnegative orthant)."""

    relation = "<=0"

    def __init__(self, expr: Expression):
        self.expr = wrap(expr)

    @property
    def args(self):
        return (self.expr,)


class Equality(Constraint):
    relation = "==0"

    def __init__(self, expr: Expression):
        self.expr = wrap(expr)

    @property
    def args(self):
        return (self.expr,)


class SOCConstraint(Constraint):
    """``||x||_2 <= t`` with affine ``t`` (scalar) and ``x`` (vector)."""

    relation = "soc"

    def __init__(self, t: Expression, x: Expression):
        self.t, self.x = wrap(t), wrap(x)
        if not self.t.shape.is_scalar:
            raise ShapeError("SOC bound t must be scalar")
        if not self.x.shape.is_vector:
            raise ShapeError("SOC argument x must be a vector")

    @property
    def args(self):
        return (self.t, self.x)


def SOC(t, x) -> SOCConstraint:
    return SOCConstraint(t, x)


class Problem:
    """minimize ``objective`` subject to ``constraints``.

    Blocks are the problem's variables in declaration order unless an explicit
    ``variables`` list fixes the order.
    """

    def __init__(self, objective, constraints: Sequence[Constraint] = (),
                 variables: Sequence[Variable] | None = None):
        self.objective = wrap(objective)
        if not self.objective.shape.is_scalar:
            raise ShapeError("objective must be scalar")
        self.constraints = tuple(constraints)
        for c in self.constraints:
            if not isinstance(c, Constraint):
                raise TypeError(f"not a constraint: {c!r}")
        self._nodes = None
        found = {n.uid: n for n in self.nodes if isinstance(n, Variable)}
        if variables is None:
            self._variables = tuple(found[k] for k in sorted(found))
        else:
            self._variables = tuple(variables)
            missing = set(found) - {v.uid for v in self._variables}
            if missing:
                raise ValueError("explicit variable list misses some problem variables")

    @property
    def roots(self) -> tuple[Expression, ...]:
        out = [self.objective]
        for c in self.constraints:
            out.extend(c.args)
        return tuple(out)

    @property
    def nodes(self) -> list[Expression]:
        """All distinct nodes, children first (cached; trees are immutable)."""
        if self._nodes is None:
            self._nodes = list(postorder(*self.roots))
        return self._nodes

    def variables(self) -> tuple[Variable, ...]:
        return self._variables

    def parameters(self):
        from .expression import Parameter
        found = {n.uid: n for n in self.nodes if isinstance(n, Parameter)}
        return [found[k] for k in sorted(found)]

    @property
    def n_blocks(self) -> int:
        return len(self._variables)

    def is_dcp(self, fixed: Iterable | None = None) -> bool:
        return is_dcp(self, fixed)

    def __repr__(self) -> str:
        return (f"Problem({len(self._variables)} blocks, {len(self.constraints)} constraints, "
                f"{len(self.nodes)} nodes)")


def constraint_ok(c: Constraint, curv) -> bool:
    if isinstance(c, Inequality):
        return curv[c.expr.uid].is_convex
    if isinstance(c, Equality):
        return curv[c.expr.uid].is_affine
    return all(curv[a.uid].is_affine for a in c.args)


def is_dcp(p: Problem, fixed: Iterable | None = None) -> bool:
    """Objective convex, ``<= 0`` sides convex, ``== 0`` sides and cone arguments affine.

    ``fixed`` lists variables to treat as same-signed parameters.
    """
    curv = curvatures(p.nodes, fixed)
    if not curv[p.objective.uid].is_convex:
        return False
    return all(constraint_ok(c, curv) for c in p.constraints)
