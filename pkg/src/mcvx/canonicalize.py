"""BCD subproblem construction and lowering to standard-form cone programs.

Subproblems are built once per fixed set as expression trees whose numeric
inputs (fixed blocks, the penalty weight, proximal centers, gradients) are
parameters; each BCD iteration only rebinds values and lowers again.

Lowering is an epigraph (Smith form) pass: every nonlinear atom gets fresh
auxiliary variables plus cone rows, and affine structure is kept as dense
coefficient blocks in column-major vectorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from . import functions as fn
from .analysis import curvatures
from .atoms import index_bounds
from .autodiff import gradient
from .cone.solver import ConeProgram, ConeSolution, ConeSpec, solve_cone
from .errors import CanonicalizationError, UnboundError
from .expression import Constant, Expression, Parameter, Variable, as_array
from .lattice import Curvature, Sign
from .multiconvex import FixedProblem
from .problem import Equality, Inequality, Problem, SOCConstraint, is_dcp

MODES = ("minimize", "proximal", "prox_linear")


# -- subproblem transforms ----------------------------------------------------

@dataclass
class Subproblem:
    """A DCP problem over the free blocks of a fixed problem plus slacks.

    ``objective = base + penalty (+ proximal / linearized terms)``; all numeric
    knobs are parameters so :meth:`bind` is cheap.
    """

    fixed: FixedProblem
    base: Expression
    constraints: tuple
    slacks: list = field(default_factory=list)
    penalty: Expression | None = None
    mu: Parameter | None = None
    extra: Expression | None = None
    centers: dict = field(default_factory=dict)
    grads: dict = field(default_factory=dict)
    prox_weight: Parameter | None = None
    mode: str = "minimize"
    _problem: Problem | None = field(default=None, repr=False)

    @property
    def free(self) -> list[Variable]:
        return self.fixed.free

    @property
    def objective(self) -> Expression:
        terms = [self.base] if self.mode != "prox_linear" else []
        terms += [t for t in (self.penalty, self.extra) if t is not None]
        if not terms:
            return Constant(0.0)
        return terms[0] if len(terms) == 1 else fn.add(*terms)

    @property
    def problem(self) -> Problem:
        if self._problem is None:
            self._problem = Problem(self.objective, self.constraints,
                                    variables=list(self.free) + list(self.slacks))
        return self._problem

    def bind(self, point: Mapping, mu: float | None = None, lambd: float | None = None) -> None:
        """Rebind fixed blocks, centers, gradients and weights at ``point``."""
        self.fixed.bind(point)
        if self.mu is not None and mu is not None:
            self.mu.value = mu
        if self.prox_weight is not None and lambd is not None:
            self.prox_weight.value = 1.0 / (2.0 * lambd)
        for v in self.free:
            if v.uid in self.centers:
                self.centers[v.uid].value = point[v]
        if self.grads:
            g = gradient(self.fixed.problem.objective, self.free, point)
            for v, gv in zip(self.free, g):
                self.grads[v.uid].value = gv


def add_slacks(fp: FixedProblem, mu: float = 1.0) -> Subproblem:
    """Relax every constraint with a fresh nonnegative / free slack and charge
    ``mu`` per unit of slack.

    ``f <= 0`` becomes ``f <= s`` (one scalar ``s >= 0`` for the whole block,
    i.e. the all-ones interior direction), ``g == 0`` becomes ``g == s`` with
    ``mu * sum|s|``, and ``||x|| <= t`` becomes ``||x|| <= t + s``.
    """
    p = fp.problem
    mu_p = Parameter(1, name="mu", sign="positive", value=mu)
    cons, slacks, charges = [], [], []
    for k, c in enumerate(p.constraints):
        if isinstance(c, Inequality):
            s = Variable(1, name=f"slack{k}", sign="positive")
            cons.append(Inequality(c.expr - s))
            charges.append(s)
        elif isinstance(c, Equality):
            s = Variable(c.expr.shape, name=f"slack{k}")
            cons.append(Equality(c.expr - s))
            charges.append(fn.sum_entries(fn.abs(s)) if s.size > 1 else fn.abs(s))
        else:
            s = Variable(1, name=f"slack{k}", sign="positive")
            cons.append(SOCConstraint(c.t + s, c.x))
            charges.append(s)
        slacks.append(s)
    penalty = None
    if charges:
        total = charges[0] if len(charges) == 1 else fn.add(*charges)
        penalty = fn.multiply(mu_p, total)
    return Subproblem(fp, p.objective, tuple(cons), slacks, penalty, mu_p if charges else None)


def no_slacks(fp: FixedProblem) -> Subproblem:
    """The fixed problem as is (constraints kept hard)."""
    return Subproblem(fp, fp.problem.objective, tuple(fp.problem.constraints))


def _centers(sub: Subproblem) -> dict:
    for v in sub.free:
        if v.uid not in sub.centers:
            sub.centers[v.uid] = Parameter(v.shape, name=f"{v.name}_center")
    return sub.centers


def _prox_term(sub: Subproblem, lambd: float) -> Expression:
    sub.prox_weight = Parameter(1, name="prox_weight", sign="positive", value=1.0 / (2.0 * lambd))
    centers = _centers(sub)
    dist = [fn.sum_squares(v - centers[v.uid]) for v in sub.free]
    total = dist[0] if len(dist) == 1 else fn.add(*dist)
    return fn.multiply(sub.prox_weight, total)


def add_proximal(sub: Subproblem, lambd: float = 1.0) -> Subproblem:
    """Add ``1/(2 lambd) * sum_i ||x_i - center_i||^2`` over the free blocks."""
    sub.mode = "proximal"
    sub.extra = _prox_term(sub, lambd) if sub.free else None
    sub._problem = None
    return sub


def proxlinearize(sub: Subproblem, lambd: float = 1.0) -> Subproblem:
    """Replace the objective by its linearization at the centers plus the
    proximal term; penalties and constraints stay as they are."""
    sub.mode = "prox_linear"
    if not sub.free:
        sub.extra = None
        sub._problem = None
        return sub
    centers = _centers(sub)
    for v in sub.free:
        sub.grads[v.uid] = Parameter(v.shape, name=f"{v.name}_grad")
    lin = [fn.sum_entries(fn.multiply(sub.grads[v.uid], v - centers[v.uid])) for v in sub.free]
    lin_total = lin[0] if len(lin) == 1 else fn.add(*lin)
    sub.extra = fn.add(_prox_term(sub, lambd), lin_total)
    sub._problem = None
    return sub


def build_subproblem(fp: FixedProblem, mode: str = "proximal", mu: float = 1.0,
                     lambd: float = 1.0, slacks: bool = True) -> Subproblem:
    if mode not in MODES:
        raise ValueError(f"unknown update mode {mode!r}; expected one of {MODES}")
    sub = add_slacks(fp, mu) if slacks else no_slacks(fp)
    if mode == "proximal":
        add_proximal(sub, lambd)
    elif mode == "prox_linear":
        proxlinearize(sub, lambd)
    return sub


# -- lowering -------------------------------------------------------------------

class Aff:
    """Affine map ``vec(value) = sum_j terms[j] @ z_j + const`` (column-major)."""

    __slots__ = ("shape", "terms", "const")

    def __init__(self, shape, terms: dict, const: np.ndarray):
        self.shape = tuple(shape)
        self.terms = terms
        self.const = const

    @property
    def size(self) -> int:
        return self.const.shape[0]

    @classmethod
    def constant(cls, value: np.ndarray) -> "Aff":
        return cls(value.shape, {}, np.asarray(value, dtype=float).ravel(order="F"))

    def map(self, M: np.ndarray, shape) -> "Aff":
        return Aff(shape, {j: M @ T for j, T in self.terms.items()}, M @ self.const)

    def take(self, idx: np.ndarray, shape) -> "Aff":
        return Aff(shape, {j: T[idx] for j, T in self.terms.items()}, self.const[idx])

    def scale_rows(self, v) -> "Aff":
        v = np.asarray(v, dtype=float)
        col = v[:, None] if v.ndim else v
        return Aff(self.shape, {j: col * T for j, T in self.terms.items()}, v * self.const)

    def broadcast(self, shape) -> "Aff":
        k = shape[0] * shape[1]
        if self.size == k:
            return self
        return self.take(np.zeros(k, dtype=int), shape)

    def __add__(self, other: "Aff") -> "Aff":
        terms = dict(self.terms)
        for j, T in other.terms.items():
            terms[j] = terms[j] + T if j in terms else T
        return Aff(self.shape, terms, self.const + other.const)

    def __neg__(self) -> "Aff":
        return self.scale_rows(-1.0)

    def shift(self, c) -> "Aff":
        return Aff(self.shape, self.terms, self.const + c)

    @staticmethod
    def stack(parts) -> "Aff":
        k = sum(p.size for p in parts)
        terms: dict = {}
        pos = 0
        for p in parts:
            for j, T in p.terms.items():
                if j not in terms:
                    terms[j] = np.zeros((k, T.shape[1]))
                terms[j][pos:pos + p.size] += T
            pos += p.size
        return Aff((k, 1), terms, np.concatenate([p.const for p in parts]))


def _interleave(parts) -> tuple[Aff, int]:
    """Stack equal-size parts as consecutive triples (p0_i, p1_i, ...) per entry."""
    k = parts[0].size
    d = len(parts)
    perm = np.arange(k * d).reshape(d, k).T.ravel()
    st = Aff.stack(parts)
    return st.take(perm, (k * d, 1)), d


class _Lowering:
    def __init__(self):
        self.sizes: list[int] = []
        self.zero: list[Aff] = []
        self.nonneg: list[Aff] = []
        self.soc: list[Aff] = []
        self.soc_dims: list[int] = []

    def new_block(self, shape) -> Aff:
        j = len(self.sizes)
        k = shape[0] * shape[1]
        self.sizes.append(k)
        return Aff(shape, {j: np.eye(k)}, np.zeros(k))

    def add_soc(self, blk: Aff, dim: int) -> None:
        """``blk`` holds consecutive SOC blocks of dimension ``dim``."""
        self.soc.append(blk)
        self.soc_dims.extend([dim] * (blk.size // dim))

    # graph implementations: return an Aff standing for the atom's value
    def atom(self, node, args: list[Aff], consts: list) -> Aff:
        kind = node.kind
        shape = tuple(node.shape)
        if kind == "add":
            out = args[0].broadcast(shape)
            for a in args[1:]:
                out = out + a.broadcast(shape)
            return out
        if kind == "negate":
            return -args[0]
        if kind == "scale":
            return args[0].scale_rows(float(node.data))
        if kind == "index":
            a = args[0]
            rows, cols = index_bounds(node.data)
            idx = np.arange(a.size).reshape(a.shape, order="F")[rows, cols].ravel(order="F")
            return a.take(idx, shape)
        if kind == "transpose":
            a = args[0]
            idx = np.arange(a.size).reshape(a.shape, order="F").T.ravel(order="F")
            return a.take(idx, shape)
        if kind == "sum":
            a = args[0]
            return a.map(np.ones((1, a.size)), shape)
        if kind in ("matmul", "multiply", "conv"):
            return self._product(node, args, consts, shape)
        u = args[0]
        k = u.size
        if kind == "abs":
            t = self.new_block(shape)
            self.nonneg += [t + -u, t + u]
            return t
        if kind == "norm1":
            t = self.new_block(u.shape)
            self.nonneg += [t + -u, t + u]
            return t.map(np.ones((1, k)), shape)
        if kind == "norm_inf":
            t = self.new_block(shape)
            tb = t.broadcast(u.shape)
            self.nonneg += [tb + -u, tb + u]
            return t
        if kind == "max_entries":
            t = self.new_block(shape)
            self.nonneg.append(t.broadcast(u.shape) + -u)
            return t
        if kind == "min_entries":
            t = self.new_block(shape)
            self.nonneg.append(u + -t.broadcast(u.shape))
            return t
        if kind in ("norm2", "fro"):
            t = self.new_block(shape)
            self.add_soc(Aff.stack([t, u]), k + 1)
            return t
        if kind == "square":
            t = self.new_block(shape)
            blk, d = _interleave([t.shift(1.0), u.scale_rows(2.0), t.shift(-1.0)])
            self.add_soc(blk, d)
            return t
        if kind == "sum_squares":
            t = self.new_block(shape)
            self.add_soc(Aff.stack([t.shift(1.0), u.scale_rows(2.0), t.shift(-1.0)]), k + 2)
            return t
        if kind == "sqrt":
            t = self.new_block(shape)
            self.nonneg.append(t)
            blk, d = _interleave([u.shift(1.0), t.scale_rows(2.0), u.shift(-1.0)])
            self.add_soc(blk, d)
            return t
        if kind == "inv_pos":
            t = self.new_block(shape)
            two = Aff.constant(np.full(shape, 2.0))
            blk, d = _interleave([u + t, two, u + -t])
            self.add_soc(blk, d)
            return t
        raise CanonicalizationError(f"no graph implementation for atom {kind!r}")

    def _product(self, node, args, consts, shape) -> Aff:
        kind = node.kind
        if consts[0] is not None and consts[1] is not None:
            return Aff.constant(node.spec.numeric(consts, node.data))
        if consts[0] is None and consts[1] is None:
            raise CanonicalizationError(f"{kind} with two non-constant arguments")
        ci = 0 if consts[0] is not None else 1
        C = consts[ci]
        x = args[1 - ci]
        if kind == "multiply":
            if C.size == 1:
                return x.broadcast(shape).scale_rows(float(C[0, 0]))
            return x.broadcast(shape).scale_rows(C.ravel(order="F"))
        if kind == "matmul":
            xr, xc = x.shape
            if ci == 0:
                M = np.kron(np.eye(xc), C)
            else:
                M = np.kron(C.T, np.eye(xr))
            return x.map(M, shape)
        # conv: Toeplitz matrix of the constant acting on the variable side
        a = C.ravel(order="F")
        n = x.size
        T = np.zeros((a.size + n - 1, n))
        for j in range(n):
            T[j:j + a.size, j] = a
        return x.map(T, shape)


def _const_value(node, vals: dict):
    if node.is_leaf:
        if node.value is None:
            raise UnboundError(f"{node.kind} {node.name!r} has no value")
        return node.value
    v = np.asarray(node.spec.numeric([vals[a.uid] for a in node.args], node.data), dtype=float)
    if v.shape != tuple(node.shape):
        v = np.broadcast_to(v, tuple(node.shape)).copy()
    return v


def to_cone_program(problem: Problem, check: bool = True) -> ConeProgram:
    """Lower a DCP problem to ``min c'z + d  s.t.  Az + s = b, s in K``.

    The problem's variables occupy the first columns of ``z`` in order;
    ``recovery`` maps each of them to its column offset. Variables carrying a
    sign attribute get explicit sign rows.
    """
    if check and not is_dcp(problem):
        raise CanonicalizationError("problem is not DCP")
    low = _Lowering()
    affs: dict[int, Aff] = {}
    vals: dict[int, np.ndarray] = {}
    recovery = {}
    offset = 0
    for v in problem.variables():
        aff = low.new_block(tuple(v.shape))
        affs[v.uid] = aff
        recovery[v] = (offset, v.shape)
        offset += v.size
        if v.sign is Sign.POSITIVE:
            low.nonneg.append(aff)
        elif v.sign is Sign.NEGATIVE:
            low.nonneg.append(-aff)
        elif v.sign is Sign.ZERO:
            low.zero.append(aff)
    curv = curvatures(problem.nodes)
    for node in problem.nodes:
        if curv[node.uid] is Curvature.CONSTANT:
            vals[node.uid] = _const_value(node, vals)
            continue
        if node.uid in affs:
            continue
        if node.is_leaf:
            raise CanonicalizationError(f"variable {node.name!r} is not a problem variable")
        consts = [vals.get(a.uid) for a in node.args]
        args = [affs[a.uid] if a.uid in affs else Aff.constant(vals[a.uid]) for a in node.args]
        affs[node.uid] = low.atom(node, args, consts)

    def lowered(e):
        return affs[e.uid] if e.uid in affs else Aff.constant(vals[e.uid])

    for c in problem.constraints:
        if isinstance(c, Inequality):
            low.nonneg.append(-lowered(c.expr))
        elif isinstance(c, Equality):
            low.zero.append(lowered(c.expr))
        else:
            x = lowered(c.x)
            low.add_soc(Aff.stack([lowered(c.t), x]), x.size + 1)
    obj = lowered(problem.objective)
    return _assemble(low, obj, recovery)


def _assemble(low: _Lowering, obj: Aff, recovery) -> ConeProgram:
    starts = np.concatenate([[0], np.cumsum(low.sizes)]).astype(int)
    nz = int(starts[-1])
    rows = low.zero + low.nonneg + low.soc
    m = sum(r.size for r in rows)
    G = np.zeros((m, nz))
    h = np.zeros(m)
    pos = 0
    for r in rows:
        for j, T in r.terms.items():
            G[pos:pos + r.size, starts[j]:starts[j + 1]] += T
        h[pos:pos + r.size] = r.const
        pos += r.size
    c = np.zeros(nz)
    for j, T in obj.terms.items():
        c[starts[j]:starts[j + 1]] += T[0]
    cones = ConeSpec(sum(r.size for r in low.zero), sum(r.size for r in low.nonneg),
                     tuple(low.soc_dims))
    return ConeProgram(c, sp.csc_matrix(-G), h, cones, float(obj.const[0]), recovery)


def recover(cp: ConeProgram, z: np.ndarray) -> dict:
    """Values of the lowered problem's variables from a solution vector."""
    z = np.asarray(z, dtype=float).ravel()
    if z.shape[0] != cp.n:
        raise ValueError(f"solution has length {z.shape[0]}, program has {cp.n} columns")
    return {v: z[o:o + shape.size].reshape(tuple(shape), order="F")
            for v, (o, shape) in cp.recovery.items()}


def embed(cp: ConeProgram, values: Mapping) -> np.ndarray:
    """Inverse of :func:`recover` on the variable columns (aux columns zero)."""
    z = np.zeros(cp.n)
    for v, (o, shape) in cp.recovery.items():
        z[o:o + shape.size] = as_array(values[v], shape).ravel(order="F")
    return z


@dataclass
class ConvexSolve:
    status: str
    objective: float
    values: dict
    solution: ConeSolution


def solve_convex(problem: Problem, tol: float = 1e-6, max_iter: int = 20000,
                 warm: ConeSolution | None = None) -> ConvexSolve:
    """Lower, solve and recover a DCP problem."""
    cp = to_cone_program(problem)
    sol = solve_cone(cp, tol=tol, max_iter=max_iter, warm=warm)
    return ConvexSolve(sol.status, sol.objective, recover(cp, sol.x), sol)


__all__ = [
    "Subproblem", "add_slacks", "no_slacks", "add_proximal", "proxlinearize",
    "build_subproblem", "to_cone_program", "recover", "embed", "solve_convex", "ConvexSolve",
    "ConeProgram", "MODES",
]
