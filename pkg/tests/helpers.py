"""Random expression trees paired with independent vectorized numpy oracles."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.optimize

from mcvx import functions as fn
from mcvx.analysis import curvature_of
from mcvx.expression import Constant, Expression, Parameter, Variable
from mcvx.lattice import Curvature
from mcvx.problem import Problem

UNARY = ("abs", "square", "sqrt", "inv_pos", "negate", "scale")
BINARY = ("add", "multiply")


@dataclass
class Tree:
    expr: Expression
    value: Callable  # list of arrays (one per variable) -> (value, in_domain)


def _leaf(rng, variables, allow_const=True) -> Tree:
    k = rng.integers(len(variables) + (2 if allow_const else 0))
    if k < len(variables):
        i = int(k)
        return Tree(variables[i], lambda X, i=i: (X[i], np.ones_like(X[i], dtype=bool)))
    c = float(np.round(rng.uniform(-2, 2), 2))
    if k == len(variables):
        return Tree(Constant(c), lambda X, c=c: (np.full_like(X[0], c), np.ones_like(X[0], dtype=bool)))
    sign = "positive" if c >= 0 else "negative"
    p = Parameter(1, sign=sign, value=c)
    return Tree(p, lambda X, c=c: (np.full_like(X[0], c), np.ones_like(X[0], dtype=bool)))


def random_tree(rng, variables, depth: int, ops=UNARY + BINARY, split: bool = False) -> Tree:
    """A random scalar expression over scalar ``variables`` with its oracle.

    With ``split`` the children of a product draw from disjoint halves of the
    variables, which makes multi-convex (rather than hopeless) trees common.
    """
    if depth == 0 or rng.random() < 0.2:
        return _leaf(rng, variables)
    op = ops[rng.integers(len(ops))]
    if op in BINARY:
        va = vb = variables
        if split and op == "multiply" and len(variables) >= 2:
            perm = [variables[i] for i in rng.permutation(len(variables))]
            cut = int(rng.integers(1, len(perm)))
            va, vb = perm[:cut], perm[cut:]
        a = random_tree(rng, va, depth - 1, ops, split)
        b = random_tree(rng, vb, depth - 1, ops, split)
        if op == "add":
            return Tree(a.expr + b.expr, lambda X: _bin(a, b, X, np.add))
        return Tree(fn.multiply(a.expr, b.expr), lambda X: _bin(a, b, X, np.multiply))
    a = random_tree(rng, variables, depth - 1, ops, split)
    if op == "scale":
        c = float(np.round(rng.uniform(-3, 3), 2)) or 1.0
        return Tree(a.expr * c, lambda X: _un(a, X, lambda v: c * v))
    if op == "negate":
        return Tree(-a.expr, lambda X: _un(a, X, np.negative))
    if op == "abs":
        return Tree(fn.abs(a.expr), lambda X: _un(a, X, np.abs))
    if op == "square":
        return Tree(fn.square(a.expr), lambda X: _un(a, X, np.square))
    if op == "sqrt":
        return Tree(fn.sqrt(a.expr), lambda X: _un(a, X, _safe_sqrt, lambda v: v >= 0))
    return Tree(fn.inv_pos(a.expr), lambda X: _un(a, X, _safe_inv, lambda v: v > 0))


def _safe_sqrt(v):
    return np.sqrt(np.maximum(v, 0.0))


def _safe_inv(v):
    with np.errstate(divide="ignore"):
        return np.where(v > 0, 1.0 / np.where(v > 0, v, 1.0), np.inf)


def _un(a: Tree, X, f, dom=None):
    v, ok = a.value(X)
    if dom is not None:
        ok = ok & dom(v)
    return f(v), ok


def _bin(a: Tree, b: Tree, X, f):
    va, oka = a.value(X)
    vb, okb = b.value(X)
    with np.errstate(invalid="ignore", over="ignore"):
        return f(va, vb), oka & okb


def extended_value(tree: Tree, X) -> np.ndarray:
    """Oracle value with +inf outside the implicit domain of any atom."""
    with np.errstate(invalid="ignore", over="ignore"):
        v, ok = tree.value(X)
    return np.where(ok & np.isfinite(v), v, np.inf)


def scalar_variables(n: int, rng=None, signed: bool = False) -> list[Variable]:
    signs = [None] * n
    if signed and rng is not None:
        signs = [[None, "positive", "negative"][rng.integers(3)] for _ in range(n)]
    return [Variable(1, name=f"x{i}", sign=s) for i, s in enumerate(signs)]


def _draw_problem(rng, n_blocks: int, depth: int, split: bool) -> Problem:
    xs = scalar_variables(n_blocks, rng, signed=True)
    obj = random_tree(rng, xs, depth, split=split).expr
    cons = []
    for _ in range(rng.integers(3)):
        t = random_tree(rng, xs, max(1, depth - 2), split=split).expr
        cons.append(t <= 0 if rng.random() < 0.7 else t == 0)
    return Problem(obj, cons, variables=xs)


def random_dmcp_atom_problem(rng, n_blocks: int, depth: int, multiconvex: bool = False,
                             tries: int = 2000) -> Problem:
    """Objective and up to two constraints built from the DMCP atom library.

    With ``multiconvex`` draws are rejected until the problem is DMCP and has
    at least one conflict edge (genuinely multi-convex, not merely convex).
    """
    from mcvx.multiconvex import build_conflict_graph, is_dmcp
    for _ in range(tries):
        p = _draw_problem(rng, n_blocks, depth, split=bool(rng.random() < 0.7))
        if not multiconvex:
            return p
        if is_dmcp(p) and build_conflict_graph(p).edges:
            return p
    raise RuntimeError("no multi-convex draw found")


def subsets(n: int):
    for r in range(n + 1):
        yield from itertools.combinations(range(n), r)


def lp_vertex_oracle(A: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    """min c'x s.t. Ax <= b by enumerating every basic solution."""
    m, n = A.shape
    best = np.inf
    for rows in itertools.combinations(range(m), n):
        sub = A[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, b[list(rows)])
        if np.all(A @ x <= b + 1e-9):
            best = min(best, float(c @ x))
    return best


def random_bounded_lp(rng, n: int, m: int):
    """Random LP with a strictly feasible point and a bounded objective."""
    A = rng.standard_normal((m, n))
    x0 = rng.standard_normal(n)
    b = A @ x0 + rng.uniform(0.5, 2.0, m)
    lam = rng.uniform(0.1, 1.0, m)
    c = -A.T @ lam
    return A, b, c


def chain_problem(nodes: int, n_blocks: int = 4) -> Problem:
    """A deep DMCP chain with about ``nodes`` nodes over ``n_blocks`` scalar
    blocks: alternating bilinear terms folded into a running sum (two new
    nodes per term)."""
    xs = scalar_variables(n_blocks)
    e = xs[0] * 1.0
    k = 0
    while True:
        i, j = (2 * k) % n_blocks, (2 * k + 1) % n_blocks
        e = e + fn.multiply(xs[i], xs[j])
        k += 1
        if 2 * k + n_blocks + 3 >= nodes:
            break
    return Problem(fn.abs(e), variables=xs)


def _convex_tree(rng, n_vars):
    while True:
        xs = scalar_variables(n_vars)
        tree = random_tree(rng, xs, 3)
        convex = curvature_of(tree.expr) in (Curvature.CONVEX, Curvature.AFFINE)
        if convex and tree.expr.variables():
            return xs, tree


def grid_oracle(tree, n_vars, lo=-2.0, hi=2.0):
    """Grid search over the box followed by a bounded local polish."""
    pts = 401 if n_vars == 1 else 201
    axes = [np.linspace(lo, hi, pts)] * n_vars
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = extended_value(tree, [m.ravel() for m in mesh])
    k = int(np.argmin(vals))
    best = float(vals[k])
    if not np.isfinite(best):
        return best
    x0 = np.array([m.ravel()[k] for m in mesh])

    def f(z):
        z = np.clip(z, lo, hi)
        return float(extended_value(tree, [np.array([zi]) for zi in z])[0])

    polish = scipy.optimize.minimize(f, x0, method="Nelder-Mead",
                                     options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000})
    return min(best, float(polish.fun))


def random_convex_case(seed):
    """A convex random problem on the box [-2, 2]^n with a finite, moderately
    scaled minimum, together with its oracle value. Rejected draws are
    replaced from the same stream."""
    rng = np.random.default_rng(seed)
    while True:
        n_vars = int(rng.integers(1, 3))
        xs, tree = _convex_tree(rng, n_vars)
        oracle = grid_oracle(tree, n_vars)
        if np.isfinite(oracle) and abs(oracle) <= 1e3:
            break
    cons = [x <= 2.0 for x in xs] + [x >= -2.0 for x in xs]
    return Problem(tree.expr, cons, variables=xs), oracle
