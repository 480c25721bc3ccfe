"""Standard-form cone programs and the splitting solver front end.

Problems have the form

    minimize    c'z + offset
    subject to  A z + s = b,   s in K

with K a product of a zero cone, a nonnegative orthant and second-order cones,
in that row order. The solver iterates on (z, w = b - s, y): a linear solve
against a cached Cholesky / LU factorization, then a projection of w onto
b - K, then a dual ascent step. Data are Ruiz-equilibrated first; SOC blocks
get one row scale each so the cone is preserved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _fallback, kernels

STATUSES = {0: "optimal", 1: "max_iters", 2: "numerical_failure"}
DENSE_ROW_LIMIT = 500
ADAPT_FIRST, ADAPT_MAX = 50, 1600


@dataclass(frozen=True)
class ConeSpec:
    """Row layout of K: ``zero`` equality rows, ``nonneg`` rows, then SOC blocks."""

    zero: int = 0
    nonneg: int = 0
    soc: tuple[int, ...] = ()

    @property
    def rows(self) -> int:
        return self.zero + self.nonneg + sum(self.soc)

    def segments(self) -> list[tuple[str, int]]:
        out = []
        if self.zero:
            out.append(("zero", self.zero))
        if self.nonneg:
            out.append(("nonneg", self.nonneg))
        out.extend(("soc", d) for d in self.soc)
        return out


@dataclass
class ConeProgram:
    c: np.ndarray
    A: sp.spmatrix
    b: np.ndarray
    cones: ConeSpec
    offset: float = 0.0
    recovery: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.c.shape[0]

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.A.shape != (self.b.shape[0], self.c.shape[0]):
            raise ValueError(f"A is {self.A.shape}, expected ({self.b.shape[0]}, {self.c.shape[0]})")
        if self.cones.rows != self.b.shape[0]:
            raise ValueError("cone dimensions do not sum to the row count")


@dataclass
class ConeSolution:
    status: str
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    workspace: "_Workspace | None" = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def project_cone(v, segment) -> np.ndarray:
    """Projection onto one segment: ``("zero", d)``, ``("nonneg", d)`` or ``("soc", d)``.

    The zero cone projects everything to the origin (primal role).
    """
    kind, dim = segment
    v = np.asarray(v, dtype=float).ravel()
    if v.shape[0] != dim:
        raise ValueError(f"vector of length {v.shape[0]} for a {kind} cone of dim {dim}")
    spec = {"zero": ConeSpec(zero=dim), "nonneg": ConeSpec(nonneg=dim),
            "soc": ConeSpec(soc=(dim,))}[kind]
    return kernels.project_product(v, spec.zero, spec.nonneg, np.array(spec.soc, dtype=np.int_))


def _soc_block_mean(vals: np.ndarray, cones: ConeSpec) -> np.ndarray:
    if not cones.soc:
        return vals
    start = cones.zero + cones.nonneg
    dims = np.array(cones.soc)
    seg = vals[start:]
    means = np.add.reduceat(seg, np.r_[0, np.cumsum(dims)[:-1]]) / dims
    out = vals.copy()
    out[start:] = np.repeat(means, dims)
    return out


def _inf_norms(A, axis: int) -> np.ndarray:
    if sp.issparse(A):
        return np.asarray(abs(A).max(axis=axis).todense()).ravel()
    return np.abs(A).max(axis=axis)


def equilibrate(A, cones: ConeSpec, iters: int = 15):
    """Ruiz scaling: returns (D, E) so that diag(E) A diag(D) has rows and
    columns of roughly unit infinity norm."""
    m, n = A.shape
    D, E = np.ones(n), np.ones(m)
    if m == 0 or n == 0:
        return D, E
    As = A
    for _ in range(iters):
        cn = _inf_norms(As, 0)
        rn = _soc_block_mean(_inf_norms(As, 1), cones)
        cn[cn < 1e-8] = 1.0
        rn[rn < 1e-8] = 1.0
        d, e = 1.0 / np.sqrt(cn), 1.0 / np.sqrt(rn)
        D *= d
        E *= e
        As = _scaled(A, D, E)
    return np.clip(D, 1e-4, 1e4), np.clip(E, 1e-4, 1e4)


def _scaled(A, D, E):
    if sp.issparse(A):
        return sp.diags(E) @ A @ sp.diags(D)
    return E[:, None] * A * D[None, :]


class _Workspace:
    """Scaling and factorization for one matrix; reused while A is unchanged."""

    def __init__(self, A, cones: ConeSpec, rho: float, sigma: float, rho_eq_scale: float):
        self.dense = A.shape[0] < DENSE_ROW_LIMIT
        A = A.toarray() if (self.dense and sp.issparse(A)) else A
        if not self.dense:
            A = sp.csc_matrix(A)
        self.A = A
        self.cones = cones
        self.key = (rho, sigma, rho_eq_scale)
        self.sigma = sigma
        self.rho_eq_scale = rho_eq_scale
        self.D, self.E = equilibrate(A, cones)
        self.As = _scaled(A, self.D, self.E)
        if self.dense:
            self.As = np.ascontiguousarray(self.As)
        else:
            self.As = sp.csc_matrix(self.As)
            self.AsT = sp.csc_matrix(self.As.T)
        self.factor(rho)

    def factor(self, rho: float) -> None:
        """(Re)factor sigma*I + A' diag(rho) A for base penalty ``rho``."""
        m, n = self.As.shape
        self.rho_base = float(rho)
        self.rho = np.full(m, float(rho))
        self.rho[:self.cones.zero] *= self.rho_eq_scale
        if self.dense:
            M = self.sigma * np.eye(n) + self.As.T @ (self.rho[:, None] * self.As)
            self.L = scipy.linalg.cholesky(M, lower=True)
        else:
            M = (self.sigma * sp.identity(n, format="csc")
                 + self.AsT @ sp.diags(self.rho) @ self.As)
            self.lu = spla.splu(sp.csc_matrix(M))

    def residual_ratio(self, x, w, y, c) -> float:
        """sqrt of relative primal over relative dual residual (scaled space)."""
        Ax = self.As @ x
        ATy = (self.As.T @ y) if self.dense else (self.AsT @ y)
        prim = np.linalg.norm(Ax - w) / max(np.linalg.norm(Ax), np.linalg.norm(w), 1e-10)
        dual = np.linalg.norm(ATy + c) / max(np.linalg.norm(ATy), np.linalg.norm(c), 1e-10)
        return float(np.sqrt(prim / max(dual, 1e-10)))

    def matches(self, A, cones: ConeSpec, key) -> bool:
        if cones != self.cones or key != self.key or A.shape != self.A.shape:
            return False
        if self.dense:
            A = A.toarray() if sp.issparse(A) else A
            return np.array_equal(A, self.A)
        other = sp.csc_matrix(A)
        return (other != self.A).nnz == 0


def solve_cone(cp: ConeProgram, tol: float = 1e-6, max_iter: int = 20000,
               warm: ConeSolution | None = None, *, rho: float = 0.1, sigma: float = 1e-6,
               alpha: float = 1.5, rho_eq_scale: float = 1e3, check_every: int = 10,
               adaptive_rho: bool = True) -> ConeSolution:
    """Solve ``cp``; ``warm`` supplies a starting point (and a reusable
    factorization when the constraint matrix is unchanged).

    With ``adaptive_rho`` the iterations run in chunks of growing length; after
    a chunk the penalty is rescaled by the primal/dual residual ratio when that
    ratio leaves [1/5, 5], which costs one refactorization.
    """
    m, n = cp.A.shape
    cones = cp.cones
    if n == 0:
        s = cp.b.copy()
        res = np.linalg.norm(s - kernels.project_product(
            s, cones.zero, cones.nonneg, np.array(cones.soc, dtype=np.int_)))
        return ConeSolution("optimal" if res <= tol else "numerical_failure", np.zeros(0),
                            np.zeros(m), s, cp.offset, res, 0.0, 0.0, 0)
    if m == 0:
        ok = not np.any(cp.c)
        return ConeSolution("optimal" if ok else "numerical_failure", np.zeros(n), np.zeros(0),
                            np.zeros(0), cp.offset, 0.0, float(np.linalg.norm(cp.c)), 0.0, 0)

    key = (rho, sigma, rho_eq_scale)
    ws = warm.workspace if warm is not None else None
    if ws is None or not ws.matches(cp.A, cones, key):
        ws = _Workspace(cp.A, cones, rho, sigma, rho_eq_scale)
    D, E = ws.D, ws.E
    dc = D * cp.c
    cmax = np.abs(dc).max()
    cscale = float(np.clip(1.0 / cmax, 1e-4, 1e4)) if cmax > 0 else 1.0
    cs = cscale * dc
    bs = E * cp.b

    if warm is not None and warm.x.shape == (n,) and warm.y.shape == (m,):
        x = warm.x / D
        w = E * (cp.b - warm.s)
        y = cscale * warm.y / E
    else:
        x, w, y = np.zeros(n), np.zeros(m), np.zeros(m)
    x, w, y = (np.ascontiguousarray(v, dtype=float) for v in (x, w, y))
    socd = np.array(cones.soc, dtype=np.int_)
    bnorm, cnorm = float(np.linalg.norm(cp.b)), float(np.linalg.norm(cp.c))
    total, chunk = 0, ADAPT_FIRST
    while True:
        budget = max_iter - total
        if adaptive_rho:
            budget = min(budget, chunk)
        args = (cs, bs, ws.rho, sigma, alpha, x, w, y, cones.zero, cones.nonneg, socd,
                1.0 / D, 1.0 / E, cscale, bnorm, cnorm, tol, budget, check_every)
        if ws.dense:
            out = kernels.admm_dense(ws.As, ws.L, *args)
        else:
            out = _fallback.admm_loop(ws.lu.solve, ws.As, ws.AsT, *args,
                                      project=kernels.project_product)
        total += out[1]
        if out[0] != 1 or total >= max_iter:
            break
        ratio = ws.residual_ratio(x, w, y, cs)
        if ratio > 5.0 or ratio < 0.2:
            ws.factor(float(np.clip(ws.rho_base * ratio, 1e-6, 1e6)))
        chunk = min(2 * chunk, ADAPT_MAX)
    code, _, pres, dres, gap, pobj = out
    iters = total
    xu = D * x
    su = cp.b - w / E
    yu = E * y / cscale
    return ConeSolution(STATUSES[code], xu, yu, su, float(cp.c @ xu) + cp.offset,
                        float(pres), float(dres), float(gap), int(iters), ws)
