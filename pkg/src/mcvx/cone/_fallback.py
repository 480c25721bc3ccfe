"""Pure-Python (numpy) versions of the solver kernels.

Same signatures and arithmetic as the compiled ``_kernels`` module; used when
the extension is not built or ``MCVX_PURE_PYTHON`` is set.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

OPTIMAL, MAX_ITERS, NUMERICAL_FAILURE = 0, 1, 2


def soc_groups(soc_dims, start: int) -> list[np.ndarray]:
    """Row-index matrices (blocks x dim), one per distinct SOC dimension."""
    groups: dict[int, list[np.ndarray]] = {}
    pos = start
    for d in soc_dims:
        groups.setdefault(int(d), []).append(np.arange(pos, pos + d))
        pos += d
    return [np.vstack(v) for _, v in sorted(groups.items())]


def _project_soc_rows(blk: np.ndarray) -> np.ndarray:
    t = blk[:, 0]
    x = blk[:, 1:]
    nx = np.sqrt(np.einsum("ij,ij->i", x, x))
    out = blk.copy()
    below = nx <= -t
    out[below] = 0.0
    mid = ~below & (nx > t)
    if np.any(mid):
        a = 0.5 * (nx[mid] + t[mid])
        out[mid, 0] = a
        out[mid, 1:] = (a / nx[mid])[:, None] * x[mid]
    return out


def project_product(v, nzero: int, nnonneg: int, soc_dims, out=None, groups=None) -> np.ndarray:
    """Euclidean projection onto {0}^nzero x R_+^nnonneg x SOC(d1) x ..."""
    v = np.asarray(v, dtype=float)
    if out is None:
        out = np.empty_like(v)
    out[:nzero] = 0.0
    out[nzero:nzero + nnonneg] = np.maximum(v[nzero:nzero + nnonneg], 0.0)
    if groups is None:
        groups = soc_groups(soc_dims, nzero + nnonneg)
    for idx in groups:
        out[idx] = _project_soc_rows(v[idx])
    return out


def admm_loop(solve, A, AT, c, b, rho, sigma, alpha, x, w, y, nzero, nnonneg, soc_dims,
              dinv, einv, cscale, bnorm, cnorm, tol, max_iter, check_every, project=None):
    """Run the splitting iterations in scaled space; updates x, w, y in place.

    ``solve`` applies the inverse of sigma*I + A' diag(rho) A and ``project``
    (default: :func:`project_product`) projects onto the cone.
    Returns (status, iterations, primal_res, dual_res, gap, objective).
    """
    groups = soc_groups(soc_dims, nzero + nnonneg)
    project = project or project_product
    rho_inv = 1.0 / rho
    status = MAX_ITERS
    pres = dres = gap = pobj = np.inf
    k = 0
    for k in range(1, max_iter + 1):
        rhs = sigma * x - c + AT @ (rho * w - y)
        xt = solve(rhs)
        wt = A @ xt
        x *= 1.0 - alpha
        x += alpha * xt
        wh = alpha * wt + (1.0 - alpha) * w
        v = b - (wh + y * rho_inv)
        p = project(v, nzero, nnonneg, soc_dims, groups=groups)
        wn = b - p
        y += rho * (wh - wn)
        w[:] = wn
        if k % check_every == 0 or k == max_iter:
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                status = NUMERICAL_FAILURE
                break
            pres = np.linalg.norm(einv * (A @ x - w)) / (1.0 + bnorm)
            dres = np.linalg.norm(dinv * (AT @ y + c)) / cscale / (1.0 + cnorm)
            pobj = float(c @ x) / cscale
            gap = abs(pobj + float(b @ y) / cscale) / (1.0 + abs(pobj))
            if pres <= tol and dres <= tol and gap <= tol:
                status = OPTIMAL
                break
    return status, k, pres, dres, gap, pobj


def admm_dense(A, L, c, b, rho, sigma, alpha, x, w, y, nzero, nnonneg, soc_dims,
               dinv, einv, cscale, bnorm, cnorm, tol, max_iter, check_every):
    """Dense variant: ``L`` is the lower Cholesky factor of sigma*I + A' diag(rho) A."""
    A = np.ascontiguousarray(A)
    AT = np.ascontiguousarray(A.T)

    def solve(rhs):
        return scipy.linalg.cho_solve((L, True), rhs, check_finite=False)

    return admm_loop(solve, A, AT, c, b, rho, sigma, alpha, x, w, y, nzero, nnonneg,
                     soc_dims, dinv, einv, cscale, bnorm, cnorm, tol, max_iter, check_every)
