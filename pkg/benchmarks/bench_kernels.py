"""Compiled vs pure-Python cone kernels.

Times the product-cone projection and full dense and sparse solves with each
backend swapped into the solver. Both backends must agree on the answer.

    python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np
import scipy.sparse as sp

import mcvx.cone.solver as solver_mod
from mcvx.cone import _fallback
from mcvx.cone.solver import ConeProgram, ConeSpec, solve_cone

try:
    from mcvx.cone import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def socp(rng, n: int, blocks: int, dim: int) -> ConeProgram:
    """min c'x  s.t.  ||F_k x - g_k|| <= 1 for every block, x >= -1."""
    F = rng.standard_normal((blocks * (dim - 1), n))
    g = rng.standard_normal(blocks * (dim - 1)) * 0.1
    rows, rhs = [-np.eye(n)], [np.ones(n)]
    for k in range(blocks):
        sl = slice(k * (dim - 1), (k + 1) * (dim - 1))
        rows.append(np.vstack([np.zeros((1, n)), -F[sl]]))
        rhs.append(np.concatenate([[1.0], -g[sl]]))
    A = np.vstack(rows)
    c = rng.standard_normal(n)
    return ConeProgram(c, sp.csc_matrix(A), np.concatenate(rhs),
                       ConeSpec(nonneg=n, soc=(dim,) * blocks))


def bench_projection(rng, repeat):
    dims = np.full(20000, 4, dtype=np.int_)
    v = rng.standard_normal(1000 + int(dims.sum()))
    out = {}
    for name, mod in backends():
        out[name] = best_of(lambda: mod.project_product(v, 500, 500, dims), repeat)
    return "projection, 20000 SOC(4) blocks", out, None


def bench_solve(rng, repeat, n, blocks, dim, label):
    cp = socp(rng, n, blocks, dim)
    out, objs = {}, {}
    for name, mod in backends():
        solver_mod.kernels = mod
        try:
            out[name] = best_of(lambda: objs.__setitem__(name, solve_cone(cp, tol=1e-6)), repeat)
        finally:
            solver_mod.kernels = _kernels or _fallback
    vals = [s.objective for s in objs.values()]
    agree = max(vals) - min(vals) <= 1e-8 * max(1.0, abs(vals[0]))
    iters = {s.iterations for s in objs.values()}
    return f"{label} ({cp.A.shape[0]} rows, {next(iter(iters))} iterations)", out, agree


def backends():
    out = [("python", _fallback)]
    if _kernels is not None:
        out.insert(0, ("compiled", _kernels))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    rows = [bench_projection(rng, args.repeat),
            bench_solve(rng, args.repeat, 40, 30, 5, "dense SOCP solve"),
            bench_solve(rng, args.repeat, 60, 150, 4, "sparse SOCP solve")]
    names = [n for n, _ in backends()]
    print(f"{'case':<55}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}  agree")
    for label, times, agree in rows:
        cells = "".join(f"{times[n] * 1e3:>10.2f}ms" for n in names)
        speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        flag = "" if agree is None else ("yes" if agree else "NO")
        print(f"{label:<55}{cells}{speed:>9.1f}x  {flag}")


if __name__ == "__main__":
    main()
