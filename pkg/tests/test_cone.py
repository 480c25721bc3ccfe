import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

import mcvx.cone.solver as solver_mod
from helpers import lp_vertex_oracle, random_bounded_lp
from mcvx.cone import _fallback, kernels
from mcvx.cone.solver import ConeProgram, ConeSpec, equilibrate, project_cone, solve_cone

SEEDS = st.integers(0, 2 ** 32 - 1)


# -- projections --------------------------------------------------------------------

def test_nonneg_projection():
    assert np.array_equal(project_cone([-1.0, 2.0], ("nonneg", 2)), [0.0, 2.0])


def test_soc_projection_closed_form():
    assert np.allclose(project_cone([0.0, 3.0, 4.0], ("soc", 3)), [2.5, 1.5, 2.0])


def test_soc_projection_inside_and_polar():
    v = np.array([5.0, 3.0, 4.0])
    assert np.array_equal(project_cone(v, ("soc", 3)), v)
    assert np.array_equal(project_cone([-5.0, 3.0, 4.0], ("soc", 3)), [0.0, 0.0, 0.0])


def test_zero_projection():
    assert np.array_equal(project_cone([1.0, -2.0], ("zero", 2)), [0.0, 0.0])


def test_projection_dim_mismatch():
    with pytest.raises(ValueError):
        project_cone([1.0, 2.0], ("soc", 3))


def _random_spec(rng):
    socs = tuple(int(d) for d in rng.integers(1, 6, size=rng.integers(0, 4)))
    return ConeSpec(int(rng.integers(0, 4)), int(rng.integers(0, 6)), socs)


def _proj(v, spec, mod=kernels):
    return mod.project_product(np.asarray(v, dtype=float), spec.zero, spec.nonneg,
                               np.array(spec.soc, dtype=np.int_))


@settings(max_examples=300)
@given(SEEDS)
def test_projection_idempotent_and_nonexpansive(seed):
    rng = np.random.default_rng(seed)
    spec = _random_spec(rng)
    if spec.rows == 0:
        return
    u = rng.standard_normal(spec.rows) * rng.uniform(0.1, 10)
    v = rng.standard_normal(spec.rows) * rng.uniform(0.1, 10)
    pu, pv = _proj(u, spec), _proj(v, spec)
    assert np.abs(_proj(pu, spec) - pu).max() <= 1e-12 * max(1.0, np.abs(pu).max())
    assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-12


@settings(max_examples=100)
@given(SEEDS)
def test_backends_project_identically(seed):
    rng = np.random.default_rng(seed)
    spec = _random_spec(rng)
    v = rng.standard_normal(spec.rows)
    assert np.allclose(_proj(v, spec, kernels), _proj(v, spec, _fallback), atol=1e-14)


# -- solves ---------------------------------------------------------------------------

def _lp_program(A, b, c):
    m, n = A.shape
    return ConeProgram(c, sp.csc_matrix(A), b, ConeSpec(nonneg=m))


def test_quadratic_via_soc():
    # minimize t  s.t.  ||(2(z-1), t-1)|| <= t+1, i.e. t >= (z-1)^2
    # variables (z, t); rows: (t+1, 2z-2, t-1) in SOC
    A = -np.array([[0.0, 1.0], [2.0, 0.0], [0.0, 1.0]])
    b = np.array([1.0, -2.0, -1.0])
    sol = solve_cone(ConeProgram([0.0, 1.0], sp.csc_matrix(A), b, ConeSpec(soc=(3,))))
    assert sol.ok
    assert abs(sol.x[0] - 1) <= 1e-5 and abs(sol.objective) <= 1e-5


def test_l1_with_equality():
    # minimize t1 + t2 s.t. z1 + z2 = 1, |zi| <= ti; variables (z1, z2, t1, t2)
    A = np.array([[1, 1, 0, 0],
                  [1, 0, -1, 0], [-1, 0, -1, 0], [0, 1, 0, -1], [0, -1, 0, -1]], dtype=float)
    b = np.array([1.0, 0, 0, 0, 0])
    cp = ConeProgram([0, 0, 1.0, 1.0], sp.csc_matrix(A), b, ConeSpec(zero=1, nonneg=4))
    sol = solve_cone(cp)
    assert sol.ok and abs(sol.objective - 1) <= 1e-4


def test_optimal_status_means_small_residuals():
    rng = np.random.default_rng(5)
    A, b, c = random_bounded_lp(rng, 5, 9)
    sol = solve_cone(_lp_program(A, b, c), tol=1e-7)
    assert sol.ok
    assert max(sol.primal_residual, sol.dual_residual, sol.gap) <= 1e-7
    assert np.isclose(sol.objective, c @ sol.x)


@pytest.mark.parametrize("seed", range(5))
def test_lp_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    A, b, c = random_bounded_lp(rng, 20, 22)
    sol = solve_cone(_lp_program(A, b, c), tol=1e-8, max_iter=100000)
    oracle = lp_vertex_oracle(A, b, c)
    assert sol.ok
    assert abs(sol.objective - oracle) <= 1e-3 * max(1.0, abs(oracle))


@pytest.mark.parametrize("seed", range(20))
def test_warm_start_reaches_same_objective(seed):
    rng = np.random.default_rng(100 + seed)
    A, b, c = random_bounded_lp(rng, 6, 10)
    cold = solve_cone(_lp_program(A, b, c))
    c2 = c + 0.01 * rng.standard_normal(6)
    warm = solve_cone(_lp_program(A, b, c2), warm=cold)
    ref = solve_cone(_lp_program(A, b, c2))
    assert warm.ok and ref.ok
    assert abs(warm.objective - ref.objective) <= 1e-4 * max(1.0, abs(ref.objective))
    assert warm.workspace is cold.workspace


@pytest.mark.parametrize("seed", range(5))
def test_scale_invariance(seed):
    rng = np.random.default_rng(200 + seed)
    A, b, c = random_bounded_lp(rng, 4, 8)
    base = solve_cone(_lp_program(A, b, c), tol=1e-8)
    scaled = solve_cone(_lp_program(A, 10 * b, 10 * c), tol=1e-8)
    assert abs(scaled.objective - 100 * base.objective) <= 1e-4 * max(1.0, abs(scaled.objective))
    assert np.allclose(scaled.x / 10, base.x, atol=1e-3)


def test_degenerate_shapes():
    sol = solve_cone(ConeProgram(np.zeros(0), sp.csc_matrix((2, 0)), [1.0, 2.0],
                                 ConeSpec(nonneg=2)))
    assert sol.ok
    sol = solve_cone(ConeProgram(np.zeros(2), sp.csc_matrix((0, 2)), np.zeros(0), ConeSpec()))
    assert sol.ok


def test_bad_shapes_rejected():
    with pytest.raises(ValueError):
        ConeProgram([1.0], sp.csc_matrix(np.ones((2, 2))), [1.0, 1.0], ConeSpec(nonneg=2))
    with pytest.raises(ValueError):
        ConeProgram([1.0, 1.0], sp.csc_matrix(np.ones((2, 2))), [1.0, 1.0], ConeSpec(nonneg=3))


def test_max_iters_status():
    rng = np.random.default_rng(9)
    A, b, c = random_bounded_lp(rng, 10, 15)
    sol = solve_cone(_lp_program(A, b, c), max_iter=5)
    assert sol.status == "max_iters" and sol.iterations == 5


def test_sparse_path_matches_dense(monkeypatch):
    rng = np.random.default_rng(1)
    A, b, c = random_bounded_lp(rng, 30, 600)  # above the dense row limit
    sparse = solve_cone(_lp_program(A, b, c), max_iter=50000)
    monkeypatch.setattr(solver_mod, "DENSE_ROW_LIMIT", 10 ** 6)
    dense = solve_cone(_lp_program(A, b, c), max_iter=50000)
    assert not sparse.workspace.dense and dense.workspace.dense
    assert sparse.ok and dense.ok
    assert abs(sparse.objective - dense.objective) <= 1e-5 * max(1.0, abs(dense.objective))


def test_pure_python_backend_agrees(monkeypatch):
    rng = np.random.default_rng(12)
    A, b, c = random_bounded_lp(rng, 6, 10)
    fast = solve_cone(_lp_program(A, b, c), tol=1e-8)
    monkeypatch.setattr(solver_mod, "kernels", _fallback)
    slow = solve_cone(_lp_program(A, b, c), tol=1e-8)
    assert slow.status == fast.status
    assert abs(slow.objective - fast.objective) <= 1e-9 * max(1.0, abs(fast.objective))
    assert slow.iterations == fast.iterations


def test_equilibration_keeps_soc_blocks_uniform():
    rng = np.random.default_rng(13)
    A = rng.standard_normal((7, 4)) * rng.uniform(0.01, 100, (7, 1))
    D, E = equilibrate(A, ConeSpec(nonneg=2, soc=(3, 2)))
    assert np.allclose(E[2:5], E[2]) and np.allclose(E[5:7], E[5])
    assert np.all(D > 0) and np.all(E > 0)
