import numpy as np
import pytest

import mcvx.bcd as bcd_mod
from mcvx import functions as fn
from mcvx.bcd import (TRACE_COLUMNS, SolveSettings, bcd_solve, objective_trace,
                      random_initialize, solve_restarts)
from mcvx.canonicalize import solve_convex
from mcvx.errors import DomainError, NotDMCPError
from mcvx.examples import basic, dictionary, fractional, fractional_optimum
from mcvx.expression import Variable
from mcvx.multiconvex import IndexSet, find_minimal_sets
from mcvx.problem import Problem


def _snapshots(monkeypatch):
    """Record a copy of the point after every write-back."""
    shots = []
    real = bcd_mod.measure

    def spy(p, point, mu):
        shots.append({v: np.array(val, copy=True) for v, val in point.items()})
        return real(p, point, mu)

    monkeypatch.setattr(bcd_mod, "measure", spy)
    return shots


# -- initialization ---------------------------------------------------------------

def test_random_initialize_distributions():
    a = Variable(1000, sign="positive")
    b = Variable(1000, sign="negative")
    c = Variable((100, 100))
    p = Problem(fn.sum_entries(a) - fn.sum_entries(b) + fn.sum_squares(c))
    x = random_initialize(p, seed=0)
    assert np.all((x[a] >= 0) & (x[a] < 1))
    assert np.all((x[b] > -1) & (x[b] <= 0))
    assert abs(x[c].mean()) <= 0.05 and abs(x[c].var() - 1) <= 0.1


def test_random_initialize_keeps_given_values_and_is_reproducible():
    a, b, c = Variable(2), Variable(2), Variable(2)
    a.value = [5.0, 6.0]
    p = Problem(fn.sum_squares(a) + fn.sum_squares(b) + fn.sum_squares(c))
    x = random_initialize(p, seed=3, point={b: [1.0, 2.0]})
    assert np.array_equal(x[a].ravel(), [5, 6]) and np.array_equal(x[b].ravel(), [1, 2])
    y = random_initialize(p, seed=3, point={b: [1.0, 2.0]})
    assert np.array_equal(x[c], y[c])
    assert not np.array_equal(x[c], random_initialize(p, seed=4)[c])


# -- settings and schedule ------------------------------------------------------------

@pytest.mark.parametrize("bad", [dict(update="newton"), dict(mu_0=0.0), dict(rho=0.5),
                                 dict(mu_max=1e-4), dict(lambd=0.0), dict(max_iter=0),
                                 dict(tol_obj=-1.0)])
def test_settings_validation(bad):
    with pytest.raises(ValueError):
        SolveSettings(**bad)


def test_mu_schedule_exact():
    s = SolveSettings(mu_0=0.5, rho=2.0, mu_max=10.0)
    assert [s.mu_at(t) for t in range(7)] == [0.5, 1.0, 2.0, 4.0, 8.0, 10.0, 10.0]


def test_trace_mu_column_follows_schedule():
    ex = basic()
    s = SolveSettings(mu_0=1.0, rho=3.0, mu_max=20.0, max_iter=8, tol_obj=0.0, seed=1)
    r = bcd_solve(ex.problem, s)
    mus = [rec.mu for rec in r.trace]
    assert all(b >= a for a, b in zip(mus, mus[1:])) and max(mus) <= 20.0
    assert all(rec.mu == s.mu_at(rec.cycle) for rec in r.trace)


# -- bundled examples -----------------------------------------------------------------------

def test_basic_example_reaches_zero():
    ex = basic()
    r = bcd_solve(ex.problem, SolveSettings(seed=0))
    assert r.objective <= 1e-5
    assert abs(sum(float(v.sum()) for v in r.point.values()) - 1) <= 1e-6


@pytest.mark.parametrize("formulation", [1, 2])
def test_fractional_formulations(formulation):
    ex = fractional(formulation)
    r = bcd_solve(ex.problem, SolveSettings(seed=0, **ex.settings))
    assert abs(r.objective - fractional_optimum()) <= 1e-2
    assert abs(fractional_optimum() - 1.217) <= 1e-3


def test_dcp_problem_runs_one_subproblem_per_cycle():
    x = Variable(3, name="x")
    target = np.array([[1.0], [-2.0], [0.5]])
    p = Problem(fn.sum_squares(x - target) + fn.norm1(x), [fn.sum_entries(x) == 1])
    assert find_minimal_sets(p) == [IndexSet()]
    r = bcd_solve(p, SolveSettings(seed=0, update="minimize", mu_0=100.0, mu_max=100.0))
    assert r.status == "converged"
    assert all(rec.set_index == 0 for rec in r.trace) and len(r.trace) == r.cycles
    direct = solve_convex(p)
    assert abs(r.objective - direct.objective) <= 1e-4


# -- driver properties -----------------------------------------------------------------------

def test_monotone_descent_with_fixed_mu():
    ex = dictionary(m=3, n=4, T=4)
    s = SolveSettings(update="minimize", rho=1.0, tol_obj=0.0, max_iter=15, seed=0,
                      solver_tol=1e-8)
    r = bcd_solve(ex.problem, s)
    phi = [rec.penalized_objective for rec in r.trace]
    assert len(phi) == 30
    assert max(b - a for a, b in zip(phi, phi[1:])) <= 1e-6


def _overlap_toy():
    x1, x2, x3 = (Variable(1, name=f"x{i}") for i in (1, 2, 3))
    obj = fn.square(fn.multiply(x1, x3) - 1) + fn.square(x2 - x1) + fn.square(x2 - x3 - 0.5)
    return Problem(obj), (x1, x2, x3)


def test_overlapping_free_sets_update_shared_block_twice(monkeypatch):
    p, (x1, x2, x3) = _overlap_toy()
    sets = find_minimal_sets(p)
    assert sets == [IndexSet([0]), IndexSet([2])]
    shots = _snapshots(monkeypatch)
    start = random_initialize(p, seed=2)
    bcd_solve(p, SolveSettings(update="minimize", max_iter=1, seed=2))
    assert len(shots) >= 2  # one per write-back, then the final measurement
    assert shots[0][x2][0, 0] != start[x2][0, 0]
    assert shots[1][x2][0, 0] != shots[0][x2][0, 0]


def test_fixed_blocks_bit_identical(monkeypatch):
    ex = basic()
    p = ex.problem
    blocks = p.variables()
    shots = _snapshots(monkeypatch)
    s = SolveSettings(max_iter=3, tol_obj=0.0, seed=5)
    r = bcd_solve(p, s)
    before = random_initialize(p, seed=5)
    for rec, after in zip(r.trace, shots):
        for i in r.fixed_sets[rec.set_index]:
            assert np.array_equal(before[blocks[i]], after[blocks[i]])
        before = after


def test_seed_determinism():
    ex = basic()
    a = bcd_solve(ex.problem, SolveSettings(seed=7))
    b = bcd_solve(ex.problem, SolveSettings(seed=7))
    assert objective_trace(a) == objective_trace(b)


def test_improper_initial_point_reports_atom():
    ex = fractional(1)
    y = ex.variable("y")
    x = ex.variable("x")
    with pytest.raises(DomainError, match="initial point"):
        # the first subproblem fixes y where sqrt(y + 0.5) is undefined
        bcd_solve(ex.problem, SolveSettings(seed=0, fixed_sets=[[1], [0]]),
                  point={x: 1.0, y: -5.0})


def test_not_dmcp_rejected():
    x = Variable()
    with pytest.raises(NotDMCPError):
        bcd_solve(Problem(fn.square(x * x)))


def test_prox_linear_kink_is_reported():
    x, y = Variable(name="x"), Variable(name="y")
    p = Problem(fn.abs(fn.multiply(x, y)) + fn.square(x - 1))
    r = bcd_solve(p, SolveSettings(update="prox_linear", seed=0), point={x: 0.0, y: 0.0})
    assert r.status == "subproblem_failure" and "proximal" in r.message


def test_trace_columns_and_converged_slack():
    ex = basic()
    r = bcd_solve(ex.problem, SolveSettings(seed=0))
    assert TRACE_COLUMNS == ("cycle", "set_index", "iter", "objective", "penalized_objective",
                             "mu", "slack_inf", "solver_iters")
    rows = objective_trace(r)
    assert len(rows) == r.iterations and all(len(row) == 8 for row in rows)
    assert [row[2] for row in rows] == list(range(1, len(rows) + 1))
    assert r.status == "converged" and rows[-1][6] <= 1e-3 and r.slack_inf <= 1e-3


def test_fixed_set_override_is_verified():
    ex = basic()
    with pytest.raises(NotDMCPError):
        bcd_solve(ex.problem, SolveSettings(fixed_sets=[[0]]))
    r = bcd_solve(ex.problem, SolveSettings(fixed_sets=[[0, 2], [1, 3]], seed=0))
    assert r.fixed_sets == [IndexSet([0, 2]), IndexSet([1, 3])]
    assert {rec.set_index for rec in r.trace} == {0, 1}


def test_drop_slacks_keeps_feasibility():
    ex = basic()
    r = bcd_solve(ex.problem, SolveSettings(seed=0, drop_slacks_when_feasible=True))
    assert r.status == "converged" and r.slack_inf <= 1e-3 and r.objective <= 1e-5


def test_restarts_return_best_seed():
    ex = fractional(2)
    s = SolveSettings()
    best = solve_restarts(ex.problem, s, seeds=range(4))
    runs = [bcd_solve(ex.problem, s.replace(seed=k)) for k in range(4)]
    assert best.seed in range(4)
    assert best.objective == min(r.objective for r in runs if r.slack_inf <= s.tol_slack)
    assert objective_trace(best) == objective_trace(runs[best.seed])


def test_result_values_by_name():
    ex = basic()
    r = bcd_solve(ex.problem, SolveSettings(seed=0, max_iter=2))
    assert sorted(r.values) == ["x1", "x2", "x3", "x4"]
