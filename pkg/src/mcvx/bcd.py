"""Block coordinate descent over minimal fixed sets."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Mapping, Sequence

import numpy as np

from .analysis import evaluate_all
from .canonicalize import MODES, build_subproblem, recover, to_cone_program
from .cone.solver import solve_cone
from .errors import DomainError, NonDifferentiableError, NotDMCPError
from .expression import Variable, as_array
from .lattice import Sign
from .multiconvex import FixedProblem, IndexSet, find_minimal_sets, is_dmcp, verify_fixed_sets
from .problem import Equality, Inequality, Problem

TRACE_COLUMNS = ("cycle", "set_index", "iter", "objective", "penalized_objective", "mu",
                 "slack_inf", "solver_iters")


@dataclass
class SolveSettings:
    update: str = "proximal"
    mu_0: float = 5e-3
    rho: float = 1.2
    mu_max: float = 1e5
    lambd: float = 10.0
    max_iter: int = 100
    tol_obj: float = 1e-5
    tol_slack: float = 1e-3
    seed: int | None = None
    fixed_sets: Sequence | None = None
    drop_slacks_when_feasible: bool = False
    shuffle: bool = False
    solver_tol: float = 1e-6
    solver_max_iter: int = 20000

    def __post_init__(self):
        if self.update not in MODES:
            raise ValueError(f"update must be one of {MODES}, got {self.update!r}")
        if not self.mu_0 > 0:
            raise ValueError("mu_0 must be positive")
        if not self.rho >= 1:
            raise ValueError("rho must be at least 1")
        if not self.mu_max >= self.mu_0:
            raise ValueError("mu_max must be at least mu_0")
        if not self.lambd > 0:
            raise ValueError("lambd must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.tol_obj < 0 or self.tol_slack < 0 or not self.solver_tol > 0:
            raise ValueError("tolerances must be nonnegative")

    def replace(self, **changes) -> "SolveSettings":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return SolveSettings(**values)

    def mu_at(self, cycle: int) -> float:
        """Penalty weight after ``cycle`` completed cycles."""
        return min(self.mu_0 * self.rho ** cycle, self.mu_max)


@dataclass(frozen=True)
class TraceRecord:
    cycle: int
    set_index: int
    iter: int
    objective: float
    penalized_objective: float
    mu: float
    slack_inf: float
    solver_iters: int

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in TRACE_COLUMNS)


@dataclass
class SolveResult:
    status: str  # converged | max_iters | subproblem_failure
    objective: float
    penalized_objective: float
    slack_inf: float
    cycles: int
    point: dict  # Variable -> value
    trace: list = field(default_factory=list)
    fixed_sets: list = field(default_factory=list)
    seed: int | None = None
    message: str = ""

    @property
    def values(self) -> dict[str, np.ndarray]:
        return {v.name: val for v, val in self.point.items()}

    @property
    def iterations(self) -> int:
        return len(self.trace)


def objective_trace(r: SolveResult) -> list[tuple]:
    """Trace rows in the fixed column order :data:`TRACE_COLUMNS`."""
    return [rec.as_tuple() for rec in r.trace]


def random_initialize(p: Problem, seed=None, point: Mapping | None = None) -> dict:
    """Values for every block: user values kept, the rest drawn in declaration
    order from [0,1) (nonnegative blocks), (-1,0] (nonpositive) or N(0,1)."""
    rng = np.random.default_rng(seed)
    out = {}
    for v in p.variables():
        given = point.get(v) if point is not None else None
        if given is None:
            given = v.value
        if given is not None:
            out[v] = as_array(given, v.shape).copy()
            continue
        shape = tuple(v.shape)
        if v.sign is Sign.POSITIVE:
            out[v] = rng.random(shape)
        elif v.sign is Sign.NEGATIVE:
            out[v] = -rng.random(shape)
        elif v.sign is Sign.ZERO:
            out[v] = np.zeros(shape)
        else:
            out[v] = rng.standard_normal(shape)
    return out


def _violations(p: Problem, vals) -> list[float]:
    out = []
    for c in p.constraints:
        if isinstance(c, Inequality):
            out.append(max(float(vals[c.expr.uid].max()), 0.0))
        elif isinstance(c, Equality):
            out.append(float(np.abs(vals[c.expr.uid]).max()))
        else:
            gap = float(np.linalg.norm(vals[c.x.uid]) - vals[c.t.uid][0, 0])
            out.append(max(gap, 0.0))
    return out


def measure(p: Problem, point: Mapping, mu: float) -> tuple[float, float, float]:
    """(objective, penalized objective, max constraint violation) at ``point``.

    The penalty mirrors the slack subproblem: ``mu`` times the optimal slacks
    (``max(f, 0)`` per inequality block, ``||g||_1`` per equality, the cone gap).
    A point outside the domain of some atom measures as infinite.
    """
    try:
        vals = evaluate_all(p.roots, point)
    except DomainError:
        return math.inf, math.inf, math.inf
    obj = float(vals[p.objective.uid][0, 0])
    viol = _violations(p, vals)
    penalty = 0.0
    for c, v in zip(p.constraints, viol):
        penalty += float(np.abs(vals[c.expr.uid]).sum()) if isinstance(c, Equality) else v
    return obj, obj + mu * penalty, max(viol, default=0.0)


def _clip_sign(v: Variable, value: np.ndarray) -> np.ndarray:
    if v.sign is Sign.POSITIVE:
        return np.maximum(value, 0.0)
    if v.sign is Sign.NEGATIVE:
        return np.minimum(value, 0.0)
    if v.sign is Sign.ZERO:
        return np.zeros_like(value)
    return value


def resolve_fixed_sets(p: Problem, override: Sequence | None = None) -> list[IndexSet]:
    if override is not None:
        return verify_fixed_sets(p, override)
    return find_minimal_sets(p)


class _SetState:
    """Cached subproblems (with and without slacks) and warm start for one fixed set."""

    def __init__(self, p: Problem, fixed: IndexSet, point, s: SolveSettings):
        self.fp = FixedProblem(p, fixed, point)
        self.settings = s
        self.subs = {}
        self.warm = None
        self.checked = set()

    def sub(self, slacks: bool):
        if slacks not in self.subs:
            self.subs[slacks] = build_subproblem(self.fp, self.settings.update,
                                                 mu=self.settings.mu_0,
                                                 lambd=self.settings.lambd, slacks=slacks)
            self.warm = None
        return self.subs[slacks]

    def solve(self, point, mu: float, slacks: bool):
        sub = self.sub(slacks)
        sub.bind(point, mu=mu, lambd=self.settings.lambd)
        check = slacks not in self.checked
        cp = to_cone_program(sub.problem, check=check)
        self.checked.add(slacks)
        sol = solve_cone(cp, tol=self.settings.solver_tol, max_iter=self.settings.solver_max_iter,
                         warm=self.warm)
        if sol.status == "numerical_failure":
            self.warm = None
            return sol, None
        self.warm = sol
        return sol, recover(cp, sol.x)


def bcd_solve(p: Problem, settings: SolveSettings | None = None,
              point: Mapping | None = None) -> SolveResult:
    """Cyclic BCD: for each fixed set solve the relaxed convex subproblem in the
    free blocks, write back, and grow the penalty weight once per cycle.

    Stops when a full cycle changes the penalized objective by at most
    ``tol_obj`` while the largest constraint violation is at most ``tol_slack``.
    """
    s = settings or SolveSettings()
    if not is_dmcp(p):
        raise NotDMCPError("problem is not DMCP")
    sets = resolve_fixed_sets(p, s.fixed_sets)
    x = random_initialize(p, s.seed, point)
    states = [_SetState(p, f, x, s) for f in sets]
    blocks = p.variables()
    rng = np.random.default_rng(s.seed)
    trace: list[TraceRecord] = []
    status, message = "max_iters", ""
    use_slacks = True
    failures = 0
    prev_phi = None
    it = 0
    cycle = 0
    for cycle in range(s.max_iter):
        mu = s.mu_at(cycle)
        order = rng.permutation(len(sets)) if s.shuffle else range(len(sets))
        aborted = False
        for k in order:
            st = states[k]
            try:
                sol, values = st.solve(x, mu, use_slacks)
            except DomainError as err:
                if it == 0:
                    raise DomainError(err.atom, "the first fixed subproblem is improper at the "
                                      "initial point; set variable values or change the "
                                      "seed") from err
                status, message = "subproblem_failure", str(err)
                aborted = True
                break
            except NonDifferentiableError as err:
                status = "subproblem_failure"
                message = f"{err}; use the proximal update for nonsmooth objectives"
                aborted = True
                break
            it += 1
            if values is None:
                failures += 1
                if failures >= 2:
                    status = "subproblem_failure"
                    message = f"two consecutive subproblem failures (set {k}, cycle {cycle})"
                    aborted = True
                    break
            else:
                failures = 0
                for i, v in zip(st.fp.free_indices, st.fp.free):
                    x[blocks[i]] = _clip_sign(v, values[v])
            obj, phi, slack = measure(p, x, mu)
            trace.append(TraceRecord(cycle, int(k), it, obj, phi, mu, slack, sol.iterations))
        if aborted:
            break
        if s.drop_slacks_when_feasible and use_slacks and slack <= s.tol_slack:
            use_slacks = False
        if prev_phi is not None and abs(phi - prev_phi) <= s.tol_obj and slack <= s.tol_slack:
            status = "converged"
            break
        prev_phi = phi
    cycles = cycle + 1
    obj, phi_final, slack = measure(p, x, s.mu_at(cycle))
    return SolveResult(status, obj, phi_final, slack, cycles, x, trace, sets, s.seed, message)


def _rank(r: SolveResult, tol_slack: float):
    bad = r.status == "subproblem_failure" or not math.isfinite(r.objective)
    return (bad, r.slack_inf > tol_slack, r.objective)


def solve_restarts(p: Problem, settings: SolveSettings | None = None, seeds: Sequence[int] = (0,),
                   workers: int | None = None, point: Mapping | None = None) -> SolveResult:
    """Independent seeded solves run in threads; returns the best (feasible
    first, then lowest objective). ``result.seed`` names the winner."""
    s = settings or SolveSettings()
    runs = [s.replace(seed=int(seed)) for seed in seeds]
    if len(runs) == 1:
        return bcd_solve(p, runs[0], point)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda r: bcd_solve(p, r, point), runs))
    return min(results, key=lambda r: _rank(r, s.tol_slack))


__all__ = [
    "SolveSettings", "SolveResult", "TraceRecord", "TRACE_COLUMNS", "bcd_solve",
    "solve_restarts", "random_initialize", "objective_trace", "measure", "resolve_fixed_sets",
]
