"""Generators for the bundled multi-convex example problems.

Each generator returns an :class:`Example`: the problem (initial values, when
the example prescribes them, are set on the variables), recommended settings
in document form and a one-line description.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import functions as fn
from .document import problem_to_document
from .expression import Parameter, Variable
from .problem import Problem


@dataclass
class Example:
    name: str
    problem: Problem
    settings: dict = field(default_factory=dict)
    description: str = ""
    data: dict = field(default_factory=dict)

    def document(self) -> dict:
        return problem_to_document(self.problem, self.settings)

    def variable(self, name: str) -> Variable:
        for v in self.problem.variables():
            if v.name == name:
                return v
        raise KeyError(name)


def basic() -> Example:
    """minimize |x1 x2 + x3 x4| subject to x1 + x2 + x3 + x4 = 1."""
    x = [Variable(1, name=f"x{i}") for i in range(1, 5)]
    p = Problem(fn.abs(x[0] * x[1] + x[2] * x[3]), [fn.add(*x) == 1])
    return Example("basic", p, {}, "bilinear absolute value with a sum constraint")


def _p_of(x):
    return fn.square(x) + 1


def _q_of(y):
    return fn.sqrt(y + 0.5)


def fractional(formulation: int = 1) -> Example:
    """(x^2 + 1) / sqrt(y + 0.5) written as a product with x = y (formulation 1)
    or as min alpha s.t. p(x) <= alpha q(x) (formulation 2)."""
    if formulation == 1:
        x, y = Variable(1, name="x"), Variable(1, name="y")
        p = Problem(fn.multiply(fn.inv_pos(_q_of(y)), _p_of(x)), [x == y])
    elif formulation == 2:
        alpha = Variable(1, name="alpha", sign="positive")
        x = Variable(1, name="x")
        p = Problem(alpha, [_p_of(x) <= fn.multiply(_q_of(x), alpha)])
    else:
        raise ValueError("formulation is 1 or 2")
    # with alpha fixed the second form's x-subproblem is a pure feasibility
    # problem; the proximal term would pin x in place, exact solves let it move
    settings = {"update": "minimize"} if formulation == 2 else {}
    return Example(f"fractional-{formulation}", p, settings,
                   "ratio of a convex and a concave function; optimum about 1.2172")


def fractional_optimum() -> float:
    """Global optimum of (x^2 + 1)/sqrt(x + 0.5), attained at x = 1/3."""
    x = 1.0 / 3.0
    return (x * x + 1.0) / np.sqrt(x + 0.5)


def transceiver(n: int = 10, m: int = 15, power: float = 10.0, sigma_e: float = 0.1,
                seed: int = 0) -> Example:
    """Precoder A and equalizer B for a random channel; SVD-based start."""
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((m, n))
    A = Variable((n, n), name="A")
    B = Variable((n, m), name="B")
    s = Parameter(1, name="sigma_e", sign="positive", value=sigma_e)
    err = B @ C @ A - np.eye(n)
    cost = fn.square(fn.fro(err)) * 0.5 + fn.multiply(fn.square(s), fn.square(fn.fro(B)))
    p = Problem(cost, [fn.fro(A) <= power])
    U, S, Vt = np.linalg.svd(C, full_matrices=False)
    gain = power / np.sqrt(n)
    A.value = Vt.T * gain
    B.value = (U / S).T / gain
    return Example("transceiver", p, {"update": "minimize"},
                   "linear precoder/equalizer design under a power budget", {"C": C})


def dictionary(m: int = 10, n: int = 20, T: int = 20, alpha: float = 0.1,
               seed: int = 0) -> Example:
    """Sparse dictionary learning: X ~ D Y with an l1 penalty on Y."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((m, T))
    D = Variable((m, n), name="D")
    Y = Variable((n, T), name="Y")
    a = Parameter(1, name="alpha", sign="positive", value=alpha)
    cost = fn.square(fn.fro(D @ Y - X)) * 0.5 + fn.multiply(a, fn.norm1(Y))
    p = Problem(cost, [fn.fro(D) <= 1])
    return Example("dictionary", p, {}, "sparse dictionary learning", {"X": X})


MOTOR_A0 = np.array([[-1.0, 0.0], [0.0, -0.1]])
MOTOR_A1 = np.array([[0.0, -19.0], [0.1, 0.0]])


def bilinear_motor(n: int = 100, M: float = 8.0, dt: float = 0.1) -> Example:
    """Braking a D.C. motor through its field current (bilinear dynamics)."""
    x = Variable((2, n), name="x")
    u = Variable(n - 1, name="u")
    cons = [x[:, 0] == 1, fn.max_entries(fn.abs(x[0, :])) <= M]
    for t in range(n - 1):
        xt = x[:, t]
        rate = MOTOR_A0 @ xt + fn.multiply(MOTOR_A1 @ xt, u[t])
        cons.append(x[:, t + 1] - xt == rate * dt)
    p = Problem(fn.norm2(x[1, :]), cons)
    x.value = np.zeros((2, n))
    u.value = np.linspace(0.5, 0.0, n - 1)
    return Example("bilinear-motor", p, {}, "D.C. motor braking with bilinear control")


def resistance(n: int = 10, I0: float = -100.0, delta: float = 1.0, u0: float = 12.0) -> Example:
    """Resistor values of a ladder circuit from voltage-drop observations."""
    x, y = Variable(n, name="x"), Variable(n, name="y")
    z = Variable(n - 1, name="z")
    i, j = Variable(n, name="i"), Variable(n, name="j")
    a = Variable(n, name="a", sign="positive")
    b = Variable(n, name="b", sign="positive")
    c = Variable(n - 1, name="c", sign="positive")
    v = Variable(n, name="v")
    cons = [x[0] == y[0] + z[0], x[n - 1] + z[n - 2] == y[n - 1],
            i[0] == x[0], j[0] == y[0], i[n - 1] == -I0, j[n - 1] == -I0]
    for k in range(n - 2):
        cons.append(x[k + 1] + z[k] == y[k + 1] + z[k + 1])
    for k in range(n):
        cons += [x[k] * a[k] == u0 - v[k], y[k] * b[k] == v[k]]
    cost = []
    for k in range(n - 1):
        cost.append(fn.square(v[k] - v[k + 1] - delta))
        cons += [z[k] * c[k] == v[k] - v[k + 1],
                 i[k + 1] == i[k] + x[k + 1], j[k + 1] == j[k] + y[k + 1]]
    p = Problem(fn.add(*cost), cons)
    for var in p.variables():
        var.value = np.ones(tuple(var.shape))
    # a larger starting penalty keeps the early iterates from settling on a
    # feasible point with a nonzero fit error
    settings = {"mu_0": 1.0, "rho": 1.5, "update": "minimize"}
    return Example("resistance", p, settings, "ladder-circuit resistance estimation")


MARKOV_TARGET = np.array([0.25, 0.3, 0.45])
MARKOV_WEIGHTS = np.array([0.27, 0.61, 0.04, 0.08])


def markov_matrices(n: int = 4, m: int = 3, target=MARKOV_TARGET, weights=MARKOV_WEIGHTS,
                    seed: int = 0) -> list[np.ndarray]:
    """Random row-stochastic matrices whose ``weights``-mixture is ``1 target'``,
    so ``target`` is attainable as a steady state.

    The first n-1 matrices shrink random stochastic matrices toward ``1 target'``;
    the last one absorbs the difference and stays nonnegative by construction.
    """
    rng = np.random.default_rng(seed)
    target = np.asarray(target, dtype=float)
    weights = np.asarray(weights, dtype=float)
    star = np.outer(np.ones(m), target)
    R = [rng.random((m, m)) for _ in range(n - 1)]
    R = [r / r.sum(axis=1, keepdims=True) for r in R]
    drift = sum(w * (star - r) for w, r in zip(weights[:-1], R))
    # largest eta keeping star + eta/w_n * drift >= 0, halved for margin
    neg = drift < 0
    limit = np.min(star[neg] * weights[-1] / -drift[neg]) if np.any(neg) else 1.0
    eta = min(1.0, 0.5 * limit)
    P = [(1 - eta) * star + eta * r for r in R]
    P.append(star + eta / weights[-1] * drift)
    return P


def markov(n: int = 4, m: int = 3, target=MARKOV_TARGET, seed: int = 0) -> Example:
    """Mix given transition matrices so the chain's steady state hits ``target``."""
    P0 = markov_matrices(n, m, target, seed=seed)
    target = np.asarray(target, dtype=float)
    x = Variable(m, name="x")
    P = Variable((m, m), name="P")
    theta = Variable(n, name="theta")
    mix = fn.add(*[theta[k] * P0[k] for k in range(n)])
    cons = [theta >= 0, fn.sum_entries(theta) == 1, x >= 0, fn.sum_entries(x) == 1,
            P == mix, P.T @ x == x]
    p = Problem(fn.norm2(x - target.reshape(-1, 1)), cons)
    return Example("markov", p, {}, "steady state of a mixed Markov chain",
                   {"P0": P0, "target": target})


def blind_deconv(m: int = 100, n: int = 40, M: float = 10.0, alpha: float = 0.28,
                 nonzeros: int | None = None, seed: int = 0, ones_init: bool = True) -> Example:
    """Recover y and sparse x from d = conv(y0, x0) with a planted sparse x0."""
    rng = np.random.default_rng(seed)
    k = nonzeros if nonzeros is not None else max(1, n // 8)
    x0 = np.zeros(n)
    x0[rng.choice(n, size=k, replace=False)] = rng.standard_normal(k) + np.sign(rng.standard_normal(k))
    y0 = rng.uniform(-1.0, 1.0, m) * M / 2
    d = np.convolve(y0, x0)
    y = Variable(m, name="y")
    x = Variable(n, name="x")
    cost = fn.norm2(fn.conv(y, x) - d.reshape(-1, 1)) + fn.norm1(x) * alpha
    p = Problem(cost, [fn.norm_inf(y) <= M])
    if ones_init:
        y.value = np.ones(m)
        x.value = np.ones(n)
    return Example("blind-deconv", p, {}, "blind deconvolution with a sparse factor",
                   {"d": d, "x0": x0, "y0": y0})


EXAMPLES: dict[str, Callable[[], Example]] = {
    "basic": basic,
    "fractional-1": lambda: fractional(1),
    "fractional-2": lambda: fractional(2),
    "transceiver": transceiver,
    "dictionary": dictionary,
    "bilinear-motor": bilinear_motor,
    "resistance": resistance,
    "markov": markov,
    "blind-deconv": blind_deconv,
}


def get_example(name: str) -> Example:
    try:
        return EXAMPLES[name]()
    except KeyError:
        raise KeyError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}") from None


__all__ = ["Example", "EXAMPLES", "get_example", "basic", "fractional", "fractional_optimum",
           "transceiver", "dictionary", "bilinear_motor", "resistance", "markov",
           "markov_matrices", "blind_deconv"]
