"""Quick invariant suite behind ``exactctl selftest``."""

from __future__ import annotations

import time

import numpy as np

from . import analysis
from .control import MinNormInverse, assemble_gramian, reachability_apply
from .dynamics import TimeGrid, mild_solve, schmidt_ivp_solve
from .semigroup import SemigroupHandle, sg_adjoint_apply, sg_apply
from .space import GridFunction, l2_inner, l2_norm, midpoints, p_forward
from .steer import steer
from .transport import (
    F_BOUND,
    TransportNonlinearity,
    dissipativity_probe,
    lipschitz_ladder,
)


def _nilpotency(rng):
    S = SemigroupHandle.left_shift()
    worst = 0.0
    for n in (8, 33, 64):
        x = rng.standard_normal((20, n))
        for t in (1.0, 1.5, 2.0):
            worst = max(worst, float(np.max(np.abs(sg_apply(S, t, x)))))
        a, b = 3 / n, 5 / n
        law = sg_apply(S, a + b, x) - sg_apply(S, a, sg_apply(S, b, x))
        worst = max(worst, float(np.max(np.abs(law))))
    return worst == 0.0, worst


def _isometry(rng):
    x = GridFunction(rng.standard_normal(64))
    err = abs(float(np.linalg.norm(p_forward(x).coeffs)) - x.norm())
    return err <= 1e-12 * (1 + x.norm()), err


def _adjoint(rng):
    S = SemigroupHandle.left_shift()
    x, y = rng.standard_normal(64), rng.standard_normal(64)
    err = abs(l2_inner(sg_apply(S, 0.25, x), y) - l2_inner(x, sg_adjoint_apply(S, 0.25, y)))
    return err <= 1e-12, err


def _gramian(rng):
    S = SemigroupHandle.left_shift()
    grid = TimeGrid.aligned(1.25, 64)
    G = assemble_gramian(S, np.ones(64), grid).matrix
    xi = midpoints(64)
    diag = float(np.max(np.abs(np.diag(G) - np.minimum(1.25, 1 - xi))))
    off = float(np.max(np.abs(G - np.diag(np.diag(G)))))
    return diag <= 3 * grid.dt and off <= 3 * grid.dt, max(diag, off)


def _linear(rng):
    S = SemigroupHandle.left_shift()
    grid = TimeGrid.aligned(1.25, 64)
    B = rng.uniform(0.5, 1.5, 64)
    ctx = MinNormInverse(S, B, grid)
    worst = 0.0
    for _ in range(5):
        y = rng.standard_normal(64)
        worst = max(worst, float(l2_norm(reachability_apply(S, B, ctx.control(y)) - y) / l2_norm(y)))
    return worst <= 1e-8, worst


def _bound(rng):
    f = TransportNonlinearity()
    worst = max(float(l2_norm(f(rng.standard_normal(64) * s))) for s in (0.1, 1, 10, 100))
    return worst <= F_BOUND, worst


def _dissipative(rng):
    est = dissipativity_probe(n=32, count=500, seed=1).estimate
    return est <= 1e-12, est


def _lipschitz(rng):
    rows = lipschitz_ladder(10_000)
    err = max(abs(r["ratio"] - r["sqrt_m"]) for r in rows)
    return err <= 1e-9, err


def _mnc(rng):
    val = analysis.kuratowski_n([0.0, 1.0, 2.0, 10.0], 2)
    return val == 2.0, val


def _schmidt(rng):
    traj = schmidt_ivp_solve(lambda t, x: -x, lambda t, x: np.ones_like(x),
                             TimeGrid(1.0, 1000), np.zeros(1))
    err = abs(float(traj.final[0]) - (1 - np.exp(-1)))
    return err <= 1e-6, err


def _steering(rng):
    S = SemigroupHandle.left_shift()
    grid = TimeGrid.aligned(1.25, 16)
    x_T = np.sin(np.pi * midpoints(16))
    res = steer(S, np.ones(16), TransportNonlinearity(), x_T, grid)
    again = mild_solve(S, np.ones(16), TransportNonlinearity(), res.control, grid, np.zeros(16))
    err = max(res.terminal_residual, float(np.max(np.abs(again.states - res.trajectory.states))))
    return err <= 1e-6 * (1 + l2_norm(x_T)), err


CHECKS = [
    ("shift nilpotency and semigroup law", _nilpotency),
    ("P isometry", _isometry),
    ("adjoint duality", _adjoint),
    ("Gramian diagonal law", _gramian),
    ("linear reconstruction", _linear),
    ("f uniform bound", _bound),
    ("f dissipativity", _dissipative),
    ("f non-Lipschitz ladder", _lipschitz),
    ("block-partition proxy", _mnc),
    ("IMEX closed form", _schmidt),
    ("semilinear steering", _steering),
]


def run_all(seed=0):
    """Run every check; returns a list of ``{name, passed, value, seconds}``."""
    out = []
    for name, check in CHECKS:
        rng = np.random.default_rng(seed)
        t0 = time.perf_counter()
        ok, value = check(rng)
        out.append({"name": name, "passed": bool(ok), "value": float(value),
                    "seconds": time.perf_counter() - t0})
    return out
