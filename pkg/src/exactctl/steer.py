"""Fixed-point steering of the semilinear system to a target state.

Iterates on the trajectory ``z``:

    u_k     = W^{-1}(x_T - L(T) f z_k)
    z_{k+1} = (1 - omega) z_k + omega * mild_solve(u_k)

starting from ``z_0 = 0``. Any fixed point reaches ``x_T`` exactly at ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control import ControlSignal, MinNormInverse
from .dynamics import TimeGrid, Trajectory, mild_solve, pickard_apply
from .errors import NonConvergent
from .semigroup import SemigroupHandle
from .space import l2_norm


@dataclass(frozen=True)
class SteeringOptions:
    max_iter: int = 200
    relaxation: float = 1.0
    tol_fixed_point: float = 1e-8
    divergence_factor: float = 1e6

    def __post_init__(self):
        if isinstance(self.max_iter, bool) or not isinstance(self.max_iter, int) or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not 0 < self.relaxation <= 1:
            raise ValueError("relaxation must lie in (0, 1]")
        if not self.tol_fixed_point > 0:
            raise ValueError("tol_fixed_point must be positive")
        if not self.divergence_factor > 0:
            raise ValueError("divergence_factor must be positive")


@dataclass(frozen=True, eq=False)
class SteeringResult:
    trajectory: Trajectory
    control: ControlSignal
    iterations: int
    terminal_residual: float
    fixed_point_gap: float
    multiplier: np.ndarray
    gap_history: tuple = ()

    def summary(self):
        return {
            "iterations": self.iterations,
            "terminal_residual": self.terminal_residual,
            "fixed_point_gap": self.fixed_point_gap,
            "control_energy": self.control.energy(),
        }


def _apply_rows(f, states):
    try:
        out = np.asarray(f(states), dtype=float)
        if out.shape == states.shape:
            return out
    except (ValueError, TypeError):
        pass
    return np.array([f(row) for row in states])


def steer(S: SemigroupHandle, B, f, x_T, grid: TimeGrid, opts: SteeringOptions | None = None,
          inverse: MinNormInverse | None = None) -> SteeringResult:
    """Steer ``z(0) = 0`` to ``x_T`` at ``grid.T`` under ``z' = Az + Bu + f(z)``.

    Raises
    ------
    NotControllable
        From the linear Gramian solve.
    NonConvergent
        When the gap exceeds ``divergence_factor * ||x_T||`` or ``max_iter``
        is exhausted. Existence of a fixed point does not imply this
        iteration converges; a smaller relaxation often helps.
    """
    opts = opts or SteeringOptions()
    x_T = np.asarray(x_T, dtype=float)
    ctx = inverse or MinNormInverse(S, B, grid)
    n = x_T.size
    target_norm = float(l2_norm(x_T))
    omega = opts.relaxation

    z = np.zeros((grid.nt + 1, n))
    history = []
    for it in range(1, opts.max_iter + 1):
        if f is None:
            defect = x_T
        else:
            fz = Trajectory(grid, _apply_rows(f, z))
            defect = x_T - pickard_apply(S, fz, grid.T)
        lam = ctx.multiplier(defect)
        u = ctx.control_from_multiplier(lam)
        sim = mild_solve(S, ctx.B, f, u, grid, np.zeros(n))
        # without f the map is constant in z, so one pass is its fixed point
        gap = 0.0 if f is None else float(np.max(l2_norm((1 - omega) * z + omega * sim.states - z)))
        z = (1 - omega) * z + omega * sim.states
        history.append(gap)
        if gap <= opts.tol_fixed_point:
            residual = float(l2_norm(sim.final - x_T))
            return SteeringResult(sim, u, it, residual, gap, lam, tuple(history))
        if not np.isfinite(gap) or gap > opts.divergence_factor * max(target_norm, 1e-300):
            raise NonConvergent("steering iteration diverged", iterations=it, gap=gap,
                                suggestion="reduce the relaxation parameter")
    raise NonConvergent("steering iteration did not converge within max_iter",
                        iterations=opts.max_iter, gap=history[-1],
                        suggestion="reduce the relaxation parameter or raise max_iter")
