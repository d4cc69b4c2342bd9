"""Linear exact controllability via the controllability Gramian.

With the trapezoid quadrature of the time grid, the input map is

    W(u) = sum_j w_j Q(T - s_j) B u(s_j)

and its minimum-energy right inverse (energy ``sum_j w_j ||u_j||^2``) is
``u(s_j) = B* Q*(T - s_j) G^{-1} y`` with the discrete Gramian

    G = sum_j w_j Q(T - s_j) B B* Q*(T - s_j).

So ``W(W^{-1} y) = y`` holds up to rounding, not merely to O(dt).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .dynamics import TimeGrid, Trajectory, mild_solve, pickard_apply
from .errors import DimensionMismatch, KinkProximity, NotControllable, OffGridTime
from .semigroup import SemigroupHandle, sg_adjoint_apply, sg_apply
from .space import apply_operator, apply_operator_adjoint, l2_norm, midpoints, operator_shape

COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Control samples ``u(j dt)`` stored row-wise, shape ``(nt + 1, m)``."""

    grid: TimeGrid
    inputs: np.ndarray

    def __post_init__(self):
        u = np.array(self.inputs, dtype=float)
        if u.ndim != 2 or u.shape[0] != self.grid.nt + 1:
            raise DimensionMismatch(
                f"expected {self.grid.nt + 1} control samples, got array of shape {u.shape}")
        u.setflags(write=False)
        object.__setattr__(self, "inputs", u)

    def energy(self):
        """Trapezoid-weighted ``int_0^T ||u(s)||^2 ds`` in the grid L^2 norm."""
        return float(self.grid.weights() @ (l2_norm(self.inputs) ** 2))


@dataclass(frozen=True, eq=False)
class GramianOperator:
    matrix: np.ndarray
    T: float
    cond_estimate: float
    min_eig: float
    max_eig: float

    @property
    def n(self):
        return self.matrix.shape[0]

    def diagnostics(self):
        return {"T": self.T, "n": self.n, "cond_estimate": self.cond_estimate,
                "min_eig": self.min_eig, "max_eig": self.max_eig}


def _taus(grid):
    # T - s_j for j = 0..nt, built from integer multiples so the shift stays aligned
    return [(grid.nt - j) * grid.dt for j in range(grid.nt + 1)]


def assemble_gramian(S: SemigroupHandle, B, grid: TimeGrid, method="adjoint") -> GramianOperator:
    """Trapezoid-weighted Gramian ``sum_j w_j Q(T-s_j) B B* Q*(T-s_j)``.

    ``method="adjoint"`` pushes the identity through ``sg_adjoint_apply``,
    ``B B*`` and ``sg_apply``; ``method="matrix"`` forms ``E = Q(tau)`` (and
    ``E B``) explicitly and uses transposes. Both must agree; the second needs
    a dense generator or builds the shift matrix.
    """
    n, _ = operator_shape(B)
    w = grid.weights()
    G = np.zeros((n, n))
    eye = np.eye(n)
    for wj, tau in zip(w, _taus(grid)):
        if wj == 0.0:
            continue
        if method == "adjoint":
            Y = sg_adjoint_apply(S, tau, eye)          # row c holds Q*(tau) e_c
            Z = apply_operator(B, apply_operator_adjoint(B, Y))
            G += wj * sg_apply(S, tau, Z).T
        elif method == "matrix":
            E = sg_apply(S, tau, eye).T                # column c holds Q(tau) e_c
            EB = E @ (np.diag(B) if np.ndim(B) == 1 else np.asarray(B))
            G += wj * (EB @ EB.T)
        else:
            raise ValueError(f"unknown assembly method {method!r}")
    G = 0.5 * (G + G.T)
    eig = np.linalg.eigvalsh(G)
    lo, hi = float(eig[0]), float(eig[-1])
    cond = hi / lo if lo > 0 and hi > 0 else float("inf")
    return GramianOperator(G, grid.T, cond, lo, hi)


class MinNormInverse:
    """Minimum-energy right inverse of ``W = L(T) B`` on a fixed grid.

    Assembles and factors the Gramian once; concurrent solves are safe.
    """

    def __init__(self, S: SemigroupHandle, B, grid: TimeGrid, gramian: GramianOperator | None = None):
        self.S = S
        self.B = np.asarray(B, dtype=float)
        self.grid = grid
        self.gramian = gramian if gramian is not None else assemble_gramian(S, self.B, grid)
        if not self.gramian.cond_estimate <= COND_LIMIT:
            raise NotControllable(
                "Gramian condition number exceeds the controllability threshold",
                cond_estimate=self.gramian.cond_estimate, limit=COND_LIMIT,
                suggestion="increase T, enlarge the control support, or coarsen the grid")
        try:
            self._chol = cho_factor(self.gramian.matrix, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NotControllable(f"Gramian is not positive definite: {exc}",
                                  cond_estimate=self.gramian.cond_estimate) from exc

    @property
    def n(self):
        return self.gramian.n

    def multiplier(self, y, tol=1e-12, max_refine=5):
        """``G^{-1} y`` by Cholesky with iterative refinement."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.n,):
            raise DimensionMismatch(f"target has shape {y.shape}, expected ({self.n},)")
        G = self.gramian.matrix
        lam = cho_solve(self._chol, y)
        scale = np.linalg.norm(y)
        for _ in range(max_refine):
            r = y - G @ lam
            if np.linalg.norm(r) <= tol * scale:
                break
            lam = lam + cho_solve(self._chol, r)
        return lam

    def control_value(self, s, lam):
        """``B* Q*(T - s) lam`` for any ``s <= T`` (the shift needs ``T - s`` aligned)."""
        tau = self.grid.T - s
        if tau < -1e-12:
            raise OffGridTime(f"control formula needs s <= T, got s={s}", s=s)
        return apply_operator_adjoint(self.B, sg_adjoint_apply(self.S, max(tau, 0.0), lam))

    def control_from_multiplier(self, lam) -> ControlSignal:
        rows = [apply_operator_adjoint(self.B, sg_adjoint_apply(self.S, tau, lam))
                for tau in _taus(self.grid)]
        return ControlSignal(self.grid, np.array(rows))

    def control(self, y) -> ControlSignal:
        return self.control_from_multiplier(self.multiplier(y))


def min_norm_control(S: SemigroupHandle, B, y, grid: TimeGrid) -> ControlSignal:
    """Minimum-energy control steering 0 to ``y`` at time ``grid.T``."""
    return MinNormInverse(S, B, grid).control(np.asarray(y, dtype=float))


def reachability_apply(S: SemigroupHandle, B, u: ControlSignal):
    """``W(u) = int_0^T Q(T - s) B u(s) ds``: the f = 0, z0 = 0 mild solution at T."""
    n, _ = operator_shape(B)
    return mild_solve(S, B, None, u, u.grid, np.zeros(n)).final


def _onset_time(S, ctx, lam):
    """First time at which the shift-model control becomes nonzero."""
    mask = np.abs(lam) > 1e-14 * max(np.max(np.abs(lam)), 1e-300)
    if not mask.any():
        return None
    xi_support = midpoints(lam.size)[np.argmax(mask)] - 0.5 / lam.size
    return ctx.grid.T - 1.0 + xi_support


def k_identity_check(ctx: MinNormInverse, x, t, hstep):
    """Defect of ``d/dt int_0^t Q(t-s) B u_x(s) ds = Q(t) B u_x(0) + L(t) B u_x'``.

    ``u_x = W^{-1} x`` is the minimum-norm control; its derivative is taken by
    central differences on the time grid, and the left side by a central
    difference of half-width ``hstep`` (a multiple of ``dt``). Both
    convolutions use the grid trapezoid rule.
    """
    grid = ctx.grid
    dt = grid.dt
    x = np.asarray(x, dtype=float)
    q = round(hstep / dt)
    if q < 1 or abs(hstep - q * dt) > 1e-9 * dt:
        raise OffGridTime(f"hstep={hstep} must be a positive multiple of dt={dt}", hstep=hstep)
    j = grid.index_of(t)
    if j - q < 0 or j + q > grid.nt:
        raise OffGridTime(f"t +- hstep leaves [0, T]: t={t}, hstep={hstep}", t=t, hstep=hstep)
    lam = ctx.multiplier(x) if np.any(x) else np.zeros_like(x)
    if ctx.S.is_shift:
        onset = _onset_time(ctx.S, ctx, lam)
        if onset is not None and abs(t - onset) <= 2 * dt:
            raise KinkProximity(f"t={t} is within 2 dt of the control onset {onset}",
                                t=t, onset=onset)

    u = np.array([ctx.control_value(i * dt, lam) for i in range(-1, grid.nt + 1)])
    Bu = apply_operator(ctx.B, u[1:])
    K = Trajectory(grid, Bu)
    lhs = (pickard_apply(ctx.S, K, (j + q) * dt) - pickard_apply(ctx.S, K, (j - q) * dt)) / (2 * q * dt)

    # u'(s_i) for i = 0..j from samples i-1 and i+1 (sample -1 via the control formula)
    du = np.zeros_like(u[1:])
    du[: j + 1] = (u[2 : j + 3] - u[0 : j + 1]) / (2 * dt)
    Bdu = apply_operator(ctx.B, du)
    rhs = sg_apply(ctx.S, t, Bu[0]) + pickard_apply(ctx.S, Trajectory(grid, Bdu), t)
    return float(l2_norm(lhs - rhs))
