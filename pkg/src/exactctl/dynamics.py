"""Time-domain machinery: convolution with the semigroup, mild solutions,
and the IMEX splitting solver for ``x' = g(t, x) + k(t, x)``.

All quadratures are composite trapezoid rules on a uniform time grid. For the
shift semigroup the grid step must be a multiple of the cell width so that
``Q(t - s)`` is an exact index shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    ImplicitStageNonConvergent,
    InnerNonConvergent,
    MisalignedTime,
    OffGridTime,
)
from .semigroup import SemigroupHandle, sg_apply, sg_integral, shift_steps
from .space import apply_operator, l2_norm

INNER_TOL = 1e-12
INNER_MAXITER = 50


@dataclass(frozen=True)
class TimeGrid:
    T: float
    nt: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"horizon must be positive, got {self.T}")
        if int(self.nt) != self.nt or self.nt < 1:
            raise ValueError(f"step count must be a positive integer, got {self.nt}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "nt", int(self.nt))

    @classmethod
    def aligned(cls, T, n):
        """Grid on [0, T] with ``dt = h = 1/n``; needs ``T * n`` integral."""
        cells = T * n
        k = round(cells)
        if abs(cells - k) > 1e-9 * max(1.0, cells):
            raise MisalignedTime(f"T={T} is not a multiple of h=1/{n}", T=T, n=n)
        return cls(T, int(k))

    @property
    def dt(self):
        return self.T / self.nt

    @property
    def times(self):
        return np.arange(self.nt + 1) * self.dt

    def index_of(self, t):
        j = round(t / self.dt)
        if abs(t - j * self.dt) > 1e-9 * self.dt or not 0 <= j <= self.nt:
            raise OffGridTime(f"t={t!r} is not a node of the grid (dt={self.dt})", t=t, dt=self.dt)
        return int(j)

    def weights(self, j=None):
        """Trapezoid weights for ``int_0^{t_j}`` (default ``j = nt``)."""
        j = self.nt if j is None else j
        w = np.full(j + 1, self.dt)
        if j == 0:
            return np.zeros(1)
        w[0] = w[-1] = 0.5 * self.dt
        return w


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States ``z(j dt)`` stored row-wise, shape ``(nt + 1, n)``."""

    grid: TimeGrid
    states: np.ndarray

    def __post_init__(self):
        s = np.array(self.states, dtype=float)
        if s.ndim != 2 or s.shape[0] != self.grid.nt + 1:
            raise DimensionMismatch(
                f"expected {self.grid.nt + 1} states, got array of shape {s.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "states", s)

    @property
    def n(self):
        return self.states.shape[1]

    @property
    def final(self):
        return self.states[-1]

    def at(self, t):
        return self.states[self.grid.index_of(t)]

    def sup_norm(self):
        return float(np.max(l2_norm(self.states)))


def _step(S, dt, x):
    return sg_apply(S, dt, x)


def _check_shift_alignment(S, grid, n):
    if S.is_shift:
        shift_steps(grid.dt, n)


def pickard_trajectory(S: SemigroupHandle, z: Trajectory):
    """All values ``(Lz)(t_j) = int_0^{t_j} Q(t_j - s) z(s) ds``, trapezoid rule.

    Uses the stepwise recursion ``I_{j+1} = Q(dt)(I_j + dt/2 z_j) + dt/2 z_{j+1}``,
    which equals the global composite trapezoid sum by the semigroup law.
    """
    grid = z.grid
    _check_shift_alignment(S, grid, z.n)
    dt = grid.dt
    out = np.zeros_like(z.states)
    for j in range(grid.nt):
        out[j + 1] = _step(S, dt, out[j] + 0.5 * dt * z.states[j]) + 0.5 * dt * z.states[j + 1]
    return out


def pickard_apply(S: SemigroupHandle, z: Trajectory, t):
    """``(Lz)(t) = int_0^t Q(t - s) z(s) ds`` at a grid time ``t``."""
    j = z.grid.index_of(t)
    _check_shift_alignment(S, z.grid, z.n)
    dt = z.grid.dt
    acc = np.zeros(z.n)
    for i in range(j):
        acc = _step(S, dt, acc + 0.5 * dt * z.states[i]) + 0.5 * dt * z.states[i + 1]
    return acc


def _resolve(f, b, c):
    """Solve ``z = b + c f(z)``.

    A state map may provide ``resolve(b, c)`` (an exact resolvent); otherwise
    plain fixed-point iteration is used.
    """
    if hasattr(f, "resolve"):
        return f.resolve(b, c)
    z = b + c * np.asarray(f(b), dtype=float)
    for _ in range(INNER_MAXITER):
        z_new = b + c * np.asarray(f(z), dtype=float)
        delta = float(np.max(np.abs(z_new - z)))
        z = z_new
        if delta <= INNER_TOL * (1.0 + float(np.max(np.abs(z)))):
            return z
    raise InnerNonConvergent(
        "fixed-point correction did not reach tolerance",
        last_correction=delta, max_iter=INNER_MAXITER,
        suggestion="reduce dt or supply a state map with a resolve(b, c) method")


def mild_solve(S: SemigroupHandle, B, f, u, grid: TimeGrid, z0):
    """March the mild solution ``z(t) = Q(t)z0 + int_0^t Q(t-s)[f(z(s)) + B u(s)] ds``.

    Trapezoid rule in time, semigroup applied exactly per step; the endpoint
    value ``f(z_{j+1})`` is handled implicitly, so the result satisfies the
    discrete integral equation exactly (not just to O(dt)).

    Parameters
    ----------
    B : array or None
        Multiplier profile or matrix; ignored when ``u`` is None.
    f : callable or None
        State map acting on the last axis.
    u : ControlSignal, array of shape (nt + 1, m), or None
    z0 : array-like or GridFunction
    """
    z0 = np.asarray(z0, dtype=float)
    n = z0.shape[-1]
    _check_shift_alignment(S, grid, n)
    dt = grid.dt
    c = 0.5 * dt

    Bu = None
    if u is not None:
        inputs = getattr(u, "inputs", u)
        ugrid = getattr(u, "grid", None)
        if ugrid is not None and ugrid != grid:
            raise DimensionMismatch("control signal lives on a different time grid")
        inputs = np.asarray(inputs, dtype=float)
        if inputs.shape[0] != grid.nt + 1:
            raise DimensionMismatch(f"control has {inputs.shape[0]} samples, grid needs {grid.nt + 1}")
        Bu = apply_operator(B, inputs)
        if Bu.shape[-1] != n:
            raise DimensionMismatch(f"B u has size {Bu.shape[-1]}, state has size {n}")

    states = np.zeros((grid.nt + 1, n))
    states[0] = z0
    F = np.zeros(n)
    if f is not None:
        F = F + f(z0)
    if Bu is not None:
        F = F + Bu[0]
    for j in range(grid.nt):
        b = _step(S, dt, states[j] + c * F)
        if Bu is not None:
            b = b + c * Bu[j + 1]
        if f is None:
            z = b
            F = np.zeros(n)
        else:
            z = _resolve(f, b, c)
            F = np.asarray(f(z), dtype=float)
        if Bu is not None:
            F = F + Bu[j + 1]
        states[j + 1] = z
    return Trajectory(grid, states)


def g_identity_check(S: SemigroupHandle, f, x, t, hstep):
    """Defect of ``d/dt int_0^t Q(t - s) f(x) ds = Q(t) f(x)``.

    The time integral is evaluated exactly (see :func:`sg_integral`) and the
    derivative by a central difference of half-width ``hstep``, so the
    returned L^2 defect is purely the finite-difference error: O(hstep) for
    the shift with piecewise-constant data, O(hstep^2) for a dense generator.
    ``t`` must be aligned for the shift; ``hstep`` is unrestricted.
    """
    v = np.asarray(f(np.asarray(x, dtype=float)), dtype=float)
    if hstep <= 0 or t - hstep < 0:
        raise OffGridTime(f"need 0 <= t - hstep, got t={t}, hstep={hstep}", t=t, hstep=hstep)
    target = sg_apply(S, t, v)
    fd = (sg_integral(S, t + hstep, v) - sg_integral(S, t - hstep, v)) / (2.0 * hstep)
    return float(l2_norm(fd - target))


def _newton(residual, y0, tol, maxiter=50):
    y = y0.copy()
    n = y.size
    for _ in range(maxiter):
        r = residual(y)
        if np.max(np.abs(r)) <= tol * (1.0 + np.max(np.abs(y))):
            return y
        J = np.empty((n, n))
        eps = 1e-7 * (1.0 + np.abs(y))
        for i in range(n):
            e = np.zeros(n)
            e[i] = eps[i]
            J[:, i] = (residual(y + e) - r) / eps[i]
        y = y - np.linalg.solve(J, r)
    return None


def schmidt_ivp_solve(g, k, grid: TimeGrid, x0):
    """Solve ``x' = g(t, x) + k(t, x)``, ``x(0) = x0`` by IMEX midpoint splitting.

    ``g`` (the dissipative part) is treated by the implicit midpoint rule and
    ``k`` (the bounded part) explicitly, giving the second-order scheme

        Y       = x_n + dt/2 * (g(t_n + dt/2, Y) + k(t_n, x_n))
        x_{n+1} = x_n + dt   * (g(t_n + dt/2, Y) + k(t_n + dt/2, Y))

    The stage equation is solved by fixed-point iteration, falling back to a
    finite-difference Newton iteration; failure of both raises
    :class:`ImplicitStageNonConvergent`.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    dt = grid.dt
    states = np.zeros((grid.nt + 1, x0.size))
    states[0] = x0
    for j in range(grid.nt):
        tn = j * dt
        tm = tn + 0.5 * dt
        xn = states[j]
        base = xn + 0.5 * dt * np.asarray(k(tn, xn), dtype=float)

        def stage(y):
            return base + 0.5 * dt * np.asarray(g(tm, y), dtype=float)

        y = stage(xn)
        ok = False
        for _ in range(INNER_MAXITER):
            y_new = stage(y)
            done = np.max(np.abs(y_new - y)) <= INNER_TOL * (1.0 + np.max(np.abs(y_new)))
            y = y_new
            if not np.all(np.isfinite(y)):
                break
            if done:
                ok = True
                break
        if not ok:
            y = _newton(lambda v: v - stage(v), xn.copy(), INNER_TOL)
            if y is None:
                raise ImplicitStageNonConvergent(
                    f"implicit midpoint stage failed at t={tn}",
                    t=tn, dt=dt, suggestion="reduce dt")
        states[j + 1] = xn + dt * (np.asarray(g(tm, y), dtype=float)
                                   + np.asarray(k(tm, y), dtype=float))
    return Trajectory(grid, states)
