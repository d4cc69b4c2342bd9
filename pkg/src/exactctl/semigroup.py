"""Evaluation of C0-semigroups on grid functions.

Two realizations:

* the nilpotent left shift ``(Q(t)x)(xi) = x(xi + t)`` (zero past xi = 1),
  evaluated as an exact index shift at times that are multiples of the cell
  width ``h = 1/n`` and as zero at any ``t >= 1``;
* ``exp(tA)`` for a small dense generator ``A``, used as an oracle.

Operands may carry leading batch axes; the semigroup acts on the last axis.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import DimensionMismatch, MisalignedTime

_ALIGN_TOL = 1e-12


class SemigroupKind(enum.Enum):
    NILPOTENT_LEFT_SHIFT = "nilpotent_left_shift"
    DENSE_MATRIX = "dense_matrix"


@dataclass(frozen=True, eq=False)
class SemigroupHandle:
    kind: SemigroupKind
    generator: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind is SemigroupKind.DENSE_MATRIX:
            A = np.array(self.generator, dtype=float)
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise DimensionMismatch(f"generator must be square, got shape {A.shape}")
            A.setflags(write=False)
            object.__setattr__(self, "generator", A)
        elif self.generator is not None:
            raise ValueError("the shift semigroup takes no generator")

    @classmethod
    def left_shift(cls):
        return cls(SemigroupKind.NILPOTENT_LEFT_SHIFT)

    @classmethod
    def dense(cls, A):
        return cls(SemigroupKind.DENSE_MATRIX, A)

    @property
    def is_shift(self):
        return self.kind is SemigroupKind.NILPOTENT_LEFT_SHIFT

    def propagator(self, t, adjoint=False):
        """Dense ``exp(tA)`` (or its transpose), cached per ``t``."""
        if self.is_shift:
            raise TypeError("propagator() is only defined for the dense realization")
        key = (float(t), bool(adjoint))
        E = self._cache.get(key)
        if E is None:
            E = expm(float(t) * self.generator)
            if adjoint:
                E = E.T.copy()
            E.setflags(write=False)
            self._cache[key] = E
        return E


def shift_steps(t, n):
    """Number of cells a shift by ``t`` moves on an ``n``-cell grid."""
    if t < 0:
        raise ValueError(f"semigroup time must be non-negative, got {t}")
    k = round(t * n)
    if abs(t - k / n) > _ALIGN_TOL * max(1.0, abs(t)):
        raise MisalignedTime(f"t={t!r} is not a multiple of h=1/{n}", t=t, n=n)
    return int(k)


def _shift(x, k, direction):
    out = np.zeros_like(x)
    n = x.shape[-1]
    if k >= n:
        return out
    if k == 0:
        out[...] = x
    elif direction > 0:
        out[..., : n - k] = x[..., k:]
    else:
        out[..., k:] = x[..., : n - k]
    return out


def _unwrap(x):
    from .space import GridFunction

    if isinstance(x, GridFunction):
        return x.values, GridFunction
    return np.asarray(x, dtype=float), None


def _check_dense(S, x):
    n = S.generator.shape[0]
    if x.shape[-1] != n:
        raise DimensionMismatch(f"generator is {n}x{n}, operand has size {x.shape[-1]}")


def _apply(S, t, x, adjoint):
    if t < 0:
        raise ValueError(f"semigroup time must be non-negative, got {t}")
    v, wrap = _unwrap(x)
    if S.is_shift:
        if t >= 1.0:
            out = np.zeros_like(v)      # nilpotent: exact for any t >= 1, aligned or not
        else:
            out = _shift(v, shift_steps(t, v.shape[-1]), -1 if adjoint else 1)
    else:
        _check_dense(S, v)
        if t == 0:
            out = v.copy()
        else:
            out = v @ S.propagator(t, adjoint=adjoint).T
    return wrap(out) if wrap else out


def sg_apply(S: SemigroupHandle, t, x):
    """Evaluate ``Q(t) x``.

    For the shift, ``result_i = x_{i + t/h}`` (zero past the right end). A
    ``t < 1`` must be a multiple of ``h`` or :class:`MisalignedTime` is
    raised; any ``t >= 1`` gives zero.
    """
    return _apply(S, t, x, adjoint=False)


def sg_adjoint_apply(S: SemigroupHandle, t, x):
    """Evaluate ``Q*(t) x``; for the shift this is the right shift padded by zero."""
    return _apply(S, t, x, adjoint=True)


def sg_integral(S: SemigroupHandle, t, x):
    """Exact ``int_0^t Q(tau) x dtau`` for any ``t >= 0``.

    The dense case uses the augmented exponential ``exp(t [[A, x], [0, 0]])``.
    For the shift, ``x`` is read as a piecewise-constant cell function and the
    continuous shift is projected back onto cell averages; the projected orbit
    is piecewise linear in ``tau`` with knots at multiples of ``h``, so the
    integral is a closed-form trapezoid sum plus one partial segment. At
    aligned ``t`` this coincides with the composite trapezoid rule of step ``h``.
    """
    if t < 0:
        raise ValueError(f"integration horizon must be non-negative, got {t}")
    v, wrap = _unwrap(x)
    if S.is_shift:
        out = _shift_integral(v, float(t))
    else:
        _check_dense(S, v)
        out = _dense_integral(S.generator, float(t), v)
    return wrap(out) if wrap else out


def _shift_integral(v, t):
    n = v.shape[-1]
    h = 1.0 / n
    t = min(t, 1.0)
    K = min(int(np.floor(t * n + 1e-12)), n)
    theta = max(t - K * h, 0.0) / h
    pad = np.zeros(v.shape[:-1] + (K + 2,))
    xp = np.concatenate([v, pad], axis=-1)
    c = np.concatenate([np.zeros(v.shape[:-1] + (1,)), np.cumsum(xp, axis=-1)], axis=-1)
    i = np.arange(n)
    # full segments [kh, (k+1)h], k < K
    full = h * (c[..., i + K + 1] - c[..., i] - 0.5 * xp[..., i] - 0.5 * xp[..., i + K])
    if K == 0:
        full = np.zeros_like(v)
    a = xp[..., i + K]
    b = xp[..., i + K + 1]
    end = (1.0 - theta) * a + theta * b
    partial = theta * h * 0.5 * (a + end)
    return full + partial


def _dense_integral(A, t, v):
    n = A.shape[0]
    flat = v.reshape(-1, n)
    p = flat.shape[0]
    M = np.zeros((n + p, n + p))
    M[:n, :n] = A
    M[:n, n:] = flat.T
    E = expm(t * M)
    return E[:n, n:].T.reshape(v.shape)
