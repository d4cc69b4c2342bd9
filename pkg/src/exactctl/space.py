"""Discrete L^2(0, 1) on a uniform cell grid and its isometry onto l^2.

Grid values are cell averages; the cell midpoints are ``xi_i = (i + 1/2) h``.
The inner product is ``<x, y> = h * sum(x_i * y_i)``.

The identification ``P`` with (truncated) l^2 uses the normalized indicator
basis ``e_i = 1_{cell i} / sqrt(h)``, so ``P`` is coordinatewise
multiplication by ``sqrt(h)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch


def midpoints(n):
    """Cell midpoints of the uniform ``n``-cell grid on [0, 1]."""
    return (np.arange(n) + 0.5) / n


def l2_inner(x, y):
    """Discrete L^2 inner product along the last axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise DimensionMismatch(f"grid sizes differ: {x.shape[-1]} vs {y.shape[-1]}")
    return np.sum(x * y, axis=-1) / x.shape[-1]


def l2_norm(x):
    """Discrete L^2 norm along the last axis."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.sum(x * x, axis=-1) / x.shape[-1])


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Cell averages of an L^2(0, 1) function on ``n`` uniform cells."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("GridFunction needs a non-empty 1-d array of values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n))

    @classmethod
    def sample(cls, func, n):
        """Midpoint sampling of ``func`` (vectorized over xi)."""
        return cls(np.asarray(func(midpoints(n)), dtype=float) * np.ones(n))

    @property
    def n(self):
        return self.values.size

    @property
    def h(self):
        return 1.0 / self.values.size

    @property
    def xi(self):
        return midpoints(self.n)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return self.n

    def _check(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        if other.n != self.n:
            raise DimensionMismatch(f"grid sizes differ: {self.n} vs {other.n}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return GridFunction(self.values + other.values)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return GridFunction(self.values - other.values)

    def __mul__(self, scalar):
        return GridFunction(self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(-self.values)

    def inner(self, other):
        self._check(other)
        return float(l2_inner(self.values, other.values))

    def norm(self):
        return float(l2_norm(self.values))


@dataclass(frozen=True, eq=False)
class SeqVector:
    """Truncated l^2 coordinates."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1:
            raise ValueError("SeqVector needs a 1-d array")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coeffs, dtype=dtype)

    def __len__(self):
        return self.coeffs.size

    def norm(self):
        return float(np.linalg.norm(self.coeffs))


def p_forward(x: GridFunction) -> SeqVector:
    """Isometry L^2(0, 1) -> l^2 in the normalized indicator basis."""
    return SeqVector(x.values * np.sqrt(x.h))


def p_inverse(a: SeqVector) -> GridFunction:
    n = len(a)
    return GridFunction(a.coeffs / np.sqrt(1.0 / n))


def apply_operator(B, u):
    """Apply a bounded operator given as a multiplier profile (1-d) or a matrix (2-d).

    ``u`` may carry leading batch axes; the operator acts on the last one.
    """
    B = np.asarray(B, dtype=float)
    u = np.asarray(u, dtype=float)
    if B.ndim == 1:
        if u.shape[-1] != B.shape[0]:
            raise DimensionMismatch(f"operator size {B.shape[0]} vs operand {u.shape[-1]}")
        return B * u
    if u.shape[-1] != B.shape[1]:
        raise DimensionMismatch(f"operator columns {B.shape[1]} vs operand {u.shape[-1]}")
    return u @ B.T


def apply_operator_adjoint(B, y):
    """Adjoint of :func:`apply_operator` (the ``h`` factors of the inner product cancel)."""
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    if B.ndim == 1:
        if y.shape[-1] != B.shape[0]:
            raise DimensionMismatch(f"operator size {B.shape[0]} vs operand {y.shape[-1]}")
        return B * y
    if y.shape[-1] != B.shape[0]:
        raise DimensionMismatch(f"operator rows {B.shape[0]} vs operand {y.shape[-1]}")
    return y @ B


def operator_shape(B):
    """Return ``(state_dim, control_dim)`` of a multiplier profile or matrix."""
    B = np.asarray(B)
    if B.ndim == 1:
        return B.shape[0], B.shape[0]
    return B.shape
