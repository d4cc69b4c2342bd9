"""Probes from nonsmooth analysis.

* semi-inner-product brackets ``[x, y]_+-`` and one-sided Lipschitz estimates;
* Lipschitz-ratio probes;
* ``kuratowski_n``: a computable proxy for the Kuratowski measure of
  noncompactness. The true measure of any finite set is 0, so we use the
  fixed-block version: the least achievable maximum block diameter over
  partitions into at most ``nblocks`` blocks;
* condensing ratios and a convex-hull membership test for integrals.

Vectors are plain Euclidean arrays. For grid functions pass ``P x`` (see
:func:`exactctl.space.p_forward`) or note that every ratio computed here is
invariant under the constant factor ``h`` in the L^2 inner product.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DegeneratePair, DegenerateSet, ZeroScale

EXACT_LIMIT = 14
PAIR_TOL = 1e-14


@dataclass(frozen=True)
class ProbeReport:
    """Maximum of a sampled quantity, with the argument that attains it."""

    estimate: float
    witness: Any
    samples: int
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"estimate": self.estimate, "witness": _jsonable(self.witness),
               "samples": self.samples, "seed": self.seed}
        out.update(self.extra)
        return out

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (list, tuple)):
        return [_jsonable(o) for o in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# --------------------------------------------------------------------------- brackets


def bracket(x, y, side="plus"):
    """``[x, y]_+-`` in a real inner product space.

    ``<x, y>/||x||`` for ``x != 0`` (both one-sided limits agree there) and
    ``+-||y||`` at ``x = 0``.
    """
    if side not in ("plus", "minus"):
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        ny = float(np.linalg.norm(y))
        return ny if side == "plus" else -ny
    return float(x @ y / nx)


def bracket_quotient(x, y, side="plus", h=1e-7):
    """Difference quotient ``(||x + h y|| - ||x||)/h`` with ``h`` signed by ``side``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    hh = abs(h) if side == "plus" else -abs(h)
    return float((np.linalg.norm(x + hh * y) - np.linalg.norm(x)) / hh)


# --------------------------------------------------------------------------- probes


def _pairs_from(sampler, count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield sampler(rng)


def estimate_one_sided_constant(fmap, sampler, count, seed=0):
    """Max over sampled pairs of ``<x - y, f(x) - f(y)> / ||x - y||^2``.

    ``sampler(rng)`` must return a pair ``(x, y)``; it is driven by
    ``numpy.random.default_rng(seed)``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    best, witness = -np.inf, None
    for x, y in _pairs_from(sampler, count, seed):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = x - y
        dd = float(d @ d)
        if np.sqrt(dd) <= PAIR_TOL:
            raise DegeneratePair("sampled pair coincides", norm=float(np.sqrt(dd)))
        val = float(d @ (np.asarray(fmap(x)) - np.asarray(fmap(y)))) / dd
        if val > best:
            best, witness = val, (x, y)
    return ProbeReport(best, witness, count, seed)


def lipschitz_ratio_probe(fmap, pairs, seed=None):
    """Max of ``||f(x) - f(y)|| / ||x - y||`` over an explicit pair stream."""
    best, witness, count = -np.inf, None, 0
    for x, y in pairs:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dist = float(np.linalg.norm(x - y))
        if dist <= PAIR_TOL:
            raise DegeneratePair("pair coincides", norm=dist)
        val = float(np.linalg.norm(np.asarray(fmap(x)) - np.asarray(fmap(y)))) / dist
        count += 1
        if val > best:
            best, witness = val, (x, y)
    if count == 0:
        raise ValueError("empty pair stream")
    return ProbeReport(best, witness, count, seed)


def midpoint_convexity_defect(func, a, b, count=64, seed=0):
    """Largest pointwise violation of midpoint convexity of ``func`` on [a, b].

    Uses the positive-cone order of the codomain: ``func`` is midpoint convex
    when ``func((s+r)/2) <= (func(s) + func(r))/2`` componentwise. Returns the
    maximum positive violation (0 means no violation found). Diagnostic only.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        s, r = rng.uniform(a, b, size=2)
        mid = np.asarray(func(0.5 * (s + r)), dtype=float)
        avg = 0.5 * (np.asarray(func(s), dtype=float) + np.asarray(func(r), dtype=float))
        worst = max(worst, float(np.max(mid - avg, initial=0.0)))
    return worst


# --------------------------------------------------------------------------- MNC proxy


def _as_points(A):
    pts = np.asarray(A, dtype=float)
    if pts.size == 0:
        return np.zeros((0, 1))
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def _distances(pts):
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _greedy_partition(D, k):
    """Farthest-point centres, nearest-centre assignment; returns max block diameter."""
    m = D.shape[0]
    centres = [0]
    mind = D[0].copy()
    while len(centres) < min(k, m):
        nxt = int(np.argmax(mind))
        if mind[nxt] == 0.0:
            break
        centres.append(nxt)
        mind = np.minimum(mind, D[nxt])
    label = np.argmin(D[:, centres], axis=1)
    worst = 0.0
    for c in range(len(centres)):
        idx = np.flatnonzero(label == c)
        if idx.size > 1:
            worst = max(worst, float(D[np.ix_(idx, idx)].max()))
    return worst


def _exact_partition(D, k):
    """Branch and bound over block assignments in lexicographic order."""
    m = D.shape[0]
    best = [_greedy_partition(D, k)]
    blocks: list[list[int]] = []

    def place(i, current):
        if current >= best[0]:
            return
        if i == m:
            best[0] = current
            return
        for b in blocks:
            grown = max(current, max(D[i, j] for j in b))
            if grown < best[0]:
                b.append(i)
                place(i + 1, grown)
                b.pop()
        if len(blocks) < k:
            blocks.append([i])
            place(i + 1, current)
            blocks.pop()

    # a cover with the greedy value is always available, so "best" stays feasible
    place(0, 0.0)
    return best[0]


def kuratowski_bound(A, nblocks):
    """``(value, exact)``: the block-partition proxy and whether it is exact.

    Sets of at most 14 points are solved exactly; larger sets get the greedy
    farthest-point partition, an upper bound.
    """
    if nblocks < 1:
        raise ValueError("nblocks must be >= 1")
    pts = _as_points(A)
    m = pts.shape[0]
    if m <= 1:
        return 0.0, True
    D = _distances(pts)
    if m <= nblocks:
        return 0.0, True
    if m <= EXACT_LIMIT:
        return float(_exact_partition(D, nblocks)), True
    return float(_greedy_partition(D, nblocks)), False


def kuratowski_n(A, nblocks):
    """Least max-block-diameter over partitions of ``A`` into ``<= nblocks`` blocks."""
    return kuratowski_bound(A, nblocks)[0]


def kuratowski_bruteforce(A, nblocks):
    """Enumerate every set partition (small sets only); an independent oracle."""
    pts = _as_points(A)
    m = pts.shape[0]
    if m <= 1:
        return 0.0
    D = _distances(pts)
    best = np.inf
    # restricted-growth strings enumerate each set partition exactly once
    for labels in itertools.product(range(nblocks), repeat=m):
        if labels[0] != 0 or any(labels[i] > max(labels[:i]) + 1 for i in range(1, m)):
            continue
        worst = 0.0
        for b in set(labels):
            idx = [i for i in range(m) if labels[i] == b]
            if len(idx) > 1:
                worst = max(worst, float(D[np.ix_(idx, idx)].max()))
        best = min(best, worst)
    return float(best)


def condensing_ratio(fmap, sets, nblocks):
    """Max over sets of ``kuratowski_n(f(A)) / kuratowski_n(A)``."""
    best, witness = -np.inf, None
    for idx, A in enumerate(sets):
        pts = _as_points(A)
        a = kuratowski_n(pts, nblocks)
        if a <= 1e-12:
            raise DegenerateSet(f"set {idx} has proxy measure {a}", index=idx, value=a)
        image = np.array([np.asarray(fmap(p), dtype=float) for p in pts])
        val = kuratowski_n(image, nblocks) / a
        if val > best:
            best, witness = val, idx
    return ProbeReport(best, witness, len(sets), extra={"nblocks": nblocks, "proxy": True})


# --------------------------------------------------------------------------- hull membership


def _affine_minimizer(P):
    """Weights ``a`` (summing to 1) of the min-norm point of the affine hull of the columns of ``P``."""
    base = P[:, 0]
    D = P[:, 1:] - base[:, None]
    beta = np.linalg.lstsq(D, -base, rcond=None)[0] if D.shape[1] else np.zeros(0)
    return np.concatenate([[1.0 - beta.sum()], beta])


def hull_distance(q, samples, tol=None, max_iter=10_000):
    """Distance from ``q`` to ``conv(samples + {0})``, with certificates.

    Wolfe's minimum-norm-point algorithm on the translated points
    ``p_i - q`` (``p`` ranging over the samples and the origin). At every
    major cycle the current point ``x`` gives the upper bound ``||x||`` and the
    supporting hyperplane through ``x`` gives the lower bound
    ``max(min_i <x, p_i - q>, 0) / ||x||``. Iteration stops when the upper
    bound reaches ``tol``, the lower bound exceeds it, or the Frank-Wolfe gap
    ``||x||^2 - min_i <x, p_i - q>`` certifies ``||x|| - dist <= tol / 10``.
    With ``tol=None`` it runs to convergence and returns the distance itself.

    Returns ``(upper, lower, weights)`` where ``weights`` holds the convex
    weights of the samples (the origin takes the remainder).
    """
    S = np.asarray(samples, dtype=float)
    if S.ndim == 1:
        S = S[:, None]
    q = np.asarray(q, dtype=float).ravel()
    pts = np.vstack([S, np.zeros((1, q.size))]) - q     # rows: translated points
    m = pts.shape[0]
    scale = max(float(np.max(np.abs(pts))), 1e-300)
    eps = 1e-12

    j0 = int(np.argmin(np.einsum("ij,ij->i", pts, pts)))
    active = [j0]
    lam = np.array([1.0])
    x = pts[j0].copy()
    upper, lower = float(np.linalg.norm(x)), 0.0
    for _ in range(max_iter):
        xx = float(x @ x)
        upper = min(upper, np.sqrt(xx))
        proj = pts @ x
        j = int(np.argmin(proj))
        if xx > 0:
            lower = max(lower, max(float(proj[j]), 0.0) / np.sqrt(xx))
        gap = xx - float(proj[j])
        decided = tol is not None and (upper <= tol or lower > tol)
        floor = 1e-15 * scale * scale if tol is None else max(0.1 * tol * upper, 1e-15 * scale * scale)
        if decided or gap <= floor:
            break
        if j in active:
            break
        active.append(j)
        lam = np.append(lam, 0.0)
        while True:
            P = pts[active].T
            alpha = _affine_minimizer(P)
            if np.all(alpha > eps):
                lam = alpha
                break
            neg = alpha <= eps
            denom = lam[neg] - alpha[neg]
            ratios = np.where(denom > 0, lam[neg] / np.where(denom > 0, denom, 1.0), np.inf)
            theta = min(1.0, float(np.min(ratios)))
            lam = theta * alpha + (1 - theta) * lam
            keep = lam > eps
            if keep.all():
                keep[int(np.argmin(lam))] = False
            active = [a for a, k in zip(active, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
        x = pts[active].T @ lam
    upper = min(upper, float(np.linalg.norm(x)))
    weights = np.zeros(m)
    weights[active] = lam
    return upper, lower, weights[:-1]


def hull_membership(point, anchor, scale, samples, tol):
    """Whether ``(point - anchor)/scale`` lies within ``tol`` of ``conv(samples + {0})``."""
    if not scale > 0:
        raise ZeroScale(f"scale must be positive, got {scale}", scale=scale)
    q = (np.asarray(point, dtype=float) - np.asarray(anchor, dtype=float)) / scale
    upper, lower, _ = hull_distance(q, samples, tol)
    if upper <= tol:
        return True
    if lower > tol:
        return False
    return bool(upper <= tol)


def diameter(A):
    pts = _as_points(A)
    if pts.shape[0] <= 1:
        return 0.0
    return float(_distances(pts).max())
