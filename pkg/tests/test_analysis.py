import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import nnls

from exactctl.analysis import (
    bracket,
    bracket_quotient,
    condensing_ratio,
    diameter,
    estimate_one_sided_constant,
    hull_distance,
    hull_membership,
    kuratowski_bound,
    kuratowski_bruteforce,
    kuratowski_n,
    lipschitz_ratio_probe,
    midpoint_convexity_defect,
)
from exactctl.errors import DegeneratePair, DegenerateSet, ZeroScale
from exactctl.semigroup import SemigroupHandle, sg_apply
from exactctl.transport import TransportNonlinearity, lipschitz_witness


def gaussian_pairs(dim):
    return lambda rng: (rng.standard_normal(dim), rng.standard_normal(dim))


# --------------------------------------------------------------------------- brackets


def test_bracket_examples():
    assert bracket([3.0, 4.0], [1.0, 0.0]) == pytest.approx(0.6)
    assert bracket_quotient([3.0, 4.0], [1.0, 0.0], h=1e-6) == pytest.approx(0.6, abs=1e-6)
    assert bracket([1.0, 0.0], [1.0, 0.0]) == 1.0
    y = np.array([3.0, -4.0])
    assert bracket(np.zeros(2), y, "plus") == 5.0
    assert bracket(np.zeros(2), y, "minus") == -5.0


def test_bracket_rejects_bad_side():
    with pytest.raises(ValueError):
        bracket([1.0], [1.0], side="up")


@settings(max_examples=200)
@given(st.sampled_from([2, 64]), st.integers(0, 2**32 - 1))
def test_bracket_laws(dim, seed):
    rng = np.random.default_rng(seed)
    x, y, z = rng.standard_normal((3, dim))
    ny = np.linalg.norm(y)
    lo, hi = bracket(x, y, "minus"), bracket(x, y, "plus")
    assert lo <= hi + 1e-9
    assert hi <= ny + 1e-9 and abs(lo) <= ny + 1e-9
    assert bracket(x, y + z, "plus") <= hi + np.linalg.norm(z) + 1e-9
    for side in ("plus", "minus"):
        assert abs(bracket(x, y, side) - bracket_quotient(x, y, side)) <= 1e-6 * (1 + ny)


# --------------------------------------------------------------------------- probes


def test_one_sided_constant_examples():
    assert estimate_one_sided_constant(lambda x: np.ones(3), gaussian_pairs(3), 50).estimate == 0.0
    rep = estimate_one_sided_constant(lambda x: 2 * x, gaussian_pairs(3), 50)
    assert rep.estimate == pytest.approx(2.0, abs=1e-14)


def test_one_sided_witness_reproduces_estimate():
    fmap = lambda x: np.tanh(x) - 0.3 * x ** 3  # noqa: E731
    rep = estimate_one_sided_constant(fmap, gaussian_pairs(4), 200, seed=5)
    x, y = rep.witness
    d = x - y
    assert abs(d @ (fmap(x) - fmap(y)) / (d @ d) - rep.estimate) <= 1e-12
    assert json.loads(rep.to_json())["samples"] == 200


def test_one_sided_is_deterministic():
    a = estimate_one_sided_constant(np.sin, gaussian_pairs(5), 100, seed=3)
    b = estimate_one_sided_constant(np.sin, gaussian_pairs(5), 100, seed=3)
    assert a.estimate == b.estimate


def test_degenerate_pair():
    with pytest.raises(DegeneratePair):
        estimate_one_sided_constant(lambda x: x, lambda rng: (np.ones(2), np.ones(2)), 1)
    with pytest.raises(DegeneratePair):
        lipschitz_ratio_probe(lambda x: x, [(np.ones(2), np.ones(2))])


def test_lipschitz_ratio_examples():
    rng = np.random.default_rng(0)
    pairs = [tuple(rng.standard_normal((2, 4))) for _ in range(20)]
    assert lipschitz_ratio_probe(lambda x: 2 * x, pairs).estimate == pytest.approx(2.0)
    f = TransportNonlinearity()
    for m, ratio in ((100, 10.0), (10_000, 100.0)):
        rep = lipschitz_ratio_probe(f, [(lipschitz_witness(m, 64), np.zeros(64))])
        assert rep.estimate == pytest.approx(ratio, abs=1e-9)


def test_midpoint_convexity_diagnostic():
    assert midpoint_convexity_defect(lambda s: np.array([s * s]), -1, 1) == 0.0
    assert midpoint_convexity_defect(lambda s: np.array([-s * s]), -1, 1) > 0


# --------------------------------------------------------------------------- block-partition proxy


def test_kuratowski_examples():
    assert kuratowski_n([], 3) == 0.0
    assert kuratowski_n([5.0], 1) == 0.0
    assert kuratowski_n([0.0, 1.0], 1) == 1.0
    assert kuratowski_n([0.0, 1.0, 2.0, 10.0], 2) == 2.0


def test_kuratowski_matches_bruteforce_on_all_subsets():
    base = [0.0, 1.0, 2.0, 10.0]
    for r in range(len(base) + 1):
        for sub in itertools.combinations(base, r):
            for k in (1, 2, 3, 4):
                assert kuratowski_n(list(sub), k) == kuratowski_bruteforce(list(sub), k)


def test_kuratowski_random_matches_bruteforce():
    rng = np.random.default_rng(2)
    for _ in range(30):
        A = rng.standard_normal((int(rng.integers(1, 8)), 2))
        k = int(rng.integers(1, 4))
        assert kuratowski_n(A, k) == pytest.approx(kuratowski_bruteforce(A, k), abs=1e-12)


def test_kuratowski_large_set_is_upper_bound():
    A = np.random.default_rng(0).standard_normal((40, 3))
    value, exact = kuratowski_bound(A, 3)
    assert not exact and 0 < value <= diameter(A)


point_sets = st.integers(1, 12).flatmap(
    lambda m: arrays(float, (m, 2), elements=st.floats(-10, 10, allow_nan=False)))


@settings(max_examples=60, deadline=None)
@given(point_sets, st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_kuratowski_monotone_and_union(A, k, seed):
    rng = np.random.default_rng(seed)
    keep = rng.random(len(A)) < 0.6
    sub = A[keep]
    assert kuratowski_n(sub, k) <= kuratowski_n(A, k) + 1e-12
    B = rng.standard_normal((int(rng.integers(1, 13 - len(A) + 1)), 2))
    union = np.vstack([A, B])[:12]
    assert kuratowski_n(union, k) >= max(kuratowski_n(A, k), kuratowski_n(union[len(A):], k)) - 1e-12


@settings(max_examples=60, deadline=None)
@given(point_sets, st.integers(1, 4), st.floats(-5, 5, allow_nan=False))
def test_kuratowski_scaling(A, k, m):
    assert kuratowski_n(m * A, k) == pytest.approx(abs(m) * kuratowski_n(A, k), rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_kuratowski_minkowski_subadditive(seed, k):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((3, 2))
    B = rng.standard_normal((4, 2))
    S = np.array([a + b for a in A for b in B])
    assert kuratowski_n(S, k * k) <= kuratowski_n(A, k) + kuratowski_n(B, k) + 1e-12


def test_condensing_ratio_examples():
    rng = np.random.default_rng(9)
    sets = [rng.standard_normal((5, 64)) for _ in range(50)]
    assert condensing_ratio(lambda x: x, sets, 2).estimate == pytest.approx(1.0, abs=1e-12)
    assert condensing_ratio(lambda x: np.ones(64), sets, 2).estimate == 0.0
    shift = SemigroupHandle.left_shift()
    rep = condensing_ratio(lambda x: sg_apply(shift, 0.25, x), sets, 2)
    assert rep.estimate <= 1 + 1e-12


def test_condensing_ratio_degenerate():
    with pytest.raises(DegenerateSet):
        condensing_ratio(lambda x: x, [np.ones((3, 2))], 2)


# --------------------------------------------------------------------------- hull membership


def smooth_samples(dim, count=200, seed=0):
    rng = np.random.default_rng(seed)
    s = np.linspace(0, 1, count)
    return s, np.sin(np.outer(s, 3 * rng.standard_normal(dim)) + rng.standard_normal(dim)) + 0.3


def test_anchor_is_member():
    _, F = smooth_samples(5)
    a = np.arange(5.0)
    assert hull_membership(a, a, 1.0, F, 1e-12)


def test_zero_scale_rejected():
    with pytest.raises(ZeroScale):
        hull_membership(np.zeros(2), np.zeros(2), 0.0, np.ones((3, 2)), 1e-6)


@pytest.mark.parametrize("dim", [3, 20, 50])
def test_trapezoid_integral_is_member(dim):
    s, F = smooth_samples(dim, seed=dim)
    T, tau = 1.5, 0.5
    w = np.full(s.size, s[1])
    w[0] = w[-1] = s[1] / 2
    anchor = np.random.default_rng(1).standard_normal(dim)
    point = anchor + (T - tau) * (w @ F)
    assert hull_membership(point, anchor, T - tau, F, 1e-8 * diameter(F))
    e = np.zeros(dim)
    e[0] = 1.0
    far = anchor + 10 * (T - tau) * diameter(F) * e
    assert not hull_membership(far, anchor, T - tau, F, 1e-8 * diameter(F))


@pytest.mark.parametrize("seed", range(5))
def test_hull_distance_matches_nnls(seed):
    rng = np.random.default_rng(seed)
    _, F = smooth_samples(10, count=60, seed=seed)
    q = 2 * rng.standard_normal(10)
    upper, lower, weights = hull_distance(q, F)
    # oracle: nonnegative least squares with a heavily weighted simplex row
    P = np.vstack([F, np.zeros(10)]).T
    M = 1e4
    lam, _ = nnls(np.vstack([P, M * np.ones(P.shape[1])]), np.append(q, M), maxiter=20_000)
    ref = np.linalg.norm(P @ lam - q)
    assert upper == pytest.approx(ref, rel=1e-6)
    assert lower <= upper + 1e-12 and upper - lower <= 1e-8 * (1 + upper)
    assert np.all(weights >= 0) and weights.sum() <= 1 + 1e-12
    assert np.linalg.norm(F.T @ weights - q) == pytest.approx(upper, rel=1e-10)
