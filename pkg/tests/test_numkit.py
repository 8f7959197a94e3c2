import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dualcheb import numkit
from dualcheb.errors import DimensionMismatch, ZeroGradient

INF = math.inf
P_VALUES = [1.0, 1.5, 2.0, 3.0, INF]


def finite_vecs(n_min=1, n_max=8):
    return st.integers(n_min, n_max).flatmap(
        lambda n: arrays(np.float64, n, elements=st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False))
    )


def test_lp_norm_examples():
    assert numkit.lp_norm([3, 4], 2) == 5.0
    assert numkit.lp_norm([1, 1, 0], 3) == pytest.approx(2 ** (1 / 3), abs=1e-15)
    assert numkit.lp_norm([-2, 1], INF) == 2.0
    assert numkit.lp_norm([-2, 1], 1) == 3.0
    assert numkit.lp_norm(np.zeros(4), 3) == 0.0


def test_lp_norm_no_overflow():
    assert numkit.lp_norm([1e200, 1e200], 3) == pytest.approx(1e200 * 2 ** (1 / 3), rel=1e-14)
    assert numkit.lp_norm([1e-200, 0.0], 1.5) == pytest.approx(1e-200, rel=1e-14)


def test_conjugate_pairs():
    assert numkit.conjugate(1) == INF
    assert numkit.conjugate(INF) == 1.0
    assert numkit.conjugate(2) == 2.0
    assert numkit.conjugate(3) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        numkit.conjugate(0.5)


def test_normalize_grad_examples():
    np.testing.assert_array_equal(numkit.normalize_grad([5, 0, 0], 2), [1, 0, 0])
    np.testing.assert_array_equal(numkit.normalize_grad([0, 3, 0], 2), [0, 1, 0])
    for p in P_VALUES:
        with pytest.raises(ZeroGradient):
            numkit.normalize_grad([0.0, 0.0], p)
    with pytest.raises(ZeroGradient):
        numkit.normalize_grad([1e-13, 0.0], 2)


@settings(max_examples=200, deadline=None)
@given(finite_vecs(), st.sampled_from(P_VALUES))
def test_normalized_has_unit_norm(g, p):
    if numkit.lp_norm(g, p) < 1e-6:
        return
    u = numkit.normalize_grad(g, p)
    assert abs(numkit.lp_norm(u, p) - 1.0) <= 1e-12
    # positively collinear
    assert u @ g > 0


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: st.tuples(
    arrays(np.float64, n, elements=st.floats(-100, 100)), arrays(np.float64, n, elements=st.floats(-100, 100)))),
    st.sampled_from(P_VALUES))
def test_hoelder(xy, p):
    x, y = xy
    q = numkit.conjugate(p)
    assert abs(x @ y) <= numkit.lp_norm(x, p) * numkit.lp_norm(y, q) * (1 + 1e-12) + 1e-12


def test_gram_examples():
    np.testing.assert_array_equal(numkit.gram([[1, 0], [0, 1]]), np.eye(2))
    np.testing.assert_array_equal(numkit.gram([[0.6, 0.8]]), [[1.0]])
    s5 = math.sqrt(5)
    G = numkit.gram([[1, 0, 0], [0, 1, 0], [3 / 15, 14 / 15, 2 * s5 / 15]])
    assert G[0, 1] == 0
    assert G[0, 2] == pytest.approx(1 / 5, abs=1e-15)
    assert G[1, 2] == pytest.approx(14 / 15, abs=1e-15)
    with pytest.raises(DimensionMismatch):
        numkit.gram([[1, 0], [1, 0, 0]])


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_gram_symmetric_unit_diagonal(m, n, seed):
    V = np.random.default_rng(seed).standard_normal((m, n))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    G = numkit.gram(V)
    assert np.array_equal(G, G.T)
    assert np.max(np.abs(np.diag(G) - 1)) <= 1e-12


def test_pinv_examples():
    np.testing.assert_allclose(numkit.pinv_small(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(numkit.pinv_small(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))
    s5 = math.sqrt(5)
    G = numkit.gram(np.array([[1, 0, 0], [0, 1, 0], [3 / 15, 14 / 15, 2 * s5 / 15]]))
    np.testing.assert_allclose(G @ numkit.pinv_small(G) @ G, G, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(0, 8), st.integers(0, 2**32 - 1))
def test_pinv_penrose(m, rank, seed):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((m, min(rank, m)))
    A = B @ B.T - (rng.standard_normal((m, m)) if rank == 0 else 0)
    A = 0.5 * (A + A.T)
    P = numkit.pinv_small(A)
    tol = 1e-8 * max(1.0, np.abs(A).max()) ** 2
    assert np.abs(A @ P @ A - A).max() <= tol
    assert np.abs(P @ A @ P - P).max() <= 1e-8 * max(1.0, np.abs(P).max()) ** 2 * max(1.0, np.abs(A).max())
    assert np.abs((A @ P).T - A @ P).max() <= 1e-8
    assert np.abs((P @ A).T - P @ A).max() <= 1e-8


def test_signed_power():
    np.testing.assert_array_equal(numkit.signed_power([-2, 0, 3], 1), [-2, 0, 3])
    np.testing.assert_allclose(numkit.signed_power([4, -9], 0.5), [2, -3])
    np.testing.assert_array_equal(numkit.signed_power([1, 1, 0], 2), [1, 1, 0])
