import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualcheb import baselines
from dualcheb.core import GradientSet, compute_direction, solve_dual_fw
from dualcheb.errors import DegenerateBisector, Infeasible, WrongArity
from dualcheb.toy import TRIPLE, cube_corner

S2, S3, S11 = math.sqrt(2), math.sqrt(3), math.sqrt(11)
A = math.sqrt(5 / 11)


def test_mgda_examples():
    res = baselines.mgda(GradientSet(TRIPLE))
    np.testing.assert_allclose(res.alpha, [0, 0, 1], atol=1e-12)
    np.testing.assert_allclose(res.v, TRIPLE[2], atol=1e-12)
    res = baselines.mgda(GradientSet([[2.0, 1.0]]))
    np.testing.assert_array_equal(res.alpha, [1.0])
    np.testing.assert_array_equal(res.v, [2.0, 1.0])
    res = baselines.mgda(GradientSet([[3.0, 1.0], [-3.0, -1.0]]))
    assert np.linalg.norm(res.v) <= 1e-12


def test_config_examples():
    res = baselines.config_dir(GradientSet(TRIPLE))
    np.testing.assert_allclose(res.v, [A, A, -1 / S11], atol=1e-12)
    assert res.common_inner == pytest.approx(A, abs=1e-12)
    res = baselines.config_dir(GradientSet(cube_corner()))
    np.testing.assert_allclose(res.v, np.array([1, 1, -1]) / S3, atol=1e-12)
    np.testing.assert_allclose(GradientSet(cube_corner()).ghat @ res.v, 1 / S3, atol=1e-12)
    res = baselines.config_dir(GradientSet([[2, 0], [0, 7]]))
    np.testing.assert_allclose(res.v, [1 / S2, 1 / S2], atol=1e-12)
    assert res.common_inner == pytest.approx(1 / S2, abs=1e-12)


def test_config_inconsistent():
    # three coplanar directions in the plane with 0 in their hull
    gs = GradientSet([[1, 0], [0, 1], [-1, -1]])
    with pytest.raises(Infeasible):
        baselines.config_dir(gs)


def test_imtlg_examples():
    gs = GradientSet(TRIPLE)
    res = baselines.imtl_g(gs)
    np.testing.assert_allclose(res.alpha, [-13 / 22, -20 / 11, 75 / 22], atol=1e-12)
    np.testing.assert_allclose(res.v_unit, [-A, -A, 1 / S11], atol=1e-12)
    np.testing.assert_allclose(gs.ghat @ res.v_unit, -A, atol=1e-12)
    res = baselines.imtl_g(GradientSet([[1, 0], [0, 1]]))
    np.testing.assert_allclose(res.v_unit, [1 / S2, 1 / S2], atol=1e-12)
    with pytest.raises(WrongArity):
        baselines.imtl_g(GradientSet([[1, 0]]))


def test_gapo_examples():
    gs = GradientSet(TRIPLE)
    res = baselines.gapo(gs, rho=1.0, max_iter=500, tol=1e-12)
    assert np.linalg.norm(res.v) == pytest.approx(1 / S2, abs=1e-8)
    assert res.alpha[2] <= 1e-8 and np.all(res.alpha[:2] > 0.4)
    with pytest.raises(ValueError):
        baselines.gapo(gs, rho=-1)


def test_dcgd_examples():
    res = baselines.dcgd_center(GradientSet([[1, 0], [0, 1]]))
    np.testing.assert_allclose(res.v, [1 / S2, 1 / S2], atol=1e-15)
    with pytest.raises(DegenerateBisector):
        baselines.dcgd_center(GradientSet([[1, 2], [-2, -4]]))
    with pytest.raises(WrongArity):
        baselines.dcgd_center(GradientSet(TRIPLE))


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 5), st.integers(2, 8))
def test_gapo_rho0_is_mgda(seed, m, n):
    gs = GradientSet(np.random.default_rng(seed).standard_normal((m, n)) * 3)
    a, b = baselines.gapo(gs, rho=0.0), baselines.mgda(gs)
    np.testing.assert_array_equal(a.alpha, b.alpha)
    np.testing.assert_array_equal(a.v, b.v)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 5), st.integers(2, 8))
def test_gapo_rho1_is_dual(seed, m, n):
    gs = GradientSet(np.random.default_rng(seed).standard_normal((m, n)) * 3)
    a = baselines.gapo(gs, rho=1.0, max_iter=500, tol=1e-12)
    b = solve_dual_fw(gs, max_iter=500, tol=1e-12)
    assert abs(np.linalg.norm(a.v) - np.linalg.norm(b @ gs.ghat)) <= 1e-8


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(2, 8), st.floats(0.01, 100), st.floats(0.01, 100))
def test_bisector_matches_ours_for_two(seed, n, c1, c2):
    G = np.random.default_rng(seed).standard_normal((2, n))
    gs = GradientSet(G * np.array([[c1], [c2]]))
    res = compute_direction(gs)
    if res.terminated:
        return
    np.testing.assert_allclose(baselines.dcgd_center(gs).v, res.v, atol=1e-9)


@settings(max_examples=150, deadline=None)
@given(seeds, st.integers(2, 5), st.integers(2, 10))
def test_chebyshev_dominates_config(seed, m, n):
    gs = GradientSet(np.random.default_rng(seed).standard_normal((m, n)))
    try:
        cf = baselines.config_dir(gs)
    except Infeasible:
        return
    ours = compute_direction(gs, eps=0.0)
    r_cf = float(np.min(gs.ghat @ cf.v))
    assert ours.r_star >= r_cf - 1e-10
