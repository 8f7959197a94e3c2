import math

import numpy as np
import pytest

from dualcheb import oracle
from dualcheb.core import GradientSet, solve_dual_lp
from dualcheb.errors import DimensionCapExceeded
from dualcheb.oracle import QuadraticEnsemble
from dualcheb.toy import TRIPLE

INF = math.inf


def test_primal_brute_examples():
    _, r = oracle.primal_brute(GradientSet(TRIPLE))
    assert r == pytest.approx(1 / math.sqrt(2), abs=1e-4)
    _, r = oracle.primal_brute(GradientSet([[2.0, -1.0, 0.5]]))
    assert r == pytest.approx(1.0, abs=1e-6)
    _, r = oracle.primal_brute(GradientSet([[1.0, 2.0], [-1.0, -2.0]]))
    assert abs(r) <= 1e-4
    with pytest.raises(DimensionCapExceeded):
        oracle.primal_brute(GradientSet(np.ones((2, 11))))


def test_primal_brute_returns_feasible_point():
    gs = GradientSet(np.random.default_rng(3).standard_normal((4, 6)), 3.0)
    v, r = oracle.primal_brute(gs, restarts=16, iters=500)
    assert np.sum(np.abs(v) ** 1.5) ** (1 / 1.5) <= 1 + 1e-12
    assert np.min(gs.ghat @ v) == pytest.approx(r, abs=1e-12)


def test_duality_gap_examples():
    rep = oracle.duality_gap_check(GradientSet(TRIPLE))
    assert rep.ok and abs(rep.gap) <= 1e-4
    rng = np.random.default_rng(11)
    gs = GradientSet(rng.standard_normal((4, 6)))
    rep = oracle.duality_gap_check(gs)
    assert abs(rep.gap) <= 1e-5


def test_vertex_enumeration_matches_lp():
    rng = np.random.default_rng(5)
    for k in range(20):
        p = (1.0, INF)[k % 2]
        gs = GradientSet(rng.standard_normal((int(rng.integers(1, 5)), int(rng.integers(2, 5)))), p)
        _, r_lp = solve_dual_lp(gs)
        _, r_v = oracle.lp_vertex_oracle(gs)
        assert abs(r_lp - r_v) <= 1e-6
        rep = oracle.duality_gap_check(gs)
        assert rep.details["oracle"] == "vertex-enumeration" and rep.ok


def test_fd_gradient_examples():
    g = oracle.fd_gradient(lambda th: 0.5 * th @ th, np.array([1.0, -2.0]))
    np.testing.assert_allclose(g, [1.0, -2.0], atol=1e-8)
    np.testing.assert_array_equal(oracle.fd_gradient(lambda th: 3.0, np.ones(4)), np.zeros(4))
    with pytest.raises(ValueError):
        oracle.fd_gradient(lambda th: 0.0, np.ones(2), h=0.0)


def test_fd_gradient_tanh_neuron():
    from dualcheb import autodiff as ad

    def loss(th):
        return ad.mean_square(ad.tanh(th[0] * np.array([0.3, -0.7]) + th[1]) - 0.2)

    theta = np.array([0.8, -0.1])
    tape = ad.Tape()
    g = tape.backward(loss(tape.watch(theta)))
    fd = oracle.fd_gradient(loss, theta)
    assert np.linalg.norm(g - fd) / np.linalg.norm(g) <= 1e-5


def test_descent_shared_minimum_1d():
    ens = QuadraticEnsemble(np.array([[[1.0]], [[3.0]]]), np.array([[0.5], [0.5]]))
    rep = oracle.descent_check(ens, steps=500, theta0=np.array([4.0]))
    assert rep.ok
    assert rep.details["terminated"]
    assert rep.details["theta"][0] == pytest.approx(0.5, abs=1e-9)


def test_descent_conflicting_2d():
    H = np.array([[[2.0, 0.0], [0.0, 1.0]], [[1.0, 0.5], [0.5, 3.0]]])
    c = np.array([[1.0, 0.0], [-1.0, 2.0]])
    rep = oracle.descent_check(QuadraticEnsemble(H, c), steps=500, theta0=np.array([5.0, -5.0]))
    assert rep.ok, rep.passes


def test_descent_single_quadratic_is_gradient_descent():
    H = np.array([[[2.0, 0.0], [0.0, 0.5]]])
    ens = QuadraticEnsemble(H, np.zeros((1, 2)))
    rep = oracle.descent_check(ens, steps=50, theta0=np.array([1.0, 1.0]))
    assert rep.ok and rep.details["beta"] == pytest.approx(2.0)
    theta = np.array([1.0, 1.0])
    for _ in range(rep.details["steps"]):
        theta = theta - ens.grads(theta)[0] / 2.0
    np.testing.assert_allclose(rep.details["theta"], theta, atol=1e-12)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_descent_random_ensembles(p):
    for k in range(5):
        ens = oracle.random_quadratic_ensemble(3, 4, 100 + k)
        assert oracle.descent_check(ens, steps=300, p=p, seed=k).ok


def test_beta_norm_factor():
    ens = oracle.random_quadratic_ensemble(2, 4, 0)
    b2, f2 = ens.beta(2.0)
    b3, f3 = ens.beta(3.0)
    assert f2 == 1.0 and f3 == pytest.approx(4 ** (1 / 3))
    assert b3 == pytest.approx(b2 * f3)
