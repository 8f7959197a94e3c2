"""Fixed-seed verification suites driven by the ``verify`` command and the tests."""

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import oracle
from .core import GradientSet, compute_direction, solve_dual_exact3, solve_dual_fw
from .numkit import INF, lp_norm


@dataclass
class SuiteResult:
    name: str
    passed: bool
    count: int
    detail: str = ""
    failures: list = field(default_factory=list)


def duality_suite(n_instances=200, seed=0, p_values=(1.5, 2.0, 3.0), tol=1e-4):
    """Dual value vs the brute-force primal on random instances, m <= 5, n <= 10."""
    rng = np.random.default_rng(seed)
    worst, fails = 0.0, []
    for k in range(n_instances):
        p = p_values[k % len(p_values)]
        m, n = int(rng.integers(2, 6)), int(rng.integers(3, 11))
        gs = GradientSet(rng.standard_normal((m, n)), p)
        rep = oracle.duality_gap_check(gs, tol=tol)
        worst = max(worst, abs(rep.gap))
        if not (rep.passes["gap"] and rep.passes["weak_duality"]):
            fails.append((k, p, m, n, rep.gap))
    return SuiteResult("strong duality (brute-force primal)", not fails, n_instances,
                       f"max |gap| = {worst:.2e}", fails)


def lp_suite(n_instances=40, seed=1):
    """``p in {1, inf}`` LP path vs exact vertex enumeration at n <= 4."""
    rng = np.random.default_rng(seed)
    worst, fails = 0.0, []
    for k in range(n_instances):
        p = (1.0, INF)[k % 2]
        m, n = int(rng.integers(1, 5)), int(rng.integers(2, 5))
        gs = GradientSet(rng.standard_normal((m, n)), p)
        rep = oracle.duality_gap_check(gs)
        worst = max(worst, abs(rep.gap))
        if not rep.ok:
            fails.append((k, p, m, n, rep.gap))
    return SuiteResult("LP dual vs vertex enumeration", not fails, n_instances, f"max |gap| = {worst:.2e}", fails)


def exact3_suite(n_instances=500, seed=2, tol=1e-6, fw_max_iter=500, fw_tol=1e-12):
    """Closed-form m = 3 solver vs a converged Frank-Wolfe run."""
    rng = np.random.default_rng(seed)
    worst, fails = 0.0, []
    for k in range(n_instances):
        gs = GradientSet(rng.standard_normal((3, int(rng.integers(2, 11)))))
        a, b = solve_dual_exact3(gs), solve_dual_fw(gs, fw_max_iter, fw_tol)
        diff = abs(np.linalg.norm(a @ gs.ghat) - np.linalg.norm(b @ gs.ghat))
        worst = max(worst, diff)
        if diff > tol:
            fails.append((k, diff))
    return SuiteResult("exact3 vs Frank-Wolfe", not fails, n_instances, f"max diff = {worst:.2e}", fails)


def recovery_suite(n_instances=500, seed=3, p_values=(1.5, 2.0, 3.0)):
    """Unit dual norm, Hoelder tightness and primal feasibility of ``v``."""
    rng = np.random.default_rng(seed)
    fails, checked = [], 0
    for k in range(n_instances):
        p = p_values[k % len(p_values)]
        m, n = int(rng.integers(1, 6)), int(rng.integers(2, 11))
        gs = GradientSet(rng.standard_normal((m, n)), p)
        res = compute_direction(gs)
        if res.terminated:
            continue
        checked += 1
        ok = (abs(lp_norm(res.v, gs.q) - 1.0) <= 1e-9
              and abs(res.w @ res.v - res.r_star) <= 1e-9
              and np.all(gs.ghat @ res.v >= res.r_star - 1e-8))
        if not ok:
            fails.append(k)
    return SuiteResult("recovery identities", not fails, checked, f"{checked} non-terminated", fails)


def gradient_suite(seed=4, points=20, tol=1e-5):
    """Reverse mode and input jets vs central differences on a 2-8-8-1 net."""
    rng = np.random.default_rng(seed)
    spec = ad.NetSpec(2, (8, 8), 1)
    theta = ad.init_xavier(spec, seed).theta + 0.1 * rng.standard_normal(spec.n_params)
    X = rng.uniform(-1.0, 1.0, size=(points, 2))
    target = np.sin(X[:, :1])

    def loss(th):
        u, jets = ad.forward_jets(th, spec, X, (0, 1), 2)
        res = jets[0].u_ss + jets[1].u_ss + ad.cube(u) - target
        return ad.add(ad.mean_square(res), ad.mean_square(jets[0].u_s))

    tape = ad.Tape()
    g = tape.backward(loss(tape.watch(theta)))
    fd = oracle.fd_gradient(loss, theta)
    rel_param = float(np.linalg.norm(g - fd) / np.linalg.norm(fd))

    _, jets = ad.forward_jets(theta, spec, X, (0, 1), 2)
    h = 1e-3
    errs = []
    for a in (0, 1):
        e = np.zeros(2)
        e[a] = h
        up, mid, dn = (ad.forward(theta, spec, X + s * e) for s in (1, 0, -1))
        fd2 = (up - 2 * mid + dn) / h**2
        fd1 = (up - dn) / (2 * h)
        errs.append(np.linalg.norm(jets[a].u_ss - fd2) / np.linalg.norm(fd2))
        errs.append(np.linalg.norm(jets[a].u_s - fd1) / np.linalg.norm(fd1))
    rel_jet = float(max(errs))
    ok = rel_param <= tol and rel_jet <= tol
    return SuiteResult("autodiff vs finite differences", ok, points,
                       f"param rel err = {rel_param:.1e}, jet rel err = {rel_jet:.1e}")


def descent_suite(n_ensembles=50, seed=5, steps=500):
    fails = []
    for k in range(n_ensembles):
        ens = oracle.random_quadratic_ensemble(2 + k % 2, 2 + k % 5, seed * 1000 + k)
        rep = oracle.descent_check(ens, steps=steps, seed=k)
        if not rep.ok:
            fails.append((k, rep.passes))
    return SuiteResult("descent inequality (quadratics)", not fails, n_ensembles, "", fails)


def all_suites(quick=False):
    if quick:
        return [duality_suite(24), lp_suite(10), exact3_suite(60), recovery_suite(60), gradient_suite(),
                descent_suite(8)]
    return [duality_suite(), lp_suite(), exact3_suite(), recovery_suite(), gradient_suite(), descent_suite()]
