"""Independent checks for the direction solvers and the autodiff engine.

Nothing in here goes through the dual problem: the primal Chebyshev problem
is attacked directly (projected subgradient ascent plus a local SQP polish,
or LP vertex enumeration for tiny polyhedral cases), gradients are checked
against central differences, and the descent inequality of the plain
(non-Adam) iteration is verified step by step on convex quadratics.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import numkit
from .core import DEFAULT_EPS, GradientSet, compute_direction
from .errors import DimensionCapExceeded, ZeroGradient
from .numkit import INF

BRUTE_MAX_N = 10


@dataclass
class OracleReport:
    instance: str
    oracle_r: float
    solver_r: float
    gap: float
    passes: dict
    seeds: tuple = ()
    details: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.passes.values())


# ---------------------------------------------------------------------------
# brute-force primal


def _phi(ghat, V):
    """``min_i ghat_i . v`` for each row ``v`` of V."""
    return np.min(V @ ghat.T, axis=1)


def _row_norms(V, q):
    A = np.abs(V)
    if q == INF:
        return A.max(axis=1)
    if q == 1.0:
        return A.sum(axis=1)
    if q == 2.0:
        return np.sqrt(np.einsum("ij,ij->i", V, V))
    s = A.max(axis=1)
    s[s == 0.0] = 1.0
    return s * np.sum((A / s[:, None]) ** q, axis=1) ** (1.0 / q)


def _project_radial(V, q):
    return V / np.maximum(_row_norms(V, q), 1.0)[:, None]


def _polish_primal(ghat, q, v0):
    """Local SQP on ``max r s.t. ghat_i.v >= r, ||v||_q <= 1`` from ``v0``."""
    m, n = ghat.shape
    r0 = float(np.min(ghat @ v0))
    cons = [{"type": "ineq", "fun": lambda x: ghat @ x[:n] - x[-1], "jac": lambda x: np.c_[ghat, -np.ones(m)]}]
    bounds = None
    x0 = np.r_[v0, r0]
    if q == INF:
        bounds = [(-1.0, 1.0)] * n + [(None, None)]
    elif q == 1.0:
        # v = a - b with a, b >= 0 and sum(a + b) <= 1
        x0 = np.r_[np.maximum(v0, 0), np.maximum(-v0, 0), r0]
        P = np.c_[ghat, -ghat]
        cons = [
            {"type": "ineq", "fun": lambda x: P @ x[:-1] - x[-1], "jac": lambda x: np.c_[P, -np.ones(m)]},
            {"type": "ineq", "fun": lambda x: 1.0 - x[:-1].sum(), "jac": lambda x: np.r_[-np.ones(2 * n), 0.0]},
        ]
        bounds = [(0.0, None)] * (2 * n) + [(None, None)]
    else:
        cons.append({
            "type": "ineq",
            "fun": lambda x: 1.0 - np.sum(np.abs(x[:n]) ** q),
            "jac": lambda x: np.r_[-q * np.sign(x[:n]) * np.abs(x[:n]) ** (q - 1.0), 0.0],
        })
    res = minimize(lambda x: -x[-1], x0, jac=lambda x: np.r_[np.zeros(x.size - 1), -1.0],
                   method="SLSQP", bounds=bounds, constraints=cons,
                   options={"maxiter": 500, "ftol": 1e-15})
    x = res.x
    v = x[:n] - x[n:2 * n] if q == 1.0 else x[:n]
    return v


def _sample_refine(ghat, q, v, rng, rounds=40, samples=256, radius=0.05):
    """Random search in a shrinking box around ``v``, projected to the ball."""
    best = float(np.min(ghat @ v))
    for _ in range(rounds):
        cand = v + rng.uniform(-radius, radius, size=(samples, v.size))
        cand = cand / _row_norms(cand, q)[:, None]
        vals = _phi(ghat, cand)
        j = int(np.argmax(vals))
        if vals[j] > best:
            best, v = float(vals[j]), cand[j]
        else:
            radius *= 0.5
    return v


def primal_brute(gs, restarts=64, iters=2000, seed=0, step=0.1, polish=True):
    """Maximize ``phi(v) = min_i ghat_i . v`` over the l_q unit ball directly.

    Runs ``restarts`` projected subgradient ascents (step ``step/sqrt(t)``,
    radial projection onto the ball) in parallel, refines the best point by
    random sampling on the sphere, then polishes it with a local SQP on the
    primal.  The returned value is always
    ``phi`` of a feasible point, hence a lower bound on ``r*``.

    Returns
    -------
    v : ndarray
    phi : float
    """
    if gs.n > BRUTE_MAX_N:
        raise DimensionCapExceeded(f"brute-force primal supports n <= {BRUTE_MAX_N}")
    ghat, q = gs.ghat, gs.q
    rng = np.random.default_rng(seed)
    V = _project_radial(rng.standard_normal((restarts, gs.n)), q)
    V = V / _row_norms(V, q)[:, None]
    best_val = _phi(ghat, V)
    best_V = V.copy()
    rows = np.arange(restarts)
    for t in range(1, iters + 1):
        S = V @ ghat.T
        i = np.argmin(S, axis=1)
        val = S[rows, i]
        better = val > best_val
        best_val[better] = val[better]
        best_V[better] = V[better]
        V = _project_radial(V + (step / np.sqrt(t)) * ghat[i], q)
    k = int(np.argmax(best_val))
    v = _sample_refine(ghat, q, best_V[k], rng)
    if polish:
        cand = _polish_primal(ghat, q, v)
        cand = cand / max(1.0, numkit.lp_norm(cand, q))
        if float(np.min(ghat @ cand)) > float(np.min(ghat @ v)):
            v = cand
    v = v / max(1.0, numkit.lp_norm(v, q))
    return v, float(np.min(ghat @ v))


LP_ENUM_MAX_N = 4


def lp_vertex_oracle(gs):
    """Exact primal optimum for ``p in {1, inf}`` by enumerating LP vertices.

    The primal is an LP in ``(v, r)``; the l_q ball is written with its
    facets (``2n`` box faces for ``q = inf``, ``2^n`` sign patterns for
    ``q = 1``).  Every choice of ``n + 1`` tight constraints is solved and the
    best feasible vertex kept.  Only meant for ``n <= 4``.

    Returns ``(v, r)``.
    """
    if gs.p not in (1.0, INF):
        raise ValueError("vertex enumeration is for p in {1, inf}")
    n = gs.n
    if n > LP_ENUM_MAX_N:
        raise DimensionCapExceeded(f"vertex enumeration supports n <= {LP_ENUM_MAX_N}")
    rows = [np.r_[-g, 1.0] for g in gs.ghat]
    rhs = [0.0] * gs.m
    if gs.q == INF:
        facets = np.vstack([np.eye(n), -np.eye(n)])
    else:
        facets = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    for f in facets:
        rows.append(np.r_[f, 0.0])
        rhs.append(1.0)
    A, b = np.array(rows), np.array(rhs)
    best_r, best_v = -INF, None
    for idx in itertools.combinations(range(len(b)), n + 1):
        sub = A[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        x = np.linalg.solve(sub, b[list(idx)])
        if np.all(A @ x <= b + 1e-10) and x[-1] > best_r:
            best_r, best_v = float(x[-1]), x[:n]
    return best_v, best_r


def duality_gap_check(gs, seeds=(0,), restarts=64, iters=2000, tol=1e-4, lower_slack=1e-6,
                      instance="", **direction_kw):
    """Compare the dual optimum from :func:`compute_direction` with a primal oracle.

    The oracle is :func:`lp_vertex_oracle` for ``p in {1, inf}`` at ``n <= 4``
    and :func:`primal_brute` (best over ``seeds``) otherwise.  ``gap`` is
    ``solver_r - oracle_r``; weak duality says it is non-negative.
    """
    res = compute_direction(gs, eps=0.0, **direction_kw)
    solver_r = float(res.r_star)
    if gs.p in (1.0, INF) and gs.n <= LP_ENUM_MAX_N:
        _, oracle_r = lp_vertex_oracle(gs)
        method, tol = "vertex-enumeration", min(tol, 1e-6)
        used = ()
    else:
        oracle_r = max(primal_brute(gs, restarts=restarts, iters=iters, seed=s)[1] for s in seeds)
        method, used = "primal-brute", tuple(seeds)
    gap = solver_r - oracle_r
    passes = {"gap": abs(gap) <= tol, "weak_duality": solver_r >= oracle_r - lower_slack}
    # below the termination threshold the recovered direction is not meaningful
    if res.v is not None and solver_r > DEFAULT_EPS:
        feas = float(np.min(gs.ghat @ res.v)) >= solver_r - 1e-8
        passes["solver_primal_feasible"] = feas
    return OracleReport(instance or repr(gs), float(oracle_r), solver_r, float(gap), passes, used,
                        {"oracle": method, "solver": res.solver, "tol": tol})


# ---------------------------------------------------------------------------
# finite differences


def fd_gradient(loss, theta, h=None):
    """Central-difference gradient of a scalar function.

    ``h`` may be a scalar or per-coordinate array; the default is
    ``1e-4 * (1 + |theta_j|)``.
    """
    theta = np.asarray(theta, dtype=float)
    steps = 1e-4 * (1.0 + np.abs(theta)) if h is None else np.broadcast_to(np.asarray(h, dtype=float), theta.shape)
    if np.any(steps <= 0):
        raise ValueError("finite-difference step must be positive")
    out = np.zeros_like(theta)
    flat, step_flat, g = theta.ravel(), steps.ravel(), out.ravel()
    for j in range(flat.size):
        e = np.zeros_like(flat)
        e[j] = step_flat[j]
        up = float(loss((flat + e).reshape(theta.shape)))
        down = float(loss((flat - e).reshape(theta.shape)))
        g[j] = (up - down) / (2.0 * step_flat[j])
    return out


# ---------------------------------------------------------------------------
# descent inequality on convex quadratics


@dataclass
class QuadraticEnsemble:
    """Losses ``L_i(theta) = (theta - c_i)^T H_i (theta - c_i) / 2``."""

    H: np.ndarray  # (m, n, n), symmetric PSD
    c: np.ndarray  # (m, n)

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        if self.H.ndim != 3 or self.c.shape != self.H.shape[:2]:
            raise ValueError("H must be (m, n, n) and c must be (m, n)")

    @property
    def m(self):
        return self.H.shape[0]

    @property
    def n(self):
        return self.H.shape[1]

    def losses(self, theta):
        r = theta[None, :] - self.c
        return 0.5 * np.einsum("ij,ijk,ik->i", r, self.H, r)

    def grads(self, theta):
        return np.einsum("ijk,ik->ij", self.H, theta[None, :] - self.c)

    def total(self, theta):
        return float(self.losses(theta).sum())

    def minimizer(self):
        Hs = self.H.sum(axis=0)
        rhs = np.einsum("ijk,ik->j", self.H, self.c)
        return np.linalg.lstsq(Hs, rhs, rcond=None)[0]

    def beta(self, q):
        """Smoothness of the total loss from the l_q norm to its dual norm.

        ``lambda_max(sum H_i)`` times the squared equivalence constant between
        l_2 and l_q on R^n (``n^(1 - 2/q)`` when ``q > 2``, else 1).
        """
        lam = float(np.linalg.eigvalsh(self.H.sum(axis=0)).max())
        factor = self.n ** (1.0 - 2.0 / q) if q > 2.0 else 1.0
        return lam * factor, factor


def random_quadratic_ensemble(m, n, seed, shared_minimum=False, floor=0.1):
    rng = np.random.default_rng(seed)
    H = []
    for _ in range(m):
        A = rng.standard_normal((n, n)) / np.sqrt(n)
        H.append(A @ A.T + floor * np.eye(n))
    c = np.repeat(rng.standard_normal((1, n)), m, axis=0) if shared_minimum else rng.standard_normal((m, n))
    return QuadraticEnsemble(np.array(H), c)


def descent_check(ens, steps=500, p=2.0, eps=DEFAULT_EPS, theta0=None, seed=0, slack=1e-8):
    """Run plain steps ``theta <- theta - d / beta`` and check the descent bounds.

    Every non-terminated step must satisfy

        L(theta_{t+1}) <= L(theta_t) - eps^2 / (2 beta) * ||grad L(theta_t)||_p^2

    (and the sharper form with ``r_t`` in place of ``eps``), and after ``T``
    such steps ``min_t ||grad L||_p^2 <= 2 beta (L_0 - L_min) / (eps^2 T)``.
    A vanishing per-loss gradient counts as reaching a Pareto-stationary point.
    """
    q = numkit.conjugate(p)
    beta, factor = ens.beta(q)
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal(ens.n) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    L_star = ens.total(ens.minimizer())
    L0 = ens.total(theta)
    per_step, sharp, monotone = True, True, True
    worst = -INF
    grad_sq = []
    terminated, reason = False, ""
    T = 0
    for _ in range(steps):
        G = ens.grads(theta)
        try:
            gs = GradientSet(G, p)
        except ZeroGradient:
            terminated, reason = True, "zero-gradient"
            break
        res = compute_direction(gs, eps)
        if res.terminated:
            terminated, reason = True, "r_star<=eps"
            break
        L = ens.total(theta)
        gnorm_sq = numkit.lp_norm(G.sum(axis=0), p) ** 2
        theta = theta - res.d / beta
        L_next = ens.total(theta)
        excess = L_next - (L - eps**2 / (2 * beta) * gnorm_sq)
        worst = max(worst, excess)
        per_step &= excess <= slack
        sharp &= L_next <= L - res.r_star**2 / (2 * beta) * gnorm_sq + slack
        monotone &= L_next <= L + slack
        grad_sq.append(gnorm_sq)
        T += 1
    bound = 2 * beta * (L0 - L_star) / (eps**2 * T) if T else INF
    passes = {
        "per_step": bool(per_step),
        "sharp_per_step": bool(sharp),
        "monotone": bool(monotone),
        "final_bound": (min(grad_sq) <= bound) if T else True,
    }
    return OracleReport(
        f"quadratics(m={ens.m}, n={ens.n}, p={p})",
        oracle_r=float(L_star),
        solver_r=float(ens.total(theta)),
        gap=float(worst) if T else 0.0,
        passes=passes,
        seeds=(seed,),
        details={"beta": beta, "norm_factor": factor, "steps": T, "terminated": terminated,
                 "reason": reason, "theta": theta, "L0": L0, "bound": bound},
    )
