"""Chebyshev-center direction selection in the dual cone of the gradients.

The primal problem picks the l_q-unit direction ``v`` maximizing the smallest
normalized inner product ``min_i ghat_i . v``; the dual is a minimum-norm
problem over the probability simplex,

    min_{alpha in simplex} || sum_i alpha_i ghat_i ||_p ,

whose optimal value equals the Chebyshev radius ``r*``.  This module provides
exact dual solvers for two and three Euclidean losses, a Frank-Wolfe solver
for general ``p in (1, inf)``, linear programs for ``p in {1, inf}``, the
primal recovery map, and :func:`compute_direction`, which chains them.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq, linprog, nnls

from . import numkit
from .errors import (
    DegenerateDirection,
    DimensionCapExceeded,
    DimensionMismatch,
    UnsupportedNorm,
    WrongArity,
)
from .numkit import INF

#: termination threshold on ``||w||_p``
DEFAULT_EPS = 1e-6
ACTIVE_TOL = 1e-7
LP_MAX_N = 512
LP_MAX_M = 16


class GradientSet:
    """Per-loss gradients ``g_1..g_m`` (rows) together with the norm parameter.

    Norms and normalized gradients are computed eagerly; the stored arrays are
    read-only so a ``GradientSet`` can be shared freely.

    Raises ``ZeroGradient`` if any ``||g_i||_p`` is numerically zero.
    """

    def __init__(self, grads, p=2.0):
        G = np.array(grads, dtype=float)
        if G.ndim == 1:
            G = G[None, :]
        if G.ndim != 2 or G.shape[0] < 1 or G.shape[1] < 1:
            raise DimensionMismatch(f"expected an (m, n) array of gradients, got shape {G.shape}")
        if not np.all(np.isfinite(G)):
            raise ValueError("gradients must be finite")
        self.p = numkit.check_p(p)
        self.q = numkit.conjugate(self.p)
        self.grads = G
        self.norms = np.array([numkit.lp_norm(g, self.p) for g in G])
        self.ghat = np.stack([numkit.normalize_grad(g, self.p) for g in G])
        for a in (self.grads, self.norms, self.ghat):
            a.setflags(write=False)

    @property
    def m(self):
        return self.grads.shape[0]

    @property
    def n(self):
        return self.grads.shape[1]

    def __repr__(self):
        return f"GradientSet(m={self.m}, n={self.n}, p={self.p})"


@dataclass
class DirectionResult:
    alpha: np.ndarray
    w: np.ndarray
    r_star: float
    v: Optional[np.ndarray]
    d: Optional[np.ndarray]
    active: np.ndarray
    terminated: bool
    solver: str = ""
    nonunique_possible: bool = False
    info: dict = field(default_factory=dict)


def _as_simplex(alpha):
    """Clamp round-off negatives to zero and renormalize onto the simplex."""
    a = np.asarray(alpha, dtype=float).copy()
    a[a < 0.0] = 0.0
    s = a.sum()
    if s <= 0.0:
        raise ValueError("weights have no positive mass")
    return a / s


def _require_p2(gs):
    if gs.p != 2.0:
        raise UnsupportedNorm(f"exact solvers require p = 2, got p = {gs.p}")


# ---------------------------------------------------------------------------
# exact Euclidean solvers


def solve_dual_exact2(gs):
    """Two Euclidean-normalized losses: the minimizer is always (1/2, 1/2)."""
    if gs.m != 2:
        raise WrongArity(f"exact2 needs m = 2, got m = {gs.m}")
    _require_p2(gs)
    return np.array([0.5, 0.5])


def _zero_combination(G, ghat, tau):
    """Return alpha in the simplex with sum alpha_i ghat_i = 0, or None."""
    lam, V = np.linalg.eigh(G)
    null = V[:, lam <= 1e-10 * max(lam.max(), 1.0)]
    cands = []
    if null.shape[1] == 1:
        z = null[:, 0]
        s = z.sum()
        if abs(s) > 1e-14:
            cands.append(z / s)
    elif null.shape[1] >= 2:
        # all ghat collinear: zero lies in the hull iff some pair is antipodal
        iu = np.triu_indices(3, 1)
        k = int(np.argmin(G[iu]))
        a = np.zeros(3)
        a[iu[0][k]] = a[iu[1][k]] = 0.5
        cands.append(a)
    for a in cands:
        if a.min() >= -tau:
            a = _as_simplex(a)
            if np.linalg.norm(a @ ghat) <= 1e-10:
                return a
    return None


def _interior_candidate(G, eps=1e-12):
    """``G^+ 1 / (1^T G^+ 1)``, the stationary point on the affine hull.

    Computed from the bordered system ``[[G, 1], [1^T, 0]] [alpha; mu] =
    [0; 1]``, which has the same solution when ``G`` is invertible but stays
    well conditioned as the hull approaches the origin (``G`` then has an
    eigenvalue of order ``r*^2`` that a pseudo-inverse cutoff would discard).
    ``mu = -1 / (1^T G^+ 1)``; returns None when ``1^T G^+ 1 <= eps``.
    """
    K = np.zeros((4, 4))
    K[:3, :3] = G
    K[:3, 3] = K[3, :3] = 1.0
    sol = np.linalg.lstsq(K, np.r_[0.0, 0.0, 0.0, 1.0], rcond=None)[0]
    alpha, mu = sol[:3], sol[3]
    if mu > 0.0 or (mu < 0.0 and -1.0 / mu <= eps):
        return None
    return alpha


def solve_dual_exact3(gs, tau=1e-9, eps=1e-12):
    """Exact minimizer of ``||sum alpha_i ghat_i||_2`` over the 3-simplex.

    The solution is a zero combination, an interior point with equal inner
    products (``G^+ 1`` normalized), or the midpoint of the pair with the
    smallest Gram entry.  Ties in the Gram entries go to the lowest pair in
    lexicographic order.
    """
    if gs.m != 3:
        raise WrongArity(f"exact3 needs m = 3, got m = {gs.m}")
    _require_p2(gs)
    ghat = gs.ghat
    G = numkit.gram(ghat)

    a0 = _zero_combination(G, ghat, tau)
    if a0 is not None:
        return a0

    pairs = [(0, 1), (0, 2), (1, 2)]
    best = min(pairs, key=lambda ij: (G[ij], ij))
    edge = np.zeros(3)
    edge[list(best)] = 0.5

    cand = _interior_candidate(G, eps)
    if cand is not None and cand.min() >= -tau:
        cand = _as_simplex(cand)
        # the equal-inner-product point can be feasible yet not optimal when
        # G is singular (coplanar gradients); keep it only if it beats the edge
        if np.linalg.norm(cand @ ghat) <= np.linalg.norm(edge @ ghat):
            return cand
    return edge


# ---------------------------------------------------------------------------
# Frank-Wolfe


def _norm_grad(w, p):
    """Gradient of ``||w||_p`` (the recovery map); zero at ``w = 0``."""
    r = numkit.lp_norm(w, p)
    if r == 0.0:
        return np.zeros_like(w), 0.0
    if p == 2.0:
        return w / r, r
    return numkit.signed_power(w / r, p - 1.0), r


def fw_min_norm(V, p=2.0, max_iter=20, tol=1e-6, alpha0=None, polish=True):
    """Minimize ``||alpha @ V||_p`` over the simplex by pairwise Frank-Wolfe.

    Each iteration moves mass from the worst active vertex to the best vertex
    with an exact line search (closed form for ``p = 2``, root of the
    directional derivative otherwise).  The Frank-Wolfe gap is
    ``||w||_p - min_i V_i . grad``, which for normalized rows is exactly the
    primal-dual gap of the Chebyshev problem.

    If the gap is still above ``tol`` after ``max_iter`` iterations and
    ``polish`` is set, the best iterate is refined by :func:`_sqp_polish`.

    Returns
    -------
    alpha : ndarray
        Best iterate found.
    info : dict
        ``{"iterations", "gap", "objective", "polished"}``.
    """
    V = np.asarray(V, dtype=float)
    m = V.shape[0]
    p = numkit.check_p(p)
    if not (1.0 < p < INF):
        raise UnsupportedNorm("Frank-Wolfe needs 1 < p < inf; use the LP solver")
    if m == 1:
        return np.ones(1), {"iterations": 0, "gap": 0.0, "objective": numkit.lp_norm(V[0], p)}

    alpha = np.full(m, 1.0 / m) if alpha0 is None else _as_simplex(alpha0)
    best_alpha, best_obj, best_gap = alpha.copy(), INF, INF
    it = 0
    for it in range(max_iter + 1):
        w = alpha @ V
        grad_w, r = _norm_grad(w, p)
        if r == 0.0:
            best_alpha, best_obj, best_gap = alpha.copy(), 0.0, 0.0
            break
        scores = V @ grad_w
        s = int(np.argmin(scores))
        # objective suboptimality is bounded by the gap and by r itself
        gap = min(r - scores[s], r)
        # near the optimum r stalls at round-off while the gap keeps shrinking
        flat = abs(r - best_obj) <= 1e-14 * max(r, 1e-300)
        if r < best_obj and not flat or flat and gap < best_gap:
            best_alpha, best_obj, best_gap = alpha.copy(), r, gap
        if gap <= tol or it == max_iter:
            break
        support = np.flatnonzero(alpha > 0.0)
        a = int(support[np.argmax(scores[support])])
        if a == s or scores[a] - scores[s] <= 0.0:
            break
        gmax = alpha[a]
        delta = V[s] - V[a]
        if p == 2.0:
            dd = float(delta @ delta)
            gamma = gmax if dd == 0.0 else min(max(-float(w @ delta) / dd, 0.0), gmax)
        else:
            def dphi(g):
                return float(delta @ _norm_grad(w + g * delta, p)[0])

            if dphi(gmax) <= 0.0:
                gamma = gmax
            else:
                gamma = brentq(dphi, 0.0, gmax, xtol=1e-16, rtol=4 * np.finfo(float).eps)
        if gamma <= 0.0:
            break
        alpha = alpha.copy()
        alpha[s] += gamma
        if gamma >= gmax:
            alpha[a] = 0.0
        else:
            alpha[a] -= gamma
    info = {"iterations": it, "gap": float(best_gap), "objective": float(best_obj), "polished": False}
    if best_gap > tol and best_obj > 0.0:
        if polish:
            a2, r2, gap2 = _sqp_polish(V, p, best_alpha, tol=tol)
            if gap2 < best_gap and r2 <= best_obj * (1.0 + 1e-12):
                best_alpha = a2
                info.update(gap=gap2, objective=r2, polished=True)
    return best_alpha, info


def _fw_gap(V, p, alpha):
    grad_w, r = _norm_grad(alpha @ V, p)
    return r, min(r - float(np.min(V @ grad_w)), r)


def min_norm_simplex_nnls(C):
    """Exact ``argmin ||C beta||_2`` over the simplex via non-negative least squares.

    Uses ``min_{x >= 0} ||C x||^2 + (1.x - 1)^2``, whose solution normalized
    to unit sum is the simplex minimizer.
    """
    C = np.asarray(C, dtype=float)
    m = C.shape[1]
    M = np.vstack([C, np.ones((1, m))])
    b = np.zeros(M.shape[0])
    b[-1] = 1.0
    x, _ = nnls(M, b, maxiter=50 * m)
    s = x.sum()
    if not s > 0.0:
        return np.full(m, 1.0 / m)
    return x / s


def _sqp_polish(V, p, alpha, max_iter=50, tol=0.0):
    """Sequential quadratic programming on ``F(alpha) = ||alpha @ V||_p^2 / 2``.

    Frank-Wolfe crawls on some instances (near-zero entries of ``w`` with
    ``p < 2``, degenerate faces when ``m > n``).  Each step here minimizes the
    exact second-order model of ``F`` over the simplex (solved exactly with
    NNLS) followed by an exact line search; near the optimum the active face
    is identified and convergence is quadratic.  Returns the best
    ``(alpha, r, gap)`` seen.
    """
    m = V.shape[0]
    a = _as_simplex(alpha)
    r, gap = _fw_gap(V, p, a)
    best = (a, r, gap)
    for _ in range(max_iter):
        if gap <= tol or r == 0.0:
            break
        w = a @ V
        u = w / r
        v = u if p == 2.0 else numkit.signed_power(u, p - 1.0)
        Av = V @ v
        g = r * Av
        if p == 2.0:
            Mq = V @ V.T
        else:
            dg = np.maximum(np.abs(u), 1e-12) ** (p - 2.0)
            Mq = (p - 1.0) * ((V * dg) @ V.T) + (2.0 - p) * np.outer(Av, Av)
        Mq = 0.5 * (Mq + Mq.T)
        lam, Q = np.linalg.eigh(Mq)
        lam = np.maximum(lam, 0.0) + 1e-12 * max(lam.max(), 1e-300)
        B = np.sqrt(lam)[:, None] * Q.T
        c = (Q.T @ (Mq @ a - g)) / np.sqrt(lam)
        target = min_norm_simplex_nnls(B - np.outer(c, np.ones(m)))
        delta = target - a
        if not np.any(delta):
            break
        dw = delta @ V

        def dphi(t):
            return float(dw @ _norm_grad(w + t * dw, p)[0])

        if dphi(0.0) >= 0.0:
            break
        t = 1.0 if dphi(1.0) <= 0.0 else brentq(dphi, 0.0, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)
        a = _as_simplex(a + t * delta)
        r, gap = _fw_gap(V, p, a)
        if gap < best[2] and r <= best[1] * (1.0 + 1e-12):
            best = (a, r, gap)
    return best




def solve_dual_fw(gs, max_iter=20, tol=1e-6):
    """Approximate dual solution for ``p in (1, inf)`` by Frank-Wolfe.

    Starts from the uniform simplex point.  Always returns the best iterate.
    """
    alpha, _ = fw_min_norm(gs.ghat, gs.p, max_iter=max_iter, tol=tol)
    return alpha


# ---------------------------------------------------------------------------
# linear programs for p in {1, inf}


def _check_lp_caps(gs):
    if gs.n > LP_MAX_N or gs.m > LP_MAX_M:
        raise DimensionCapExceeded(
            f"LP path supports n <= {LP_MAX_N}, m <= {LP_MAX_M}; got n = {gs.n}, m = {gs.m}"
        )
    if gs.p not in (1.0, INF):
        raise UnsupportedNorm(f"LP path is for p in {{1, inf}}, got p = {gs.p}")


def _linprog(c, A_ub, b_ub, A_eq=None, b_eq=None, bounds=None):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    return res


def solve_dual_lp(gs):
    """Solve the dual exactly as a linear program (``p = 1`` or ``p = inf``).

    Returns ``(alpha, r_star)``.
    """
    _check_lp_caps(gs)
    m, n = gs.m, gs.n
    At = gs.ghat.T  # (n, m)
    if gs.p == 1.0:
        # x = [alpha, z]; min sum z  s.t.  -z <= At alpha <= z
        c = np.r_[np.zeros(m), np.ones(n)]
        A_ub = np.block([[At, -np.eye(n)], [-At, -np.eye(n)]])
        A_eq = np.r_[np.ones(m), np.zeros(n)][None, :]
    else:
        # x = [alpha, tau]; min tau  s.t.  -tau <= (At alpha)_j <= tau
        c = np.r_[np.zeros(m), 1.0]
        A_ub = np.block([[At, -np.ones((n, 1))], [-At, -np.ones((n, 1))]])
        A_eq = np.r_[np.ones(m), 0.0][None, :]
    res = _linprog(c, A_ub, np.zeros(2 * n), A_eq, [1.0], bounds=(0, None))
    if res.status != 0:
        raise RuntimeError(f"dual LP failed: {res.message}")
    alpha = _as_simplex(res.x[:m])
    return alpha, numkit.lp_norm(alpha @ gs.ghat, gs.p)


def _primal_lp_rows(gs, extra_r):
    """Constraint blocks for ``ghat_i . v >= r`` plus the l_q ball."""
    m, n = gs.m, gs.n
    if gs.p == 1.0:
        # x = [v, r], -1 <= v <= 1
        A_ub = np.c_[-gs.ghat, np.ones(m)]
        b_ub = np.zeros(m)
        bounds = [(-1.0, 1.0)] * n + [extra_r]
        nv = n + 1
    else:
        # x = [v, z, r], -z <= v <= z, sum z <= 1
        I = np.eye(n)
        A_ub = np.block([
            [-gs.ghat, np.zeros((m, n)), np.ones((m, 1))],
            [I, -I, np.zeros((n, 1))],
            [-I, -I, np.zeros((n, 1))],
            [np.zeros((1, n)), np.ones((1, n)), np.zeros((1, 1))],
        ])
        b_ub = np.r_[np.zeros(m + 2 * n), 1.0]
        bounds = [(None, None)] * n + [(0.0, None)] * n + [extra_r]
        nv = 2 * n + 1
    return A_ub, b_ub, bounds, nv


def recover_primal_lp(alpha, gs):
    """Recover a primal direction for ``p in {1, inf}`` by linear programming.

    First solves the feasibility problem ``ghat_i . v >= r*``, ``||v||_q <= 1``
    with ``r*`` taken from ``alpha``; if round-off makes that infeasible, the
    primal LP (maximize ``r``) is solved instead.  The optimal direction need
    not be unique; the vertex returned is whatever the LP lands on.
    """
    _check_lp_caps(gs)
    alpha = _as_simplex(alpha)
    r_star = numkit.lp_norm(alpha @ gs.ghat, gs.p)
    target = max(r_star - 1e-10, 0.0)
    A_ub, b_ub, bounds, nv = _primal_lp_rows(gs, (target, target))
    res = _linprog(np.zeros(nv), A_ub, b_ub, bounds=bounds)
    if res.status != 0:
        c = np.zeros(nv)
        c[-1] = -1.0
        A_ub, b_ub, bounds, nv = _primal_lp_rows(gs, (None, None))
        res = _linprog(c, A_ub, b_ub, bounds=bounds)
        if res.status != 0:
            raise RuntimeError(f"primal LP failed: {res.message}")
    v = res.x[: gs.n].copy()
    nq = numkit.lp_norm(v, gs.q)
    if nq > 1.0:
        v /= nq
    return v


# ---------------------------------------------------------------------------
# recovery and the full direction


def recover_primal(alpha, gs, eps=0.0):
    """Closed-form primal recovery for ``1 < p < inf``.

    Returns ``(w, r_star, v)`` with ``w = sum alpha_i ghat_i``,
    ``r_star = ||w||_p`` and ``v = sgn(w) |w|^(p-1) / ||w||_p^(p-1)``.
    """
    if not (1.0 < gs.p < INF):
        raise UnsupportedNorm("closed-form recovery needs 1 < p < inf; use recover_primal_lp")
    alpha = np.asarray(alpha, dtype=float)
    w = alpha @ gs.ghat
    r = numkit.lp_norm(w, gs.p)
    if r <= eps or r == 0.0:
        raise DegenerateDirection(f"||w||_p = {r:.3e} <= {eps:.3e}")
    v = w / r if gs.p == 2.0 else numkit.signed_power(w / r, gs.p - 1.0)
    return w, r, v


def solve_dual(gs, solver="auto", fw_max_iter=500, fw_tol=1e-10):
    """Dispatch to a dual solver.  Returns ``(alpha, solver_name)``."""
    if solver == "auto":
        if gs.p in (1.0, INF):
            solver = "lp"
        elif gs.m == 1:
            solver = "single"
        elif gs.p == 2.0 and gs.m == 2:
            solver = "exact2"
        elif gs.p == 2.0 and gs.m == 3:
            solver = "exact3"
        else:
            solver = "fw"
    if solver == "single":
        if gs.m != 1:
            raise WrongArity("single-loss solver needs m = 1")
        return np.ones(1), solver
    if solver == "exact2":
        return solve_dual_exact2(gs), solver
    if solver == "exact3":
        return solve_dual_exact3(gs), solver
    if solver == "fw":
        return solve_dual_fw(gs, max_iter=fw_max_iter, tol=fw_tol), solver
    if solver == "lp":
        return solve_dual_lp(gs)[0], solver
    raise ValueError(f"unknown solver {solver!r}")


def compute_direction(gs, eps=DEFAULT_EPS, *, active_tol=ACTIVE_TOL, solver="auto",
                      fw_max_iter=500, fw_tol=1e-10):
    """One direction-selection step.

    Solves the dual, forms ``w``; if ``||w||_p <= eps`` the point is
    (eps-)Pareto-stationary and the result is marked ``terminated`` with no
    direction.  Otherwise the unit direction ``v`` is recovered and scaled by
    ``sum_i g_i . v`` to give the update ``d``.
    """
    alpha, used = solve_dual(gs, solver, fw_max_iter=fw_max_iter, fw_tol=fw_tol)
    w = alpha @ gs.ghat
    r = numkit.lp_norm(w, gs.p)
    lp = gs.p in (1.0, INF)
    if r <= eps:
        return DirectionResult(alpha=alpha, w=w, r_star=r, v=None, d=None,
                               active=np.ones(gs.m, dtype=bool), terminated=True,
                               solver=used, nonunique_possible=lp)
    if lp:
        v = recover_primal_lp(alpha, gs)
    else:
        _, _, v = recover_primal(alpha, gs)
    inner = gs.ghat @ v
    scale = float(gs.grads.sum(axis=0) @ v)
    return DirectionResult(
        alpha=alpha,
        w=w,
        r_star=r,
        v=v,
        d=scale * v,
        active=(inner - r) <= active_tol,
        terminated=False,
        solver=used,
        nonunique_possible=lp,
        info={"inner": inner, "scale": scale},
    )
