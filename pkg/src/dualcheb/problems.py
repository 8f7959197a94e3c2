"""Manufactured-solution PDE benchmarks and a synthetic quadratic problem.

Each PDE problem exposes a sampler, its loss terms written against a generic
*field* (anything returning values and input jets at a batch of points), the
exact solution, and the evaluation grid.  Passing the network as the field
gives trainable losses; passing the exact solution (:func:`exact_field`)
probes the PDE, forcing, boundary and initial formulas, which must all vanish.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import autodiff as ad
from .errors import ZeroReference
from .oracle import QuadraticEnsemble

EVAL_POINTS_PER_AXIS = 101
PROBE_TOL = 1e-6


@dataclass(frozen=True)
class SampleBatch:
    interior: np.ndarray
    boundary: np.ndarray
    initial: Optional[np.ndarray]
    seed: int
    step: int


def relative_l2(pred, ref):
    """``||pred - ref||_2 / ||ref||_2`` over all points."""
    pred = np.asarray(pred, dtype=float).ravel()
    ref = np.asarray(ref, dtype=float).ravel()
    if pred.shape != ref.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {ref.shape}")
    den = np.linalg.norm(ref)
    if den == 0.0:
        raise ZeroReference("reference field is identically zero")
    return float(np.linalg.norm(pred - ref) / den)


def _edge_counts(total, edges):
    base, rem = divmod(total, edges)
    return [base + (i < rem) for i in range(edges)]


class PinnProblem:
    """Base class: a rectangular domain, loss names and the exact solution."""

    name = ""
    loss_names = ()
    lower = np.zeros(2)
    upper = np.ones(2)

    def __init__(self, n_r=1024, n_b=256, n_i=256):
        self.n_r, self.n_b, self.n_i = int(n_r), int(n_b), int(n_i)
        worst = self.probe_residual()
        if not worst <= PROBE_TOL:
            raise AssertionError(f"{self.name}: manufactured solution residual {worst:.3e}")

    @property
    def m(self):
        return len(self.loss_names)

    @property
    def input_dim(self):
        return self.lower.size

    # subclasses provide these
    def exact(self, X):
        raise NotImplementedError

    def exact_jets(self, X, axes, order):
        raise NotImplementedError

    def sample(self, seed, step):
        raise NotImplementedError

    def loss_terms(self, field, batch):
        raise NotImplementedError

    def pde_residual(self, field, X):
        raise NotImplementedError

    def probe_residual(self, n=41):
        """Max PDE residual of the exact solution on an ``n x n`` grid."""
        X = self.grid(n)
        return float(np.max(np.abs(self.pde_residual(exact_field(self), X))))

    def grid(self, n=EVAL_POINTS_PER_AXIS):
        axes = [np.linspace(lo, hi, n) for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([a.ravel() for a in mesh], axis=1)

    def eval_points(self):
        return self.grid(EVAL_POINTS_PER_AXIS)

    def eval_grid_spec(self):
        return {"points_per_axis": EVAL_POINTS_PER_AXIS, "lower": self.lower.tolist(),
                "upper": self.upper.tolist(), "layout": "meshgrid ij"}

    def _uniform(self, rng, n):
        return rng.uniform(self.lower, self.upper, size=(n, self.input_dim))


# ---------------------------------------------------------------------------
# fields


def net_field(theta, spec):
    """Field backed by the network with flat parameters ``theta``."""

    def field(X, axes=(), order=2):
        if not axes:
            return ad.forward(theta, spec, X), {}
        return ad.forward_jets(theta, spec, X, axes, order)

    return field


def exact_field(problem):
    """Field returning the analytic solution and its input derivatives."""

    def field(X, axes=(), order=2):
        X = np.atleast_2d(X)
        return problem.exact(X), problem.exact_jets(X, axes, order)

    return field


# ---------------------------------------------------------------------------
# Helmholtz


class Helmholtz2D(PinnProblem):
    """``u_xx + u_yy + k^2 u = f`` on ``[-1, 1]^2`` with zero Dirichlet data.

    Exact solution ``sin(a1 pi x) sin(a2 pi y)``.
    """

    name = "helmholtz2d"
    loss_names = ("residual", "boundary")

    def __init__(self, a1=1.0, a2=4.0, k=1.0, **sizes):
        self.a1, self.a2, self.k = float(a1), float(a2), float(k)
        self.lower = np.array([-1.0, -1.0])
        self.upper = np.array([1.0, 1.0])
        super().__init__(**sizes)

    def exact(self, X):
        return (np.sin(self.a1 * np.pi * X[:, 0]) * np.sin(self.a2 * np.pi * X[:, 1]))[:, None]

    def forcing(self, X):
        lam = self.k**2 - (self.a1**2 + self.a2**2) * np.pi**2
        return lam * self.exact(X)

    def exact_jets(self, X, axes, order):
        wx, wy = self.a1 * np.pi, self.a2 * np.pi
        sx, cx = np.sin(wx * X[:, 0]), np.cos(wx * X[:, 0])
        sy, cy = np.sin(wy * X[:, 1]), np.cos(wy * X[:, 1])
        u = (sx * sy)[:, None]
        table = {0: ((wx * cx * sy)[:, None], -wx**2 * u), 1: ((wy * sx * cy)[:, None], -wy**2 * u)}
        return {a: ad.Jet2(u, table[a][0], table[a][1] if order == 2 else None) for a in axes}

    def pde_residual(self, field, X):
        u, jets = field(X, (0, 1), 2)
        return jets[0].u_ss + jets[1].u_ss + self.k**2 * u - self.forcing(X)

    def sample(self, seed, step):
        rng = np.random.default_rng([seed, step])
        interior = self._uniform(rng, self.n_r)
        parts = []
        # edges in order x = -1, x = 1, y = -1, y = 1
        for e, cnt in enumerate(_edge_counts(self.n_b, 4)):
            axis, side = divmod(e, 2)
            pts = self._uniform(rng, cnt)
            pts[:, axis] = self.upper[axis] if side else self.lower[axis]
            parts.append(pts)
        return SampleBatch(interior, np.vstack(parts), None, seed, step)

    def loss_terms(self, field, batch):
        res = self.pde_residual(field, batch.interior)
        ub, _ = field(batch.boundary)
        return [ad.mean_square(res), ad.mean_square(ub)]


# ---------------------------------------------------------------------------
# Klein-Gordon


class KleinGordon1D(PinnProblem):
    """``u_tt - u_xx + u^3 = f`` on ``(x, t) in [0, 1]^2``.

    Exact solution ``x cos(5 pi t) + (x t)^3``; Dirichlet data at ``x = 0, 1``
    from it, and initial data ``u(x, 0) = x``, ``u_t(x, 0) = 0``.
    """

    name = "kleingordon1d"
    loss_names = ("residual", "boundary", "initial")

    def __init__(self, **sizes):
        self.lower = np.array([0.0, 0.0])
        self.upper = np.array([1.0, 1.0])
        super().__init__(**sizes)

    def exact(self, X):
        x, t = X[:, 0], X[:, 1]
        return (x * np.cos(5 * np.pi * t) + (x * t) ** 3)[:, None]

    def forcing(self, X):
        x, t = X[:, 0], X[:, 1]
        u = x * np.cos(5 * np.pi * t) + (x * t) ** 3
        f = -25 * np.pi**2 * x * np.cos(5 * np.pi * t) + 6 * t * x**3 - 6 * t**3 * x + u**3
        return f[:, None]

    def exact_jets(self, X, axes, order):
        x, t = X[:, 0], X[:, 1]
        w = 5 * np.pi
        u = self.exact(X)
        u_x = np.cos(w * t) + 3 * x**2 * t**3
        u_xx = 6 * x * t**3
        u_t = -w * x * np.sin(w * t) + 3 * t**2 * x**3
        u_tt = -(w**2) * x * np.cos(w * t) + 6 * t * x**3
        table = {0: (u_x, u_xx), 1: (u_t, u_tt)}
        return {a: ad.Jet2(u, table[a][0][:, None], table[a][1][:, None] if order == 2 else None)
                for a in axes}

    def pde_residual(self, field, X):
        u, jets = field(X, (0, 1), 2)
        return jets[1].u_ss - jets[0].u_ss + ad.cube(u) - self.forcing(X)

    def sample(self, seed, step):
        rng = np.random.default_rng([seed, step])
        interior = self._uniform(rng, self.n_r)
        parts = []
        for side, cnt in enumerate(_edge_counts(self.n_b, 2)):
            pts = self._uniform(rng, cnt)
            pts[:, 0] = self.upper[0] if side else self.lower[0]
            parts.append(pts)
        initial = self._uniform(rng, self.n_i)
        initial[:, 1] = self.lower[1]
        return SampleBatch(interior, np.vstack(parts), initial, seed, step)

    def loss_terms(self, field, batch):
        res = self.pde_residual(field, batch.interior)
        ub, _ = field(batch.boundary)
        u0, jets = field(batch.initial, (1,), 1)
        init = ad.add(ad.mean_square(u0 - batch.initial[:, :1]), ad.mean_square(jets[1].u_s))
        return [ad.mean_square(res), ad.mean_square(ub - self.exact(batch.boundary)), init]


# ---------------------------------------------------------------------------
# loss helpers


def loss_builder(problem, spec, batch):
    """``theta -> [L_1, ..., L_m]`` sharing one network evaluation per term."""

    def build(theta):
        return problem.loss_terms(net_field(theta, spec), batch)

    return build


def losses(problem, spec, batch):
    """One scalar builder ``theta -> L_i`` per loss term."""
    build = loss_builder(problem, spec, batch)
    return [lambda theta, i=i: build(theta)[i] for i in range(problem.m)]


def evaluate(problem, theta, spec):
    """Relative L2 error of the network on the evaluation grid."""
    X = problem.eval_points()
    return relative_l2(ad.forward(theta, spec, X), problem.exact(X))


# ---------------------------------------------------------------------------
# synthetic quadratics


class QuadraticProblem:
    """Convex quadratic losses in parameter space; no network involved.

    The default instance has two losses sharing the minimizer ``(1, -1)``.
    """

    name = "quadratic2"

    def __init__(self, ensemble=None):
        if ensemble is None:
            H = np.array([[[1.0, 0.0], [0.0, 4.0]], [[3.0, 1.0], [1.0, 2.0]]])
            c = np.array([[1.0, -1.0], [1.0, -1.0]])
            ensemble = QuadraticEnsemble(H, c)
        self.ensemble = ensemble
        self.loss_names = tuple(f"q{i + 1}" for i in range(ensemble.m))
        self.theta_star = ensemble.minimizer()

    @property
    def m(self):
        return self.ensemble.m

    @property
    def n(self):
        return self.ensemble.n

    def init(self, seed):
        return np.random.default_rng(seed).normal(0.0, 2.0, size=self.n)

    def values_and_grads(self, theta):
        return self.ensemble.losses(theta), self.ensemble.grads(theta)

    def evaluate(self, theta):
        return relative_l2(theta, self.theta_star)

    def beta(self, q=2.0):
        return self.ensemble.beta(q)[0]

    def eval_grid_spec(self):
        return {"points_per_axis": 0, "note": "distance to the known minimizer"}


PROBLEMS = {"helmholtz2d": Helmholtz2D, "kleingordon1d": KleinGordon1D, "quadratic2": QuadraticProblem}


def make_problem(name, **kw):
    try:
        cls = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    return cls(**kw)


def helmholtz2d(a1=1.0, a2=4.0, k=1.0, **sizes):
    return Helmholtz2D(a1, a2, k, **sizes)


def klein_gordon1d(**sizes):
    return KleinGordon1D(**sizes)
