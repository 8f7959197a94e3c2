"""Reverse-mode autodiff on numpy arrays, a tanh MLP, and order-2 input jets.

A :class:`Tape` records array-valued operations on :class:`Var` objects.
Only the flat parameter vector is watched; :meth:`Tape.backward` returns the
gradient of a scalar with respect to it.  The network code is written with
the polymorphic helpers below (``tanh``, ``matmul``, ...), so the same
functions run on plain numpy arrays for fast evaluation without a tape.

Input derivatives for PDE residuals come from jets: alongside the value
``z`` of every pre-activation we carry ``dz/ds`` and ``d2z/ds2`` for an input
axis ``s``.  Affine layers map jets linearly; for ``y = tanh(z)``

    y_s  = (1 - y^2) z_s
    y_ss = (1 - y^2) z_ss - 2 y (1 - y^2) z_s^2

Every jet rule is itself built from taped primitives, so gradients of losses
containing derivatives come out of the same backward sweep.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import GradientSet


class Var:
    """A value recorded on a tape."""

    __slots__ = ("value", "tape", "parents", "index")
    # make numpy defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, value, tape, parents=()):
        self.value = value
        self.tape = tape
        self.parents = parents
        self.index = tape._record(self)

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, key):
        return getitem(self, key)

    @property
    def T(self):
        return transpose(self)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 else shape)

    def __repr__(self):
        return f"Var(shape={self.value.shape})"


class Tape:
    """Linear record of operations; creation order is a topological order."""

    def __init__(self):
        self.nodes = []
        self.leaf = None

    def _record(self, var):
        self.nodes.append(var)
        return len(self.nodes) - 1

    def watch(self, theta):
        """Start recording with ``theta`` (flat float vector) as the leaf."""
        if self.nodes:
            raise RuntimeError("tape already in use; call reset() first")
        self.leaf = Var(np.asarray(theta, dtype=float), self)
        return self.leaf

    def reset(self):
        self.nodes = []
        self.leaf = None

    def backward(self, out):
        """Gradient of the scalar ``out`` with respect to the watched leaf."""
        if not isinstance(out, Var) or out.tape is not self:
            return np.zeros_like(self.leaf.value)
        if out.value.size != 1:
            raise ValueError("backward needs a scalar output")
        adj = [None] * (out.index + 1)
        adj[out.index] = np.ones_like(out.value)
        for i in range(out.index, -1, -1):
            g = adj[i]
            if g is None:
                continue
            for parent, vjp in self.nodes[i].parents:
                contrib = _unbroadcast(vjp(g), parent.value.shape)
                j = parent.index
                adj[j] = contrib if adj[j] is None else adj[j] + contrib
        leaf = adj[self.leaf.index] if self.leaf.index <= out.index else None
        return np.zeros_like(self.leaf.value) if leaf is None else leaf


def _unbroadcast(g, shape):
    g = np.asarray(g)
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


def _tape_of(*xs):
    for x in xs:
        if isinstance(x, Var):
            return x.tape
    return None


def _val(x):
    return x.value if isinstance(x, Var) else x


def _node(value, tape, *links):
    return Var(value, tape, tuple((p, f) for p, f in links if isinstance(p, Var)))


# ---------------------------------------------------------------------------
# primitives (accept Var or ndarray; return ndarray when no Var is involved)


def add(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return a + b
    return _node(_val(a) + _val(b), tape, (a, lambda g: g), (b, lambda g: g))


def sub(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return a - b
    return _node(_val(a) - _val(b), tape, (a, lambda g: g), (b, lambda g: -g))


def neg(a):
    if not isinstance(a, Var):
        return -a
    return _node(-a.value, a.tape, (a, lambda g: -g))


def mul(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return a * b
    av, bv = _val(a), _val(b)
    return _node(av * bv, tape, (a, lambda g: g * bv), (b, lambda g: g * av))


def matmul(a, b):
    """Matrix product with numpy's 1-D promotion rules (2-D or 1-D operands)."""
    tape = _tape_of(a, b)
    if tape is None:
        return a @ b
    av, bv = _val(a), _val(b)
    out = av @ bv
    # promote vectors to row / column matrices so both vjps are plain products
    A = av[None, :] if av.ndim == 1 else av
    B = bv[:, None] if bv.ndim == 1 else bv
    shape2 = (A.shape[0], B.shape[1])
    return _node(out, tape,
                 (a, lambda g: (np.reshape(g, shape2) @ B.T).reshape(av.shape)),
                 (b, lambda g: (A.T @ np.reshape(g, shape2)).reshape(bv.shape)))


def transpose(a):
    if not isinstance(a, Var):
        return a.T
    return _node(a.value.T, a.tape, (a, lambda g: g.T))


def reshape(a, shape):
    if not isinstance(a, Var):
        return np.reshape(a, shape)
    old = a.value.shape
    return _node(a.value.reshape(shape), a.tape, (a, lambda g: g.reshape(old)))


def getitem(a, key):
    if not isinstance(a, Var):
        return a[key]
    shape = a.value.shape

    parts = key if isinstance(key, tuple) else (key,)
    basic = all(isinstance(k, (slice, int, np.integer)) for k in parts)

    def vjp(g):
        out = np.zeros(shape)
        if basic:
            out[key] += g
        else:
            np.add.at(out, key, g)
        return out

    return _node(a.value[key], a.tape, (a, vjp))


def tanh(a):
    if not isinstance(a, Var):
        return np.tanh(a)
    y = np.tanh(a.value)
    return _node(y, a.tape, (a, lambda g: g * (1.0 - y * y)))


def square(a):
    if not isinstance(a, Var):
        return a * a
    v = a.value
    return _node(v * v, a.tape, (a, lambda g: 2.0 * g * v))


def cube(a):
    if not isinstance(a, Var):
        return a * a * a
    v = a.value
    return _node(v * v * v, a.tape, (a, lambda g: 3.0 * g * v * v))


def total(a):
    """Sum of all entries (a scalar)."""
    if not isinstance(a, Var):
        return np.sum(a)
    shape = a.value.shape
    return _node(np.sum(a.value), a.tape, (a, lambda g: np.broadcast_to(g, shape)))


def mean(a):
    if not isinstance(a, Var):
        return np.mean(a)
    shape, n = a.value.shape, a.value.size
    return _node(np.mean(a.value), a.tape, (a, lambda g: np.broadcast_to(g / n, shape)))


def mean_square(a):
    return mean(square(a))


# ---------------------------------------------------------------------------
# network


@dataclass(frozen=True)
class NetSpec:
    input_dim: int
    hidden: tuple = (50, 50)
    output_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.input_dim < 1 or self.output_dim < 1 or any(h < 1 for h in self.hidden):
            raise ValueError("all layer widths must be >= 1")

    @property
    def widths(self):
        return (self.input_dim, *self.hidden, self.output_dim)

    def layers(self):
        """``(w_slice, (out, in), b_slice)`` per layer in the flat vector.

        Each layer stores its weight matrix row-major, then its bias.
        """
        out, off = [], 0
        w = self.widths
        for fan_in, fan_out in zip(w[:-1], w[1:]):
            ws = slice(off, off + fan_in * fan_out)
            off += fan_in * fan_out
            bs = slice(off, off + fan_out)
            off += fan_out
            out.append((ws, (fan_out, fan_in), bs))
        return out

    @property
    def n_params(self):
        w = self.widths
        return sum((a + 1) * b for a, b in zip(w[:-1], w[1:]))


@dataclass
class NetParams:
    spec: NetSpec
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.shape != (self.spec.n_params,):
            raise ValueError(f"expected {self.spec.n_params} parameters, got {self.theta.shape}")

    def layer(self, k):
        ws, shape, bs = self.spec.layers()[k]
        return self.theta[ws].reshape(shape), self.theta[bs]


def init_xavier(spec, seed):
    """Xavier-normal weights (variance ``2 / (fan_in + fan_out)``), zero biases."""
    rng = np.random.default_rng(seed)
    theta = np.zeros(spec.n_params)
    for ws, (fan_out, fan_in), _ in spec.layers():
        std = np.sqrt(2.0 / (fan_in + fan_out))
        theta[ws] = rng.normal(0.0, std, size=fan_out * fan_in)
    return NetParams(spec, theta)


def _unpack(theta, spec):
    return [(reshape(theta[ws], shape), theta[bs]) for ws, shape, bs in spec.layers()]


def forward(theta, spec, X):
    """Network output at the rows of ``X`` (shape ``(N, input_dim)``)."""
    y = np.atleast_2d(X)
    layers = _unpack(theta, spec)
    for k, (W, b) in enumerate(layers):
        y = matmul(y, transpose(W)) + b
        if k < len(layers) - 1:
            y = tanh(y)
    return y


@dataclass
class Jet2:
    """Value and first/second derivatives along one input axis."""

    u: object
    u_s: object
    u_ss: Optional[object]


def forward_jets(theta, spec, X, axes=(0,), order=2):
    """Network output plus input derivatives along several axes.

    The value path is shared; each axis carries its own (first, second)
    derivative pair.  With ``order=1`` second derivatives are skipped and
    returned as None.

    Returns
    -------
    u : Var or ndarray, shape (N, output_dim)
    jets : dict mapping axis -> Jet2
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    for a in axes:
        if not 0 <= a < spec.input_dim:
            raise ValueError(f"axis {a} out of range for input dimension {spec.input_dim}")
    layers = _unpack(theta, spec)
    W0, b0 = layers[0]
    z = matmul(X, transpose(W0)) + b0
    # d/ds of the input is the unit vector e_s: the first pre-activation jet is
    # a column of W0 and its second derivative vanishes
    ds = {a: getitem(W0, (slice(None), a)) for a in axes}
    dss = {a: None for a in axes}
    for W, b in layers[1:]:
        y = tanh(z)
        t = 1.0 - square(y)
        Wt = transpose(W)
        for a in axes:
            zs, zss = ds[a], dss[a]
            if order == 2:
                curv = mul(mul(-2.0 * y, t), square(zs))
                yss = curv if zss is None else add(mul(t, zss), curv)
                dss[a] = matmul(yss, Wt)
            ds[a] = matmul(mul(t, zs), Wt)
        z = matmul(y, Wt) + b
    zero = np.zeros(_val(z).shape)
    jets = {}
    for a in axes:
        us = ds[a] if _val(ds[a]).shape == zero.shape else add(ds[a], zero)
        uss = None
        if order == 2:
            uss = zero if dss[a] is None else dss[a]
        jets[a] = Jet2(z, us, uss)
    return z, jets


def forward_jet(theta, spec, X, axis, order=2):
    """Single-axis version of :func:`forward_jets`."""
    return forward_jets(theta, spec, X, (axis,), order)[1][axis]


# ---------------------------------------------------------------------------
# per-loss gradients


def grouped_gradients(theta, build):
    """Values and parameter gradients of several scalar losses.

    ``build`` maps the (taped) flat parameter vector to a sequence of scalar
    losses.  One forward recording, then one reverse sweep per loss.

    Returns ``(values, grads)`` with ``grads`` of shape ``(m, n)``.
    """
    tape = Tape()
    th = tape.watch(theta)
    outs = list(build(th))
    values = np.array([float(_val(o)) for o in outs])
    grads = np.stack([tape.backward(o) for o in outs])
    # drop the node list so the tape <-> node references do not wait for the
    # cyclic garbage collector
    tape.reset()
    return values, grads


def loss_gradients(params, losses, p=2.0):
    """Per-loss gradients packed into a :class:`GradientSet`.

    ``losses`` is either a sequence of builders ``theta -> scalar`` or one
    callable returning all losses at once (which lets them share a forward
    pass).  ``ZeroGradient`` propagates from the normalization.
    """
    theta = params.theta if isinstance(params, NetParams) else np.asarray(params, dtype=float)
    if callable(losses):
        build = losses
    else:
        builders = list(losses)

        def build(th):
            return [f(th) for f in builders]

    values, grads = grouped_gradients(theta, build)
    return GradientSet(grads, p), values
