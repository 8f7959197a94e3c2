"""Small dense linear algebra and l_p norm helpers.

``p = inf`` is represented by ``numpy.inf`` (``math.inf``), never by a large
finite number, so that conjugate exponents come out exactly.
"""

import math

import numpy as np

from .errors import DimensionMismatch, ZeroGradient

INF = math.inf

#: ``normalize_grad`` raises below this norm.
ZERO_GRAD_THRESHOLD = 1e-12


def check_p(p):
    p = float(p)
    if not (p >= 1.0):
        raise ValueError(f"norm parameter must satisfy p >= 1, got {p!r}")
    return p


def conjugate(p):
    """Return the conjugate exponent ``q`` with ``1/p + 1/q = 1``."""
    p = check_p(p)
    if p == 1.0:
        return INF
    if p == INF:
        return 1.0
    if p == 2.0:
        return 2.0
    return p / (p - 1.0)


def lp_norm(x, p):
    """l_p norm of a vector (``p`` in ``[1, inf]``).

    For general ``p`` the entries are rescaled by ``max|x_j|`` first so that
    large or tiny vectors do not over/underflow in ``|x|**p``.
    """
    x = np.asarray(x, dtype=float).ravel()
    p = check_p(p)
    if x.size == 0:
        return 0.0
    a = np.abs(x)
    if p == INF:
        return float(a.max())
    if p == 1.0:
        return float(np.sum(a))
    if p == 2.0:
        return float(np.sqrt(np.dot(x, x)))
    s = a.max()
    if s == 0.0:
        return 0.0
    return float(s * np.sum((a / s) ** p) ** (1.0 / p))


def normalize_grad(g, p):
    """Return ``g / ||g||_p``.

    Raises
    ------
    ZeroGradient
        If ``||g||_p < ZERO_GRAD_THRESHOLD``.
    """
    g = np.asarray(g, dtype=float)
    nrm = lp_norm(g, p)
    if not nrm >= ZERO_GRAD_THRESHOLD:
        raise ZeroGradient(f"gradient has l_{p} norm {nrm:.3e}; cannot normalize")
    return g / nrm


def gram(vectors):
    """Gram matrix ``G_ij = v_i . v_j`` of a sequence of equal-length vectors."""
    rows = [np.asarray(v, dtype=float).ravel() for v in vectors]
    if not rows:
        raise DimensionMismatch("need at least one vector")
    n = rows[0].size
    if any(r.size != n for r in rows):
        raise DimensionMismatch("all vectors must have the same dimension")
    A = np.stack(rows)
    G = A @ A.T
    # exact symmetry of stored entries
    return 0.5 * (G + G.T)


def pinv_small(A, rcond=1e-10):
    """Moore-Penrose pseudo-inverse of a small symmetric matrix.

    Eigenvalues with ``|lam| <= rcond * max|lam|`` are treated as zero.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    S = 0.5 * (A + A.T)
    lam, V = np.linalg.eigh(S)
    if lam.size == 0:
        return np.zeros_like(S)
    cutoff = rcond * np.max(np.abs(lam))
    keep = np.abs(lam) > cutoff
    inv = np.zeros_like(lam)
    inv[keep] = 1.0 / lam[keep]
    P = (V * inv) @ V.T
    return 0.5 * (P + P.T)


def signed_power(w, e):
    """Componentwise ``sgn(w) * |w|**e``."""
    w = np.asarray(w, dtype=float)
    if e == 1:
        return w.copy()
    return np.sign(w) * np.abs(w) ** e
