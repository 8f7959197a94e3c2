"""Reference direction-selection rules: MGDA, ConFIG, IMTL-G, GAPO and the
DCGD angle bisector.

All baselines work in the Euclidean geometry regardless of ``gs.p``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numkit
from .core import fw_min_norm
from .errors import DegenerateBisector, Infeasible, SingularSystem, WrongArity

FW_MAX_ITER = 20
FW_TOL = 1e-6


@dataclass
class BaselineResult:
    method: str
    v: np.ndarray
    alpha: np.ndarray
    common_inner: Optional[float] = None
    v_unit: Optional[np.ndarray] = None


def _unit(x):
    n = np.linalg.norm(x)
    return x / n if n > 0 else x.copy()


def _ghat2(gs):
    return gs.grads / np.linalg.norm(gs.grads, axis=1, keepdims=True)


def mgda(gs, max_iter=FW_MAX_ITER, tol=FW_TOL):
    """Minimum-norm convex combination of the raw gradients (Frank-Wolfe)."""
    alpha, _ = fw_min_norm(gs.grads, 2.0, max_iter=max_iter, tol=tol)
    v = alpha @ gs.grads
    return BaselineResult("mgda", v, alpha, v_unit=_unit(v))


def gapo(gs, rho=1.0, max_iter=FW_MAX_ITER, tol=FW_TOL):
    """MGDA on ``g_i / ||g_i||_2**rho``; ``rho = 1`` is the Euclidean dual."""
    if rho < 0:
        raise ValueError("rho must be non-negative")
    norms = np.linalg.norm(gs.grads, axis=1, keepdims=True)
    scaled = gs.grads / norms**rho
    alpha, _ = fw_min_norm(scaled, 2.0, max_iter=max_iter, tol=tol)
    v = alpha @ scaled
    return BaselineResult("gapo", v, alpha, v_unit=_unit(v))


def config_dir(gs, atol=1e-6):
    """Minimum-norm solution of ``Ghat^T w = 1`` normalized to unit length.

    ``alpha`` holds the coefficients of ``w`` in the normalized gradients.

    Raises
    ------
    Infeasible
        If the equal-inner-product system has no solution.
    """
    ghat = _ghat2(gs)
    coef = numkit.pinv_small(numkit.gram(ghat)) @ np.ones(gs.m)
    w = coef @ ghat
    if np.max(np.abs(ghat @ w - 1.0)) > atol:
        raise Infeasible("ConFIG system Ghat^T w = 1 is inconsistent")
    v = w / np.linalg.norm(w)
    return BaselineResult("config", v, coef, common_inner=float(ghat[0] @ v), v_unit=v)


def imtl_g(gs, rcond_min=1e-12):
    """IMTL-G closed form: equal normalized inner products with ``sum alpha = 1``.

    The common inner product may be negative, in which case the direction
    leaves the dual cone.
    """
    if gs.m < 2:
        raise WrongArity("IMTL-G needs at least two losses")
    g = gs.grads
    u = _ghat2(gs)
    D = g[0] - g[1:]
    U = u[0] - u[1:]
    DU = D @ U.T
    if 1.0 / np.linalg.cond(DU) < rcond_min:
        raise SingularSystem("IMTL-G system (D U^T) is singular")
    tail = np.linalg.solve(DU.T, U @ g[0])
    alpha = np.r_[1.0 - tail.sum(), tail]
    v = alpha @ g
    vu = _unit(v)
    return BaselineResult("imtlg", v, alpha, common_inner=float(u[0] @ vu), v_unit=vu)


def dcgd_center(gs, tol=1e-10):
    """Angle bisector of two normalized gradients."""
    if gs.m != 2:
        raise WrongArity("the bisector is only defined for m = 2")
    u = _ghat2(gs)
    s = u[0] + u[1]
    n = np.linalg.norm(s)
    if n <= tol:
        raise DegenerateBisector("gradients are antipodal")
    v = s / n
    return BaselineResult("dcgd_center", v, np.array([0.5, 0.5]), common_inner=float(u[0] @ v), v_unit=v)
