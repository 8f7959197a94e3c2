"""The two hand-checkable three-loss examples, with their closed-form answers."""

from dataclasses import dataclass

import numpy as np

from . import baselines
from .core import GradientSet, compute_direction

S2, S5, S11 = np.sqrt(2.0), np.sqrt(5.0), np.sqrt(11.0)

#: three gradients where MGDA, ConFIG and IMTL-G all disagree with ours
TRIPLE = np.array([[5.0, 0.0, 0.0], [0.0, 3.0, 0.0], [1 / 5, 14 / 15, 2 * S5 / 15]])

#: unit gradients e1, e2 and (2, 2, 1)/3, scaled by ``c``
def cube_corner(c=(1.0, 1.0, 1.0)):
    base = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [2 / 3, 2 / 3, 1 / 3]])
    return np.asarray(c, dtype=float)[:, None] * base


@dataclass
class Check:
    label: str
    value: np.ndarray
    expected: np.ndarray
    tol: float = 1e-9

    @property
    def ok(self):
        v, e = np.atleast_1d(self.value), np.atleast_1d(self.expected)
        if v.dtype == bool or e.dtype == bool:
            return bool(np.array_equal(v, e))
        return v.shape == e.shape and bool(np.max(np.abs(v - e)) <= self.tol)


def triple_checks(tol=1e-9):
    gs = GradientSet(TRIPLE)
    ours = compute_direction(gs)
    mg = baselines.mgda(gs)
    cf = baselines.config_dir(gs)
    im = baselines.imtl_g(gs)
    u = gs.ghat
    a, b = np.sqrt(5 / 11), 1 / S11
    return [
        Check("ours v", ours.v, np.array([1 / S2, 1 / S2, 0.0]), tol),
        Check("ours r*", ours.r_star, 1 / S2, tol),
        Check("ours ghat3.v", u[2] @ ours.v, 17 / (15 * S2), tol),
        Check("ours active set", ours.active, np.array([True, True, False])),
        Check("MGDA alpha", mg.alpha, np.array([0.0, 0.0, 1.0]), tol),
        Check("ConFIG v", cf.v_unit, np.array([a, a, -b]), tol),
        Check("ConFIG r~", cf.common_inner, a, tol),
        Check("IMTL-G alpha", im.alpha, np.array([-13 / 22, -20 / 11, 75 / 22]), tol),
        Check("IMTL-G v (unit)", im.v_unit, np.array([-a, -a, b]), tol),
        Check("IMTL-G ghat.v", u @ im.v_unit, np.full(3, -a), tol),
    ]


def corner_checks(c=(1.0, 1.0, 1.0), tol=1e-9):
    gs = GradientSet(cube_corner(c))
    ours = compute_direction(gs)
    cf = baselines.config_dir(gs)
    u = gs.ghat
    return [
        Check("ours v", ours.v, np.array([1.0, 1.0, 0.0]) / S2, tol),
        Check("ours ghat.v", u @ ours.v, np.array([1 / S2, 1 / S2, 2 * S2 / 3]), tol),
        Check("ConFIG v", cf.v_unit, np.array([1.0, 1.0, -1.0]) / np.sqrt(3.0), tol),
        Check("ConFIG ghat.v", u @ cf.v_unit, np.full(3, 1 / np.sqrt(3.0)), tol),
    ]


def format_table(title, checks):
    lines = [title, f"  {'quantity':<18} {'computed':<44} {'expected':<44} ok"]
    for ch in checks:
        v = np.array2string(np.atleast_1d(ch.value), precision=10, max_line_width=200)
        e = np.array2string(np.atleast_1d(ch.expected), precision=10, max_line_width=200)
        lines.append(f"  {ch.label:<18} {v:<44} {e:<44} {'yes' if ch.ok else 'NO'}")
    return "\n".join(lines)
