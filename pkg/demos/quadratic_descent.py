"""Plain steps on two conflicting quadratics, checked against the descent bound."""

import numpy as np

from dualcheb import oracle

H = np.array([[[2.0, 0.0], [0.0, 1.0]], [[1.0, 0.5], [0.5, 3.0]]])
c = np.array([[1.0, 0.0], [-1.0, 2.0]])
ens = oracle.QuadraticEnsemble(H, c)

for p in (1.5, 2.0, 3.0):
    rep = oracle.descent_check(ens, steps=500, p=p, theta0=np.array([5.0, -5.0]))
    d = rep.details
    print(f"p={p}: beta={d['beta']:.3f} steps={d['steps']} stopped={d['terminated']} ({d['reason'] or 'budget'})")
    print(f"       total loss {d['L0']:.4f} -> {rep.solver_r:.6f} (minimum of the sum {rep.oracle_r:.6f})")
    print(f"       checks: {rep.passes}")
