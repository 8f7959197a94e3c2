"""A short Helmholtz run for the Chebyshev rule and the summed-gradient baseline.

Full-length runs take a few minutes each; pass a step count to go longer:

    python demos/helmholtz_short.py 2000
"""

import sys

from dualcheb.train import TrainConfig, train

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 300
for method in ("ours", "adam"):
    cfg = TrainConfig(problem="helmholtz2d", method=method, steps=steps, log_every=max(1, steps // 5))
    res = train(cfg, write=False)
    print(method)
    for rec in res:
        losses = " ".join(f"{x:.3e}" for x in rec.losses)
        print(f"  step {rec.step:>6}  losses {losses}  rel_l2 {rec.rel_l2:.4f}")
