"""Compare direction rules on three hand-built gradients.

The first gradient is large, the second medium, the third small and tilted
toward the first two.  Minimum-norm MGDA follows the small gradient alone,
the equal-angle rules leave the dual cone or lose margin, and the Chebyshev
direction keeps the largest worst-case angle.
"""

import numpy as np

from dualcheb import GradientSet, baselines, compute_direction
from dualcheb.toy import TRIPLE

np.set_printoptions(precision=4, suppress=True)

gs = GradientSet(TRIPLE)
ours = compute_direction(gs)
rules = {
    "chebyshev": ours.v,
    "mgda": baselines.mgda(gs).v_unit,
    "config": baselines.config_dir(gs).v_unit,
    "imtl-g": baselines.imtl_g(gs).v_unit,
}

print(f"{'rule':<10} {'direction':<28} {'cosines with each gradient':<28} worst")
for name, v in rules.items():
    cos = gs.ghat @ v
    print(f"{name:<10} {np.array2string(v):<28} {np.array2string(cos):<28} {cos.min():.4f}")

# rescaling a loss changes MGDA but not the Chebyshev direction
scaled = GradientSet(np.array([1.0, 1.0, 100.0])[:, None] * TRIPLE)
print("\nthird loss scaled by 100:")
print("  chebyshev", compute_direction(scaled).v)
print("  mgda     ", baselines.mgda(scaled).v_unit)
