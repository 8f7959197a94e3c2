"""Chebyshev-center update directions for multi-loss gradient descent."""

from .core import (
    DirectionResult,
    GradientSet,
    compute_direction,
    recover_primal,
    recover_primal_lp,
    solve_dual,
    solve_dual_exact2,
    solve_dual_exact3,
    solve_dual_fw,
    solve_dual_lp,
)
from .errors import (
    ConfigError,
    DegenerateBisector,
    DegenerateDirection,
    DimensionCapExceeded,
    DimensionMismatch,
    DualChebError,
    Infeasible,
    NonFiniteError,
    SingularSystem,
    UnsupportedNorm,
    WrongArity,
    ZeroGradient,
    ZeroReference,
)

__version__ = "0.1.0"
