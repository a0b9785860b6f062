"""Self-contained numerical kernel.

Hermitian eigensolver, entropy functionals, binomial tail bounds,
root-finding, derivative-free minimization, and a dense-tableau simplex.
All operations are pure functions over value inputs.
"""

from diqkd.numerics.linalg import (
    HermitianMatrix,
    hermitian_eig,
    relative_entropy,
    von_neumann_entropy,
)
from diqkd.numerics.optimize import brent_root, golden_section_min, nelder_mead
from diqkd.numerics.simplex import LinearProgram, SimplexResult, simplex_solve
from diqkd.numerics.special import (
    binary_entropy,
    binom_cdf,
    chernoff_abort_bounds,
    zs_point_value,
    zs_upper_bound,
)

__all__ = [
    "HermitianMatrix",
    "LinearProgram",
    "SimplexResult",
    "binary_entropy",
    "binom_cdf",
    "brent_root",
    "chernoff_abort_bounds",
    "golden_section_min",
    "hermitian_eig",
    "nelder_mead",
    "relative_entropy",
    "simplex_solve",
    "von_neumann_entropy",
    "zs_point_value",
    "zs_upper_bound",
]
