from .csc import DROP_TOL, CscMatrix, as_csc, hstack, vstack
from .factor import (
    DEFAULT_REG,
    LdlFactor,
    Permutation,
    SymbolicFactor,
    amd_ordering,
    analyze,
    cholesky_factor,
    cholesky_solve,
    indefinite_factor,
    ldl_factor,
    ldlt_factor,
    ldlt_solve,
    symbolic_cholesky,
)

from_triplets = CscMatrix.from_triplets

__all__ = [
    "DROP_TOL",
    "DEFAULT_REG",
    "CscMatrix",
    "LdlFactor",
    "Permutation",
    "SymbolicFactor",
    "amd_ordering",
    "analyze",
    "as_csc",
    "cholesky_factor",
    "cholesky_solve",
    "from_triplets",
    "indefinite_factor",
    "hstack",
    "ldl_factor",
    "ldlt_factor",
    "ldlt_solve",
    "symbolic_cholesky",
    "vstack",
]
