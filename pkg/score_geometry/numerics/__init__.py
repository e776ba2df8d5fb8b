"""Dense linear algebra and counter-based random streams."""

from .linalg import SymEig, as_matrix, check_symmetric, fix_signs, matrix_from_csv, matrix_to_csv, sym_eig
from .rng import RngStream, blocks_for, gaussian, uniform

__all__ = [
    "SymEig",
    "as_matrix",
    "check_symmetric",
    "fix_signs",
    "matrix_from_csv",
    "matrix_to_csv",
    "sym_eig",
    "RngStream",
    "blocks_for",
    "gaussian",
    "uniform",
]
