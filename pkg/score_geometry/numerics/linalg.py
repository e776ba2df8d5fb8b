"""
Dense symmetric linear algebra.

The eigensolver is a cyclic Jacobi sweep. Each rotation updates two rows and
two columns with numpy slices; for the matrix sizes used here (D up to a few
hundred) that is accurate to working precision and fully deterministic.
"""

import io
from dataclasses import dataclass
from typing import Union

import numpy as np
import pandas as pd

from ..errors import ConvergenceError, DimensionError, SymmetryError

MAX_SWEEPS = 100
OFF_DIAGONAL_TOL = 1e-12
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class SymEig:
    """Eigenvalues in descending order and matching unit eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def check_symmetric(a: np.ndarray, tol: float = SYMMETRY_TOL) -> np.ndarray:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"Expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    if a.size and float(np.max(np.abs(a - a.T))) > tol * scale:
        raise SymmetryError(f"Matrix is not symmetric within relative tolerance {tol}")
    return a


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry is positive (first index wins ties)."""
    vectors = np.array(vectors, dtype=np.float64, copy=True)
    if vectors.size == 0:
        return vectors
    magnitudes = np.abs(vectors)
    # entries equal up to rounding count as ties
    near_max = magnitudes >= magnitudes.max(axis=0) * (1.0 - 1e-9)
    pivots = np.argmax(near_max, axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _off_norm(a: np.ndarray) -> float:
    return float(np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0)))


def sym_eig(a) -> SymEig:
    """
    Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Args:
        a: Square matrix, symmetric within relative tolerance 1e-10

    Returns:
        SymEig with descending eigenvalues and sign-normalized eigenvectors

    Raises:
        DimensionError: If the input is not square
        SymmetryError: If the input is not symmetric
        ConvergenceError: If the off-diagonal norm does not reach tolerance in 100 sweeps
    """
    a = check_symmetric(a)
    n = a.shape[0]
    work = 0.5 * (a + a.T)
    vectors = np.eye(n)
    total = float(np.linalg.norm(work))
    threshold = OFF_DIAGONAL_TOL * total

    for _ in range(MAX_SWEEPS):
        if _off_norm(work) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if apq == 0.0:
                    continue
                theta = (work[q, q] - work[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = work[:, p].copy()
                col_q = work[:, q].copy()
                work[:, p] = c * col_p - s * col_q
                work[:, q] = s * col_p + c * col_q
                row_p = work[p, :].copy()
                row_q = work[q, :].copy()
                work[p, :] = c * row_p - s * row_q
                work[q, :] = s * row_p + c * row_q
                work[p, q] = work[q, p] = 0.0

                vec_p = vectors[:, p].copy()
                vectors[:, p] = c * vec_p - s * vectors[:, q]
                vectors[:, q] = s * vec_p + c * vectors[:, q]
    else:
        if _off_norm(work) > threshold:
            raise ConvergenceError(f"Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps (n={n})")

    eigenvalues = np.diag(work).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return SymEig(eigenvalues=eigenvalues[order], eigenvectors=fix_signs(vectors[:, order]))


def matrix_to_csv(matrix) -> str:
    """Row-major CSV text with 17 significant digits, no header."""
    buffer = io.StringIO()
    pd.DataFrame(as_matrix(matrix)).to_csv(buffer, header=False, index=False, float_format="%.17g")
    return buffer.getvalue()


def matrix_from_csv(text: Union[str, io.StringIO]) -> np.ndarray:
    source = io.StringIO(text) if isinstance(text, str) else text
    return pd.read_csv(source, header=None, dtype=np.float64, float_precision="round_trip").to_numpy()
