"""Score anisotropy directions: eigenvectors of the geometry in ascending eigenvalue order."""

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..errors import EstimationError, NotUnitError, PreconditionError
from ..numerics import check_symmetric, sym_eig
from .estimate import GeometryEstimate

PSD_FLOOR = 1e-8
TIE_TOL = 1e-8
UNIT_TOL = 1e-8

GeometryLike = Union[GeometryEstimate, np.ndarray]


@dataclass(frozen=True)
class SadBasis:
    """Orthonormal directions (columns) ranked from most to least preferred."""

    directions: np.ndarray
    eigenvalues: np.ndarray

    @property
    def dim(self) -> int:
        return self.directions.shape[0]

    def direction(self, i: int) -> np.ndarray:
        """0-based SAD ``i``."""
        return self.directions[:, i].copy()

    def markov_bounds(self, g: GeometryLike, eta: float) -> np.ndarray:
        return np.array([markov_bound(self.directions[:, i], g, eta) for i in range(self.dim)])


def _matrix(g: GeometryLike) -> np.ndarray:
    return g.g if isinstance(g, GeometryEstimate) else np.asarray(g, dtype=np.float64)


def clamp_psd(eigenvalues: np.ndarray) -> np.ndarray:
    """Zero small negative eigenvalues; larger violations are errors."""
    top = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    if eigenvalues.size and eigenvalues.min() < -PSD_FLOOR * top:
        raise EstimationError(
            f"Geometry is not positive semidefinite: min eigenvalue {eigenvalues.min():.3e}, max {top:.3e}"
        )
    return np.maximum(eigenvalues, 0.0)


def cluster_labels(eigenvalues: np.ndarray, rel_tol: float) -> np.ndarray:
    """Single-linkage clusters of sorted eigenvalues: a new cluster starts at every gap above rel_tol * max|lambda|."""
    values = np.asarray(eigenvalues, dtype=np.float64)
    if values.size == 0:
        return np.zeros(0, dtype=int)
    scale = float(np.max(np.abs(values)))
    gaps = np.abs(np.diff(values)) > rel_tol * scale
    return np.concatenate([[0], np.cumsum(gaps)])


def distinct_eigenvalue_count(eigenvalues, rel_tol: float = 1e-6) -> int:
    labels = cluster_labels(np.asarray(eigenvalues), rel_tol)
    return int(labels[-1] + 1) if labels.size else 0


def extract_sads(g: GeometryLike) -> SadBasis:
    """
    Eigenvectors of the geometry in ascending eigenvalue order.

    Within a cluster of equal eigenvalues (relative tolerance 1e-8) vectors are
    ordered by descending lexicographic order of their absolute entries, so
    the identity yields the canonical basis.
    """
    matrix = check_symmetric(_matrix(g))
    eig = sym_eig(matrix)
    values = clamp_psd(eig.eigenvalues[::-1])
    vectors = eig.eigenvectors[:, ::-1]

    labels = cluster_labels(values, TIE_TOL)
    order = []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        members = sorted(members, key=lambda k: tuple(-np.abs(vectors[:, k])))
        order.extend(members)
    order = np.asarray(order, dtype=int)
    return SadBasis(directions=vectors[:, order].copy(), eigenvalues=values[order].copy())


def markov_bound(v: np.ndarray, g: GeometryLike, eta: float) -> float:
    """
    Markov bound v^T G v / eta^2 on P(|<v, F>| >= eta).

    Raises:
        NotUnitError: If ``v`` is not a unit vector
        PreconditionError: If ``eta <= 0``
    """
    v = np.asarray(v, dtype=np.float64)
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise NotUnitError(f"v must have unit norm, got {np.linalg.norm(v):.12f}")
    if eta <= 0:
        raise PreconditionError(f"eta must be positive, got {eta}")
    return float(v @ _matrix(g) @ v) / (eta * eta)
