"""Alignment of transformed data with a network geometry, and its extremal transforms."""

import hashlib
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np

from ..bases import OrthoTransform
from ..errors import DimensionError, NotOrthogonalError, PreconditionError
from ..geometry import cluster_labels
from ..numerics import check_symmetric, sym_eig

ORTHO_TOL = 1e-6
TIE_TOL = 1e-8


def second_moment(dataset) -> np.ndarray:
    """(1/n) X^T X of an n x D dataset."""
    samples = np.asarray(getattr(dataset, "samples", dataset), dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise PreconditionError(f"second_moment needs a nonempty n x D dataset, got shape {samples.shape}")
    c = samples.T @ samples / samples.shape[0]
    return 0.5 * (c + c.T)


def _transform_matrix(w) -> np.ndarray:
    m = w.matrix if isinstance(w, OrthoTransform) else np.asarray(w, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"Transform must be square, got shape {m.shape}")
    err = float(np.linalg.norm(m.T @ m - np.eye(m.shape[0])))
    if err > ORTHO_TOL:
        raise NotOrthogonalError(f"Transform is not orthogonal: ||W^T W - I||_F = {err:.3e} > {ORTHO_TOL}")
    return m


def alpha(w, g: np.ndarray, c: np.ndarray) -> float:
    """
    tr(W^T G W C): expected quadratic form z^T G z of transformed samples z = W x.

    Raises:
        DimensionError: If shapes disagree
        NotOrthogonalError: If ||W^T W - I||_F > 1e-6
    """
    m = _transform_matrix(w)
    g = np.asarray(g, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if g.shape != m.shape or c.shape != m.shape:
        raise DimensionError(f"Shapes disagree: W {m.shape}, G {g.shape}, C {c.shape}")
    return float(np.trace(m.T @ g @ m @ c))


def alpha_eigen_form(w, g: np.ndarray, c: np.ndarray) -> float:
    """sum_ij lambda_i sigma_j Q_ij^2 with Q = U^T W V from the eigenbases of G and C."""
    m = _transform_matrix(w)
    eg, ec = sym_eig(g), sym_eig(c)
    q = eg.eigenvectors.T @ m @ ec.eigenvectors
    return float(eg.eigenvalues @ (q * q) @ ec.eigenvalues)


def extremal_transforms(g: np.ndarray, c: np.ndarray) -> Tuple[OrthoTransform, OrthoTransform]:
    """
    Orthogonal W minimizing and maximizing alpha.

    With U, V the descending eigenvector matrices of G and C and J the
    row-reversed identity, W_min = U J V^T and W_max = U V^T.
    """
    g = check_symmetric(g)
    c = check_symmetric(c)
    if g.shape != c.shape:
        raise DimensionError(f"G and C shapes disagree: {g.shape} vs {c.shape}")
    u = sym_eig(g).eigenvectors
    v = sym_eig(c).eigenvectors
    j = np.eye(g.shape[0])[::-1]
    return OrthoTransform(u @ j @ v.T, "w_min"), OrthoTransform(u @ v.T, "w_max")


def has_tied_spectrum(matrix: np.ndarray, rel_tol: float = TIE_TOL) -> bool:
    values = sym_eig(matrix).eigenvalues
    labels = cluster_labels(values, rel_tol)
    return bool(labels.size and labels[-1] + 1 < labels.size)


def geometry_hash(g: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(g, dtype="<f8").tobytes()).hexdigest()


@dataclass(frozen=True)
class AlignmentReport:
    alpha: float
    transform: str
    geometry_hash: str
    dataset: Dict[str, Any] = field(default_factory=dict)
    tied_spectrum: bool = False

    def to_row(self) -> Dict[str, Any]:
        return {
            "transform": self.transform,
            "alpha": self.alpha,
            "geometry_hash": self.geometry_hash,
            "tied_spectrum": self.tied_spectrum,
            **{f"dataset_{key}": value for key, value in self.dataset.items() if np.isscalar(value)},
        }


def alignment_report(w: OrthoTransform, g: np.ndarray, c: np.ndarray, dataset=None) -> AlignmentReport:
    provenance = dict(getattr(dataset, "provenance", {}) or {})
    return AlignmentReport(
        alpha=alpha(w, g, c),
        transform=w.provenance,
        geometry_hash=geometry_hash(g),
        dataset=provenance,
        tied_spectrum=has_tied_spectrum(g) or has_tied_spectrum(c),
    )
