"""Named orthonormal bases and random orthogonal transforms."""

from .bases import (
    ORTHO_TOL,
    PROVENANCES,
    OrthoTransform,
    basis_columns,
    build_basis,
    check_orthogonal,
    haar2d_analysis,
    identity_transform,
    random_orthogonal,
    sign_changes,
)

__all__ = [
    "ORTHO_TOL",
    "PROVENANCES",
    "OrthoTransform",
    "basis_columns",
    "build_basis",
    "check_orthogonal",
    "haar2d_analysis",
    "identity_transform",
    "random_orthogonal",
    "sign_changes",
]
