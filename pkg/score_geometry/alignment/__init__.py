"""Alignment functional and extremal orthogonal transforms."""

from .alignment import (
    AlignmentReport,
    alignment_report,
    alpha,
    alpha_eigen_form,
    extremal_transforms,
    geometry_hash,
    has_tied_spectrum,
    second_moment,
)

__all__ = [
    "AlignmentReport",
    "alignment_report",
    "alpha",
    "alpha_eigen_form",
    "extremal_transforms",
    "geometry_hash",
    "has_tied_spectrum",
    "second_moment",
]
