"""One-dimensional, sliced and max-sliced Wasserstein-2 distances."""

from .wasserstein import (
    PROJECTIONS_PER_DIM,
    ProjectionSet,
    msw2,
    projected_w2,
    random_projections,
    sw2,
    w2_1d,
)

__all__ = [
    "PROJECTIONS_PER_DIM",
    "ProjectionSet",
    "msw2",
    "projected_w2",
    "random_projections",
    "sw2",
    "w2_1d",
]
