"""Datasets: rank-one Gaussians, spheres in subspaces, MNIST IDX ingestion and transforms."""

from .datasets import (
    Dataset,
    anisotropic_gaussian,
    apply_transform,
    downscale,
    holdout_split,
    power_law_spectrum,
    sample_rank_one,
    sphere_dataset,
)
from .idx import encode_idx_images, encode_idx_labels, load_idx, parse_images, parse_labels

__all__ = [
    "Dataset",
    "anisotropic_gaussian",
    "apply_transform",
    "downscale",
    "encode_idx_images",
    "encode_idx_labels",
    "holdout_split",
    "load_idx",
    "parse_images",
    "parse_labels",
    "power_law_spectrum",
    "sample_rank_one",
    "sphere_dataset",
]
