"""Geometry and SAD export: CSV matrix with JSON sidecar, plain PGM image strips."""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from artifact_store import ArtifactStore

from ..numerics import matrix_from_csv, matrix_to_csv
from .estimate import GeometryEstimate
from .sads import SadBasis

logger = logging.getLogger(__name__)


def to_gray(image: np.ndarray) -> np.ndarray:
    """Min-max normalize to 0..255; constant images map to mid-gray."""
    image = np.asarray(image, dtype=np.float64)
    lo, hi = float(image.min()), float(image.max())
    if hi - lo <= 0.0:
        return np.full(image.shape, 128, dtype=np.uint8)
    return np.rint(255.0 * (image - lo) / (hi - lo)).astype(np.uint8)


def encode_pgm(gray: np.ndarray) -> str:
    """Plain (P2) PGM text of an 8-bit image."""
    height, width = gray.shape
    rows = "\n".join(" ".join(str(int(v)) for v in row) for row in gray)
    return f"P2\n{width} {height}\n255\n{rows}\n"


def sad_strip(
    sads: SadBasis, image_shape: Tuple[int, int], indices: Optional[Sequence[int]] = None, gap: int = 1
) -> np.ndarray:
    """
    Horizontal strip of SAD images, each min-max normalized on its own.

    Only the first channel of multi-channel layouts is drawn.
    """
    height, width = image_shape
    indices = list(range(min(8, sads.dim))) if indices is None else list(indices)
    strip = np.zeros((height, len(indices) * (width + gap) - gap), dtype=np.uint8)
    for slot, k in enumerate(indices):
        tile = to_gray(sads.directions[: height * width, k].reshape(height, width))
        strip[:, slot * (width + gap) : slot * (width + gap) + width] = tile
    return strip


def write_geometry(store: ArtifactStore, name: str, estimate: GeometryEstimate) -> None:
    """Write ``{name}.csv`` (matrix) and ``{name}.json`` (sidecar)."""
    store.write_text(f"{name}.csv", matrix_to_csv(estimate.g))
    store.write_text(f"{name}_se.csv", matrix_to_csv(estimate.standard_error))
    store.write_json(f"{name}.json", estimate.summary())
    logger.info("Wrote geometry %s to %s", name, store.base_path)


def read_geometry_matrix(store: ArtifactStore, name: str) -> np.ndarray:
    return matrix_from_csv(store.read_text(f"{name}.csv"))


def write_sad_strip(
    store: ArtifactStore,
    name: str,
    sads: SadBasis,
    image_shape: Tuple[int, int],
    indices: Optional[Sequence[int]] = None,
) -> None:
    store.write_text(f"{name}.pgm", encode_pgm(sad_strip(sads, image_shape, indices)))
