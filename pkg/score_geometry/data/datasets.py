"""In-memory datasets: rank-one Gaussians, spheres in subspaces, pooling and orthogonal transforms."""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from artifact_store import ArtifactStore

from ..bases import OrthoTransform
from ..errors import DimensionError, NotOrthogonalError, NotUnitError, PreconditionError
from ..numerics import RngStream, gaussian

UNIT_TOL = 1e-8


@dataclass(frozen=True)
class Dataset:
    """``n x D`` samples with an optional (channels, height, width) image layout."""

    samples: np.ndarray
    layout: Optional[Tuple[int, int, int]] = None
    provenance: Dict[str, Any] = field(default_factory=dict)
    labels: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise DimensionError(f"Dataset samples must be 2-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("Dataset samples have non-finite entries")
        if self.layout is not None and int(np.prod(self.layout)) != samples.shape[1]:
            raise DimensionError(f"Layout {self.layout} does not match dimension {samples.shape[1]}")
        object.__setattr__(self, "samples", samples)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def images(self) -> np.ndarray:
        if self.layout is None:
            raise PreconditionError("Dataset has no image layout")
        return self.samples.reshape((self.n,) + tuple(self.layout))

    def second_moment(self) -> np.ndarray:
        return self.samples.T @ self.samples / max(self.n, 1)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.samples, columns=[f"x{i}" for i in range(self.dim)])

    def save(self, store: ArtifactStore, name: str) -> None:
        """``{name}.csv`` with one row per sample and ``{name}.json`` provenance sidecar."""
        store.write_csv(f"{name}.csv", self.to_frame())
        store.write_json(
            f"{name}.json",
            {"n": self.n, "dim": self.dim, "layout": list(self.layout) if self.layout else None, **self.provenance},
        )


def _check_unit(v: np.ndarray, name: str = "v") -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).ravel()
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise NotUnitError(f"{name} must have unit norm, got {np.linalg.norm(v):.12f}")
    return v


def sample_rank_one(
    v: np.ndarray, d: int, n: int, stream: RngStream, layout: Optional[Tuple[int, int, int]] = None
) -> Dataset:
    """
    ``n`` samples from N(0, d v v^T): each row is sqrt(d) * g * v with g ~ N(0, 1).

    Raises:
        NotUnitError: If ``v`` is not a unit vector
        DimensionError: If ``len(v) != d``
    """
    v = _check_unit(v)
    if v.size != d:
        raise DimensionError(f"v has dimension {v.size}, expected {d}")
    g = gaussian(stream, n)
    samples = np.sqrt(d) * g[:, None] * v[None, :]
    return Dataset(
        samples,
        layout,
        {"kind": "rank_one", "d": int(d), "n": int(n), "stream": [stream.master_seed, stream.stream_id]},
    )


def sphere_dataset(basis3: np.ndarray, radius: float, n: int, stream: RngStream) -> Dataset:
    """
    Uniform samples on the 2-sphere of ``radius`` inside span(basis3).

    Args:
        basis3: D x 3 matrix with orthonormal columns
        radius: Sphere radius (> 0)
        n: Number of samples
        stream: Random stream
    """
    basis3 = np.asarray(basis3, dtype=np.float64)
    if basis3.ndim != 2 or basis3.shape[1] != 3:
        raise DimensionError(f"basis3 must be D x 3, got shape {basis3.shape}")
    if float(np.max(np.abs(basis3.T @ basis3 - np.eye(3)))) > UNIT_TOL:
        raise NotOrthogonalError("basis3 columns must be orthonormal")
    if radius <= 0:
        raise PreconditionError(f"radius must be positive, got {radius}")

    coords = gaussian(stream, 3 * n).reshape(n, 3)
    coords = radius * coords / np.linalg.norm(coords, axis=1, keepdims=True)
    return Dataset(coords @ basis3.T, None, {"kind": "sphere", "radius": float(radius), "n": int(n)})


def downscale(dataset: Dataset, factor: int) -> Dataset:
    """Average-pool each image by ``factor`` in both spatial directions."""
    if dataset.layout is None:
        raise PreconditionError("downscale requires an image layout")
    channels, height, width = dataset.layout
    if factor < 1 or height % factor or width % factor:
        raise DimensionError(f"Image {height}x{width} is not divisible by factor {factor}")
    images = dataset.images().reshape(dataset.n, channels, height // factor, factor, width // factor, factor)
    pooled = images.mean(axis=(3, 5))
    layout = (channels, height // factor, width // factor)
    return Dataset(
        pooled.reshape(dataset.n, -1),
        layout,
        {**dataset.provenance, "downscale": int(factor)},
        dataset.labels,
    )


def holdout_split(dataset: Dataset, n_train: int, n_reference: int) -> Tuple[Dataset, Dataset]:
    """
    Split into disjoint training and reference rows.

    Training takes rows ``[0, n_train)`` and reference takes
    ``[n_train, n_train + n_reference)``. Each part records its row range
    under ``provenance["rows"]``.

    Raises:
        PreconditionError: If the dataset has fewer than ``n_train + n_reference`` rows
    """
    if n_train < 1 or n_reference < 1:
        raise PreconditionError(f"Split sizes must be positive, got train={n_train}, reference={n_reference}")
    if dataset.n < n_train + n_reference:
        raise PreconditionError(
            f"Dataset has {dataset.n} rows, need {n_train} for training plus {n_reference} held out for reference"
        )

    def part(start: int, stop: int, split: str) -> Dataset:
        labels = dataset.labels[start:stop] if dataset.labels is not None else None
        provenance = {**dataset.provenance, "split": split, "rows": [start, stop]}
        return Dataset(dataset.samples[start:stop], dataset.layout, provenance, labels)

    return part(0, n_train, "train"), part(n_train, n_train + n_reference, "reference")


def apply_transform(dataset: Dataset, w: OrthoTransform) -> Dataset:
    """Map every sample x to W x."""
    if w.dim != dataset.dim:
        raise DimensionError(f"Transform dimension {w.dim} does not match dataset dimension {dataset.dim}")
    return Dataset(
        dataset.samples @ w.matrix.T,
        dataset.layout,
        {**dataset.provenance, "transform": w.provenance},
        dataset.labels,
    )


def power_law_spectrum(dim: int, decay: float) -> np.ndarray:
    """Variances (k + 1)^(-decay), k = 0..dim-1, scaled to mean 1."""
    if dim < 1:
        raise PreconditionError(f"dim must be at least 1, got {dim}")
    spectrum = np.arange(1, dim + 1, dtype=np.float64) ** (-float(decay))
    return spectrum * dim / spectrum.sum()


def anisotropic_gaussian(
    spectrum: np.ndarray,
    rotation: OrthoTransform,
    n: int,
    stream: RngStream,
    layout: Optional[Tuple[int, int, int]] = None,
) -> Dataset:
    """``n`` samples from N(0, R diag(spectrum) R^T)."""
    spectrum = np.asarray(spectrum, dtype=np.float64).ravel()
    if np.any(spectrum < 0):
        raise PreconditionError("spectrum must be non-negative")
    if rotation.dim != spectrum.size:
        raise DimensionError(f"Rotation dimension {rotation.dim} does not match spectrum length {spectrum.size}")
    z = gaussian(stream, n * spectrum.size).reshape(n, spectrum.size) * np.sqrt(spectrum)
    return Dataset(
        z @ rotation.matrix.T,
        layout,
        {"kind": "anisotropic_gaussian", "n": int(n), "rotation": rotation.provenance},
    )
