"""
Wasserstein-2 distances: exact in 1-D via order statistics, sliced and
max-sliced in D dimensions via a fixed set of random unit directions.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DimensionError, PreconditionError
from ..numerics import RngStream, gaussian

PROJECTIONS_PER_DIM = 64


@dataclass(frozen=True)
class ProjectionSet:
    """``l x D`` matrix of unit directions."""

    directions: np.ndarray
    stream: Optional[RngStream] = None

    @property
    def size(self) -> int:
        return self.directions.shape[0]

    @property
    def dim(self) -> int:
        return self.directions.shape[1]


def random_projections(dim: int, l: int, stream: RngStream) -> ProjectionSet:
    """
    ``l`` directions uniform on the unit sphere of R^dim.

    The first ``k`` directions drawn with ``l`` and with ``k < l`` coincide, so
    growing ``l`` yields nested sets.
    """
    if l < 1:
        raise PreconditionError(f"Number of projections must be at least 1, got {l}")
    raw = gaussian(stream, l * dim).reshape(l, dim)
    return ProjectionSet(raw / np.linalg.norm(raw, axis=1, keepdims=True), stream)


def _as_samples(data) -> np.ndarray:
    samples = np.asarray(getattr(data, "samples", data), dtype=np.float64)
    return samples[:, None] if samples.ndim == 1 else samples


def _quantiles_on(sorted_values: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Linear interpolation of the empirical quantile function at plotting positions (i + 0.5) / n."""
    n = sorted_values.shape[0]
    own = (np.arange(n) + 0.5) / n
    return np.interp(positions, own, sorted_values)


def _w2_sorted(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise W2 between sorted samples (rows) of ``a`` and ``b``."""
    if a.shape[0] == b.shape[0]:
        return np.sqrt(np.mean((a - b) ** 2, axis=0))
    positions = np.union1d((np.arange(a.shape[0]) + 0.5) / a.shape[0], (np.arange(b.shape[0]) + 0.5) / b.shape[0])
    out = np.empty(a.shape[1])
    for k in range(a.shape[1]):
        qa = _quantiles_on(a[:, k], positions)
        qb = _quantiles_on(b[:, k], positions)
        out[k] = np.sqrt(np.mean((qa - qb) ** 2))
    return out


def w2_1d(a, b) -> float:
    """
    Wasserstein-2 distance between two empirical measures on the line.

    Equal sizes use sorted pairings exactly; unequal sizes compare linearly
    interpolated quantile functions at the union of both plotting positions.

    Raises:
        PreconditionError: If either input is empty
    """
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise PreconditionError("w2_1d requires nonempty inputs")
    return float(_w2_sorted(a[:, None], b[:, None])[0])


def projected_w2(x, y, projections: ProjectionSet) -> np.ndarray:
    """W2 of the projections of ``x`` and ``y`` onto every direction."""
    xs, ys = _as_samples(x), _as_samples(y)
    if xs.shape[1] != ys.shape[1] or xs.shape[1] != projections.dim:
        raise DimensionError(
            f"Dimension mismatch: x has {xs.shape[1]}, y has {ys.shape[1]}, projections have {projections.dim}"
        )
    if xs.shape[0] == 0 or ys.shape[0] == 0:
        raise PreconditionError("Sliced distances require nonempty datasets")
    px = np.sort(xs @ projections.directions.T, axis=0)
    py = np.sort(ys @ projections.directions.T, axis=0)
    return _w2_sorted(px, py)


def _projections_for(x, l: Optional[int], stream: Optional[RngStream], projections: Optional[ProjectionSet]):
    if projections is not None:
        return projections
    if stream is None:
        raise PreconditionError("Either a stream or a ProjectionSet is required")
    dim = _as_samples(x).shape[1]
    return random_projections(dim, l if l is not None else PROJECTIONS_PER_DIM * dim, stream)


def sw2(
    x,
    y,
    l: Optional[int] = None,
    stream: Optional[RngStream] = None,
    projections: Optional[ProjectionSet] = None,
) -> float:
    """Sliced W2: square root of the mean squared projected W2 over ``l`` random directions (default 64 D)."""
    distances = projected_w2(x, y, _projections_for(x, l, stream, projections))
    return float(np.sqrt(np.mean(distances**2)))


def msw2(
    x,
    y,
    l: Optional[int] = None,
    stream: Optional[RngStream] = None,
    projections: Optional[ProjectionSet] = None,
) -> float:
    """Max-sliced W2 estimated as the largest projected W2 over ``l`` random directions (default 64 D)."""
    distances = projected_w2(x, y, _projections_for(x, l, stream, projections))
    return float(np.max(distances))
