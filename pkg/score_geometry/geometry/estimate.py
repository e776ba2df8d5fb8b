"""
Monte Carlo estimation of the average geometry G = E[F(x, sigma) F(x, sigma)^T].

Samples are processed in chunks whose size depends only on D. Chunk c draws
from ``stream.spawn("chunk", c)`` and partial moments are merged in chunk
order, so the estimate does not depend on the number of workers.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from ..core import NetworkFamily
from ..errors import EstimationError, PreconditionError
from ..numerics import RngStream
from .probe import ProbeDistribution

logger = logging.getLogger(__name__)

MAX_REJECTED_FRACTION = 1e-3
CHUNK_CAP = 1000
CHUNK_ENTRIES = 1 << 22


def chunk_size(dim: int) -> int:
    return max(1, min(CHUNK_CAP, CHUNK_ENTRIES // (dim * dim)))


@dataclass
class _Moments:
    """Running count, mean and sum of squared deviations per entry."""

    count: int
    mean: np.ndarray
    m2: np.ndarray
    rejected: int = 0

    def merge(self, other: "_Moments") -> "_Moments":
        if other.count == 0:
            return _Moments(self.count, self.mean, self.m2, self.rejected + other.rejected)
        if self.count == 0:
            return _Moments(other.count, other.mean, other.m2, self.rejected + other.rejected)
        total = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / total)
        m2 = self.m2 + other.m2 + delta * delta * (self.count * other.count / total)
        return _Moments(total, mean, m2, self.rejected + other.rejected)


@dataclass(frozen=True)
class GeometryEstimate:
    """Averaged outer product with per-entry Monte Carlo standard errors."""

    g: np.ndarray
    n_samples: int
    standard_error: np.ndarray
    probe: ProbeDistribution
    family: Dict[str, Any] = field(default_factory=dict)
    n_rejected: int = 0

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    def summary(self) -> Dict[str, Any]:
        return {
            "n_samples": self.n_samples,
            "n_rejected": self.n_rejected,
            "dim": self.dim,
            "probe": self.probe.describe(),
            "family": self.family,
            "standard_error_max": float(self.standard_error.max()),
            "standard_error_mean": float(self.standard_error.mean()),
            "trace": float(np.trace(self.g)),
        }


def _chunk_moments(
    family: NetworkFamily, probe: ProbeDistribution, stream: RngStream, n: int
) -> _Moments:
    dim = family.dim
    x, sigmas = probe.draw(stream.spawn("probe"), n, dim)
    outputs = np.empty((n, dim))
    for i in range(n):
        params = family.sample_params(stream.spawn("params", i))
        outputs[i] = family.forward_batch(params, x[i : i + 1], sigmas[i : i + 1])[0]

    finite = np.all(np.isfinite(outputs), axis=1)
    kept = outputs[finite]
    if kept.shape[0] == 0:
        return _Moments(0, np.zeros((dim, dim)), np.zeros((dim, dim)), int(n))

    outer = np.einsum("ni,nj->nij", kept, kept)
    mean = outer.mean(axis=0)
    m2 = ((outer - mean) ** 2).sum(axis=0)
    return _Moments(kept.shape[0], mean, m2, int(n - kept.shape[0]))


def estimate_geometry(
    family: NetworkFamily,
    probe: ProbeDistribution,
    n_samples: int,
    stream: RngStream,
    workers: int = 1,
) -> GeometryEstimate:
    """
    Average F_theta(x, sigma) F_theta(x, sigma)^T over fresh parameter and probe draws.

    Args:
        family: Network family; a new parameter set is drawn for every sample
        probe: Input distribution
        n_samples: Number of samples (>= 1)
        stream: Random stream; the result is a pure function of it
        workers: Threads used for chunks

    Returns:
        GeometryEstimate

    Raises:
        EstimationError: If more than 0.1% of samples produce non-finite output
    """
    if n_samples < 1:
        raise PreconditionError(f"n_samples must be at least 1, got {n_samples}")

    size = chunk_size(family.dim)
    chunks = [(c, min(size, n_samples - c * size)) for c in range(-(-n_samples // size))]
    logger.info(
        "Estimating geometry for %s (D=%d) with %d samples in %d chunks",
        family.get_key(),
        family.dim,
        n_samples,
        len(chunks),
    )

    def run(chunk):
        index, n = chunk
        return _chunk_moments(family, probe, stream.spawn("chunk", index), n)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(run, chunks))
    else:
        partials = [run(chunk) for chunk in chunks]

    total = _Moments(0, np.zeros((family.dim, family.dim)), np.zeros((family.dim, family.dim)))
    for partial in partials:
        total = total.merge(partial)

    if total.rejected > MAX_REJECTED_FRACTION * n_samples:
        raise EstimationError(
            f"{total.rejected} of {n_samples} samples gave non-finite output "
            f"(limit {MAX_REJECTED_FRACTION:.1%})"
        )
    if total.rejected:
        logger.warning("Rejected %d non-finite samples", total.rejected)

    g = 0.5 * (total.mean + total.mean.T)
    if total.count > 1:
        se = np.sqrt(total.m2 / (total.count - 1) / total.count)
    else:
        se = np.zeros_like(g)
    return GeometryEstimate(
        g=g,
        n_samples=total.count,
        standard_error=se,
        probe=probe,
        family=family.describe(),
        n_rejected=total.rejected,
    )
