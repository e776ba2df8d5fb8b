"""Probe distributions over (x_sigma, sigma) used to average network outer products."""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from ..diffusion.schedule import make_schedule
from ..errors import ConfigError, DimensionError
from ..numerics import RngStream, gaussian, uniform

PROBE_KINDS = ("delta_zero", "isotropic_gaussian", "around_sample")


def schedule_sigma_levels() -> Tuple[float, ...]:
    return tuple(float(s) for s in make_schedule().sigmas)


def _levels(sigma_levels: Optional[Sequence[float]]) -> Tuple[float, ...]:
    return schedule_sigma_levels() if sigma_levels is None else tuple(float(s) for s in sigma_levels)


@dataclass(frozen=True)
class ProbeDistribution:
    """
    Distribution P of network inputs.

    delta_zero: x = 0; isotropic_gaussian: x ~ N(0, sigma_p^2 I); around_sample:
    x = x0 + sigma * eps with x0 drawn uniformly from ``samples``. Sigma is drawn
    uniformly from ``sigma_levels`` in every case.
    """

    kind: str = "delta_zero"
    sigma_levels: Tuple[float, ...] = field(default_factory=schedule_sigma_levels)
    sigma_p: float = 1.0
    samples: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in PROBE_KINDS:
            raise ConfigError(f"Unknown probe kind '{self.kind}'. Available: {list(PROBE_KINDS)}")
        levels = tuple(float(s) for s in self.sigma_levels)
        if not levels or min(levels) <= 0 or not np.all(np.isfinite(levels)):
            raise ConfigError("Probe sigma_levels must be a nonempty list of positive values")
        object.__setattr__(self, "sigma_levels", levels)
        if self.kind == "around_sample":
            if self.samples is None:
                raise ConfigError("around_sample probe requires samples")
            samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
            object.__setattr__(self, "samples", samples)

    @classmethod
    def delta_zero(cls, sigma_levels: Optional[Sequence[float]] = None) -> "ProbeDistribution":
        return cls("delta_zero", _levels(sigma_levels))

    @classmethod
    def isotropic_gaussian(
        cls, sigma_p: float = 1.0, sigma_levels: Optional[Sequence[float]] = None
    ) -> "ProbeDistribution":
        return cls("isotropic_gaussian", _levels(sigma_levels), sigma_p=float(sigma_p))

    @classmethod
    def around_sample(
        cls, samples: np.ndarray, sigma_levels: Optional[Sequence[float]] = None
    ) -> "ProbeDistribution":
        return cls("around_sample", _levels(sigma_levels), samples=samples)

    @classmethod
    def from_config(cls, config: Dict[str, Any], samples: Optional[np.ndarray] = None) -> "ProbeDistribution":
        """Build from a ``PROBE`` config block (KIND, SIGMA_P, SIGMA_LEVELS)."""
        levels = config.get("SIGMA_LEVELS") or schedule_sigma_levels()
        return cls(
            kind=config.get("KIND", "delta_zero"),
            sigma_levels=tuple(levels),
            sigma_p=float(config.get("SIGMA_P", 1.0)),
            samples=samples,
        )

    def draw(self, stream: RngStream, n: int, dim: int) -> Tuple[np.ndarray, np.ndarray]:
        """``n`` inputs (n x dim) and their noise levels (n,)."""
        levels = np.asarray(self.sigma_levels)
        idx = np.minimum((uniform(stream.spawn("sigma"), n) * levels.size).astype(int), levels.size - 1)
        sigmas = levels[idx]

        if self.kind == "delta_zero":
            return np.zeros((n, dim)), sigmas
        noise = gaussian(stream.spawn("noise"), n * dim).reshape(n, dim)
        if self.kind == "isotropic_gaussian":
            return self.sigma_p * noise, sigmas

        if self.samples.shape[1] != dim:
            raise DimensionError(f"Probe samples have dimension {self.samples.shape[1]}, family expects {dim}")
        rows = np.minimum(
            (uniform(stream.spawn("sample"), n) * self.samples.shape[0]).astype(int), self.samples.shape[0] - 1
        )
        return self.samples[rows] + sigmas[:, None] * noise, sigmas

    def describe(self) -> Dict[str, Any]:
        out = {
            "kind": self.kind,
            "n_sigma_levels": len(self.sigma_levels),
            "sigma_min": min(self.sigma_levels),
            "sigma_max": max(self.sigma_levels),
        }
        if self.kind == "isotropic_gaussian":
            out["sigma_p"] = self.sigma_p
        if self.kind == "around_sample":
            out["n_anchor_samples"] = int(self.samples.shape[0])
        return out
