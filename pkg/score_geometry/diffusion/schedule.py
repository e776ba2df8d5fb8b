"""Linear DDPM noise schedule and its variance-exploding noise levels."""

from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError

DEFAULT_STEPS = 1000
DEFAULT_BETA_MIN = 1e-4
DEFAULT_BETA_MAX = 0.02


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step betas, cumulative alpha products and VE-equivalent sigmas (index 0 is step 1)."""

    betas: np.ndarray
    alpha_bars: np.ndarray
    sigmas: np.ndarray

    @property
    def n_steps(self) -> int:
        return int(self.betas.size)

    @property
    def sigma_min(self) -> float:
        return float(self.sigmas[0])

    @property
    def sigma_max(self) -> float:
        return float(self.sigmas[-1])

    def sigma(self, t: int) -> float:
        """Noise level of 1-based step ``t``."""
        return float(self.sigmas[t - 1])

    def summary(self) -> dict:
        return {
            "n_steps": self.n_steps,
            "beta_min": float(self.betas[0]),
            "beta_max": float(self.betas[-1]),
            "sigma_min": self.sigma_min,
            "sigma_max": self.sigma_max,
        }


def make_schedule(
    n_steps: int = DEFAULT_STEPS, beta_min: float = DEFAULT_BETA_MIN, beta_max: float = DEFAULT_BETA_MAX
) -> NoiseSchedule:
    """
    Linear beta schedule.

    Args:
        n_steps: Number of diffusion steps (>= 2)
        beta_min: First beta, in (0, beta_max)
        beta_max: Last beta, in (beta_min, 1)

    Raises:
        PreconditionError: If the range is invalid
    """
    if n_steps < 2:
        raise PreconditionError(f"n_steps must be at least 2, got {n_steps}")
    if not 0.0 < beta_min < beta_max < 1.0:
        raise PreconditionError(f"Need 0 < beta_min < beta_max < 1, got {beta_min}, {beta_max}")

    betas = np.linspace(beta_min, beta_max, int(n_steps))
    alpha_bars = np.cumprod(1.0 - betas)
    sigmas = np.sqrt((1.0 - alpha_bars) / alpha_bars)
    return NoiseSchedule(betas=betas, alpha_bars=alpha_bars, sigmas=sigmas)


def default_sigma_range() -> tuple:
    schedule = make_schedule()
    return schedule.sigma_min, schedule.sigma_max


def mid_sigma(sigma_min: float, sigma_max: float) -> float:
    """Geometric midpoint of a noise range."""
    return float(np.sqrt(sigma_min * sigma_max))
