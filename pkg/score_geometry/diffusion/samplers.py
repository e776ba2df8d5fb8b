"""Ancestral DDPM sampling, Langevin dynamics and epsilon-to-score conversion."""

import logging
from typing import Callable

import numpy as np

from ..core import NetworkFamily, ParamSet
from ..data import Dataset
from ..errors import DivergenceError, PreconditionError
from ..numerics import RngStream, gaussian
from .schedule import NoiseSchedule

logger = logging.getLogger(__name__)


def epsilon_to_score(eps: np.ndarray, sigma) -> np.ndarray:
    """Score s = -eps / sigma of a noise prediction at level sigma."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma <= 0):
        raise PreconditionError("sigma must be positive")
    eps = np.asarray(eps, dtype=np.float64)
    return -eps / (sigma[..., None] if sigma.ndim and eps.ndim > sigma.ndim else sigma)


def score_function(
    family: NetworkFamily, params: ParamSet, sigma: float, variance_preserving: bool = True
) -> Callable[[np.ndarray], np.ndarray]:
    """
    Score of x + sigma * eps from an epsilon predictor.

    With ``variance_preserving`` the predictor expects DDPM inputs, so the VE
    point is scaled by sqrt(abar) = 1 / sqrt(1 + sigma^2) before evaluation.
    """
    scale = 1.0 / np.sqrt(1.0 + sigma * sigma) if variance_preserving else 1.0

    def score(x: np.ndarray) -> np.ndarray:
        return epsilon_to_score(family.forward(params, scale * np.asarray(x, dtype=np.float64), sigma), sigma)

    return score


def sample_ancestral(
    family: NetworkFamily, params: ParamSet, schedule: NoiseSchedule, n: int, stream: RngStream
) -> Dataset:
    """
    DDPM ancestral chain from x_T ~ N(0, I) down to x_0.

    x_{t-1} = (x_t - beta_t / sqrt(1 - abar_t) eps(x_t, t)) / sqrt(1 - beta_t) + sqrt(beta_t) z,
    with no noise added on the last step.

    Raises:
        DivergenceError: If the state becomes non-finite (``error.step`` is the 1-based step)
    """
    dim = family.dim
    if n == 0:
        return Dataset(np.zeros((0, dim)), getattr(family, "image_shape", None), {"kind": "ancestral", "n": 0})

    x = gaussian(stream.spawn("prior"), n * dim).reshape(n, dim)
    for t in range(schedule.n_steps, 0, -1):
        beta = schedule.betas[t - 1]
        abar = schedule.alpha_bars[t - 1]
        eps = family.forward_batch(params, x, np.full(n, schedule.sigmas[t - 1]))
        x = (x - beta / np.sqrt(1.0 - abar) * eps) / np.sqrt(1.0 - beta)
        if t > 1:
            x = x + np.sqrt(beta) * gaussian(stream.spawn("step", t), n * dim).reshape(n, dim)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"Ancestral sampler state became non-finite at step {t}", step=t)

    logger.info("Drew %d ancestral samples over %d steps", n, schedule.n_steps)
    return Dataset(x, getattr(family, "image_shape", None), {"kind": "ancestral", "n": int(n)})


def sample_langevin(
    score: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, eta: float, k: int, stream: RngStream
) -> np.ndarray:
    """
    Unadjusted Langevin iterations x_{i+1} = x_i + (eta / 2) score(x_i) + sqrt(eta) z_i.

    Returns:
        (k + 1) x D trajectory including x0

    Raises:
        DivergenceError: If an iterate becomes non-finite
    """
    if eta <= 0 or k < 1:
        raise PreconditionError(f"Need eta > 0 and k >= 1, got eta={eta}, k={k}")
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    dim = x0.size
    noise = gaussian(stream, k * dim).reshape(k, dim)

    trajectory = np.empty((k + 1, dim))
    trajectory[0] = x0
    half, root = 0.5 * eta, np.sqrt(eta)
    for i in range(k):
        x = trajectory[i]
        nxt = x + half * np.asarray(score(x), dtype=np.float64) + root * noise[i]
        if not np.all(np.isfinite(nxt)):
            raise DivergenceError(f"Langevin iterate became non-finite at step {i + 1}", step=i + 1)
        trajectory[i + 1] = nxt
    return trajectory
