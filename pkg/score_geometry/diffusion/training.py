"""
Denoising score matching objective and training loop.

Two parameterizations are supported. ``epsilon`` predicts the injected noise
from the DDPM input sqrt(abar) x + sqrt(1 - abar) eps; ``score`` regresses the
VE score target -eps / sigma from x + sigma eps. ``fixed_sigma`` pins the
noise level and switches ``epsilon`` to VE noising as well.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from ..core import NetworkFamily, ParamSet
from ..errors import ConfigError, DimensionError, DivergenceError, PreconditionError
from ..numerics import RngStream, gaussian, uniform
from .schedule import NoiseSchedule, make_schedule

logger = logging.getLogger(__name__)

PARAMETERIZATIONS = ("epsilon", "score")
OPTIMIZERS = ("sgd", "adam")


@dataclass(frozen=True)
class DsmLoss:
    loss: float
    cotangent: np.ndarray
    inputs: np.ndarray
    sigmas: np.ndarray


def _noise_batch(
    x: np.ndarray,
    schedule: NoiseSchedule,
    stream: RngStream,
    parameterization: str,
    fixed_sigma: Optional[float],
):
    n, dim = x.shape
    eps = gaussian(stream.spawn("eps"), n * dim).reshape(n, dim)
    if fixed_sigma is not None:
        sigmas = np.full(n, float(fixed_sigma))
        inputs = x + sigmas[:, None] * eps
    else:
        steps = np.minimum((uniform(stream.spawn("t"), n) * schedule.n_steps).astype(int), schedule.n_steps - 1)
        sigmas = schedule.sigmas[steps]
        if parameterization == "epsilon":
            abar = schedule.alpha_bars[steps][:, None]
            inputs = np.sqrt(abar) * x + np.sqrt(1.0 - abar) * eps
        else:
            inputs = x + sigmas[:, None] * eps
    target = eps if parameterization == "epsilon" else -eps / sigmas[:, None]
    return inputs, sigmas, target


def dsm_loss(
    family: NetworkFamily,
    params: ParamSet,
    batch: np.ndarray,
    schedule: NoiseSchedule,
    stream: RngStream,
    parameterization: str = "epsilon",
    fixed_sigma: Optional[float] = None,
) -> DsmLoss:
    """
    Monte Carlo DSM loss on one batch and its output cotangents.

    Returns:
        DsmLoss with the mean squared residual and d loss / d output per sample

    Raises:
        DivergenceError: If any per-sample loss is non-finite (carries sigma and index)
    """
    batch = np.asarray(getattr(batch, "samples", batch), dtype=np.float64)
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise PreconditionError(f"Batch must be a nonempty n x D array, got shape {batch.shape}")
    if batch.shape[1] != family.dim:
        raise DimensionError(f"Batch dimension {batch.shape[1]} does not match family dimension {family.dim}")
    if parameterization not in PARAMETERIZATIONS:
        raise ConfigError(f"Unknown parameterization '{parameterization}'. Available: {list(PARAMETERIZATIONS)}")

    inputs, sigmas, target = _noise_batch(batch, schedule, stream, parameterization, fixed_sigma)
    residual = family.forward_batch(params, inputs, sigmas) - target
    per_sample = np.sum(residual * residual, axis=1)

    bad = np.flatnonzero(~np.isfinite(per_sample))
    if bad.size:
        i = int(bad[0])
        raise DivergenceError(
            f"Non-finite DSM loss at sample {i} (sigma={sigmas[i]:.6g})", sigma=float(sigmas[i]), index=i
        )
    n = batch.shape[0]
    return DsmLoss(float(per_sample.mean()), 2.0 * residual / n, inputs, sigmas)


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings for ``train``."""

    batch_size: int = 64
    iterations: int = 1000
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    log_every: int = 100
    parameterization: str = "epsilon"
    fixed_sigma: Optional[float] = None
    divergence_threshold: float = 1e6
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1 or self.iterations < 0 or self.learning_rate <= 0 or self.log_every < 1:
            raise ConfigError(
                "TrainConfig needs batch_size >= 1, iterations >= 0, learning_rate > 0 and log_every >= 1"
            )
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"Unknown optimizer '{self.optimizer}'. Available: {list(OPTIMIZERS)}")
        if self.parameterization not in PARAMETERIZATIONS:
            raise ConfigError(
                f"Unknown parameterization '{self.parameterization}'. Available: {list(PARAMETERIZATIONS)}"
            )
        if self.fixed_sigma is not None and self.fixed_sigma <= 0:
            raise ConfigError(f"fixed_sigma must be positive, got {self.fixed_sigma}")

    @classmethod
    def from_config(cls, config: Dict[str, Any], seed: Optional[int] = None) -> "TrainConfig":
        """Build from a ``TRAIN`` block with lowercase keys; ``seed`` overrides the block."""
        values = {key.lower(): value for key, value in config.items()}
        unknown = set(values) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Unexpected TRAIN parameters: {sorted(unknown)}")
        if seed is not None:
            values["seed"] = seed
        return cls(**values)


@dataclass
class TrainTrace:
    steps: List[int] = field(default_factory=list)
    losses: List[float] = field(default_factory=list)
    params: Optional[ParamSet] = None
    initial_params: Optional[ParamSet] = None
    wall_clock_seconds: float = 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"step": self.steps, "loss": self.losses})

    @property
    def final_loss(self) -> Optional[float]:
        return self.losses[-1] if self.losses else None


class SgdOptimizer:
    def __init__(self, config: TrainConfig):
        self.lr = config.learning_rate

    def step(self, params: ParamSet, grads: Dict[str, np.ndarray]) -> ParamSet:
        return params.apply_update(grads, self.lr)


class AdamOptimizer:
    def __init__(self, config: TrainConfig):
        self.lr = config.learning_rate
        self.beta1, self.beta2, self.eps = config.adam_beta1, config.adam_beta2, config.adam_eps
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: ParamSet, grads: Dict[str, np.ndarray]) -> ParamSet:
        self.t += 1
        updates = {}
        for name, grad in grads.items():
            m = self.beta1 * self.m.get(name, 0.0) + (1.0 - self.beta1) * grad
            v = self.beta2 * self.v.get(name, 0.0) + (1.0 - self.beta2) * grad * grad
            self.m[name], self.v[name] = m, v
            m_hat = m / (1.0 - self.beta1**self.t)
            v_hat = v / (1.0 - self.beta2**self.t)
            updates[name] = m_hat / (np.sqrt(v_hat) + self.eps)
        return params.apply_update(updates, self.lr)


def make_optimizer(config: TrainConfig) -> Union[SgdOptimizer, AdamOptimizer]:
    return SgdOptimizer(config) if config.optimizer == "sgd" else AdamOptimizer(config)


def train(
    family: NetworkFamily,
    dataset,
    config: TrainConfig,
    schedule: Optional[NoiseSchedule] = None,
    params: Optional[ParamSet] = None,
) -> TrainTrace:
    """
    Minibatch DSM training.

    Args:
        family: Trainable family
        dataset: Dataset or n x D array
        config: Optimization settings; all randomness derives from ``config.seed``
        schedule: Noise schedule (default linear 1e-4..0.02 over 1000 steps)
        params: Starting point; drawn from the family init when omitted

    Returns:
        TrainTrace with losses every ``log_every`` steps and the final parameters

    Raises:
        DivergenceError: If a loss exceeds the divergence threshold or is non-finite;
            ``error.trace`` holds the trace up to that step
    """
    samples = np.asarray(getattr(dataset, "samples", dataset), dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] != family.dim:
        raise DimensionError(f"Dataset shape {samples.shape} does not match family dimension {family.dim}")
    if samples.shape[0] == 0 and config.iterations > 0:
        raise PreconditionError("Cannot train on an empty dataset")
    schedule = schedule or make_schedule()

    root = RngStream.derive(config.seed, "train")
    current = params if params is not None else family.sample_params(root.spawn("init"))
    trace = TrainTrace(params=current, initial_params=current)
    optimizer = make_optimizer(config)
    started = time.perf_counter()

    logger.info(
        "Training %s for %d iterations (%s, lr=%g, batch=%d)",
        family.get_key(),
        config.iterations,
        config.optimizer,
        config.learning_rate,
        config.batch_size,
    )
    for step in range(config.iterations):
        rows = np.minimum(
            (uniform(root.spawn("batch", step), config.batch_size) * samples.shape[0]).astype(int),
            samples.shape[0] - 1,
        )
        try:
            result = dsm_loss(
                family,
                current,
                samples[rows],
                schedule,
                root.spawn("noise", step),
                config.parameterization,
                config.fixed_sigma,
            )
        except DivergenceError as exc:
            trace.wall_clock_seconds = time.perf_counter() - started
            raise DivergenceError(str(exc), trace=trace, sigma=exc.sigma, index=exc.index, step=step) from exc

        if result.loss > config.divergence_threshold:
            trace.wall_clock_seconds = time.perf_counter() - started
            raise DivergenceError(
                f"Loss {result.loss:.3e} exceeded {config.divergence_threshold:.0e} at step {step}",
                trace=trace,
                step=step,
            )

        if step % config.log_every == 0 or step == config.iterations - 1:
            trace.steps.append(step)
            trace.losses.append(result.loss)
            logger.debug("step %d loss %.6g", step, result.loss)

        grads = family.backward_batch(current, result.inputs, result.sigmas, result.cotangent)
        current = optimizer.step(current, grads)
        trace.params = current

    trace.wall_clock_seconds = time.perf_counter() - started
    if trace.losses:
        logger.info("Finished training, final logged loss %.6g", trace.final_loss)
    return trace
