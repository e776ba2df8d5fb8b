"""
Linear denoising score matching: data N(0, v v^T), noisy input x + sigma eps,
model Omega = Phi Theta with Phi fixed and Theta trained by (S)GD on
E || Omega (x + sigma eps) + eps / sigma ||^2.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd

from ..errors import DivergenceError, NotUnitError, PreconditionError
from ..numerics import RngStream, as_matrix, gaussian, sym_eig

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-8
PLATEAU_TOL = 1e-12
MODES = ("gd_mean", "sgd")


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).ravel()
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise NotUnitError(f"v must have unit norm, got {np.linalg.norm(v):.12f}")
    return v


def optimal_score(v, sigma: float) -> np.ndarray:
    """Omega* = (1 / sigma^2) (v v^T / (sigma^2 + 1) - I), the score matrix of N(0, v v^T + sigma^2 I)."""
    v = _unit(v)
    if sigma <= 0:
        raise PreconditionError(f"sigma must be positive, got {sigma}")
    s2 = sigma * sigma
    return (np.outer(v, v) / (s2 + 1.0) - np.eye(v.size)) / s2


def noisy_covariance(v, sigma: float) -> np.ndarray:
    v = _unit(v)
    return np.outer(v, v) + sigma * sigma * np.eye(v.size)


def population_gradient(phi: np.ndarray, theta: np.ndarray, v, sigma: float) -> np.ndarray:
    """2 Phi^T [Phi Theta (v v^T + sigma^2 I) + I]."""
    return 2.0 * phi.T @ (phi @ theta @ noisy_covariance(v, sigma) + np.eye(phi.shape[0]))


@dataclass(frozen=True)
class LinearDsmConfig:
    """Setting of one linear DSM run. ``phi`` must be square and invertible."""

    phi: np.ndarray
    v: np.ndarray
    sigma: float = 1.0
    eta: float = 1e-3
    steps: int = 10000
    mode: str = "gd_mean"
    batch: int = 1
    init_std: float = 1e-2
    seed: int = 0
    burn_in: float = 0.8
    exact_gradient: bool = False

    def __post_init__(self):
        object.__setattr__(self, "phi", as_matrix(self.phi, "phi"))
        object.__setattr__(self, "v", _unit(self.v))
        if self.phi.shape != (self.v.size, self.v.size):
            raise PreconditionError(f"phi must be {self.v.size}x{self.v.size}, got {self.phi.shape}")
        if self.sigma <= 0 or self.eta <= 0 or self.steps < 1 or self.batch < 1:
            raise PreconditionError("Need sigma > 0, eta > 0, steps >= 1 and batch >= 1")
        if self.mode not in MODES:
            raise PreconditionError(f"Unknown mode '{self.mode}'. Available: {list(MODES)}")
        if not 0.0 <= self.burn_in < 1.0:
            raise PreconditionError(f"burn_in must be in [0, 1), got {self.burn_in}")

    @property
    def dim(self) -> int:
        return self.v.size

    def omega_star(self) -> np.ndarray:
        return optimal_score(self.v, self.sigma)


@dataclass
class ErrorTrace:
    """Frobenius error ||Omega_t - Omega*|| per step (index 0 is the initial error)."""

    errors: np.ndarray
    eta: float
    fitted_decay: Optional[float] = None
    fitted_rate: Optional[float] = None
    fit_window: Tuple[int, int] = (0, 0)
    stationary_error: Optional[float] = None
    grad_cov_trace: Optional[float] = None
    extras: Dict[str, Any] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"step": np.arange(self.errors.size), "frobenius_error": self.errors})

    def summary(self) -> Dict[str, Any]:
        return {
            "fitted_decay": self.fitted_decay,
            "fitted_rate": self.fitted_rate,
            "fit_window": list(self.fit_window),
            "stationary_error": self.stationary_error,
            "grad_cov_trace": self.grad_cov_trace,
            "final_error": float(self.errors[-1]),
            **self.extras,
        }


def fit_decay(errors: np.ndarray, eta: float) -> Tuple[Optional[float], Optional[float], Tuple[int, int]]:
    """
    Least-squares slope of log ||E_t|| over the final third of the pre-plateau trace.

    The plateau starts at the first step where the error drops below 1e-12 of
    the initial error. Returns (decay factor per step, rate (1 - decay) / (2 eta), window).
    """
    if errors.size < 4 or errors[0] == 0.0:
        return None, None, (0, 0)
    below = np.flatnonzero(errors < PLATEAU_TOL * errors[0])
    end = int(below[0]) if below.size else errors.size
    start = end - max((end) // 3, 2)
    if start < 0 or end - start < 2:
        return None, None, (0, 0)
    steps = np.arange(start, end)
    slope = np.polyfit(steps, np.log(errors[start:end]), 1)[0]
    decay = float(np.exp(slope))
    return decay, (1.0 - decay) / (2.0 * eta), (start, end)


def _check_stable(config: LinearDsmConfig) -> None:
    a = sym_eig(config.phi @ config.phi.T).eigenvalues
    b = sym_eig(noisy_covariance(config.v, config.sigma)).eigenvalues
    radius = float(np.max(np.abs(1.0 - 2.0 * config.eta * np.outer(a, b))))
    if radius >= 1.0:
        raise PreconditionError(f"eta={config.eta} is unstable: spectral radius {radius:.6f} >= 1")


def gd_mean_trace(config: LinearDsmConfig, e0: Optional[np.ndarray] = None) -> ErrorTrace:
    """
    Mean-error recursion E_t = E_{t-1} - 2 eta Phi Phi^T E_{t-1} (v v^T + sigma^2 I).

    Starts from E_0 = -Omega* (zero-mean initial Theta) unless ``e0`` is given.

    Raises:
        PreconditionError: If eta makes the recursion expansive
    """
    _check_stable(config)
    a = config.phi @ config.phi.T
    sigma_cov = noisy_covariance(config.v, config.sigma)
    e = -config.omega_star() if e0 is None else np.asarray(e0, dtype=np.float64).copy()

    errors = np.empty(config.steps + 1)
    errors[0] = np.linalg.norm(e)
    step = 2.0 * config.eta
    for t in range(1, config.steps + 1):
        e = e - step * (a @ e @ sigma_cov)
        errors[t] = np.linalg.norm(e)

    decay, rate, window = fit_decay(errors, config.eta)
    return ErrorTrace(errors=errors, eta=config.eta, fitted_decay=decay, fitted_rate=rate, fit_window=window)


def predicted_rate(eigvals, i: int, sigma: float) -> float:
    """
    rho_i = min[(sigma^2 + 1) lambda_i, sigma^2 min_{j != i} lambda_j] for 1-based ``i``.

    Raises:
        PreconditionError: If eigenvalues are not positive or lambda_{D-1} <= lambda_D
        IndexError: If ``i`` is out of range
    """
    lam = np.asarray(eigvals, dtype=np.float64).ravel()
    if lam.size < 2:
        raise PreconditionError("predicted_rate needs at least two eigenvalues")
    if np.any(lam <= 0):
        raise PreconditionError("Eigenvalues must be positive")
    if not lam[-2] > lam[-1]:
        raise PreconditionError(f"Need lambda_(D-1) > lambda_D, got {lam[-2]} and {lam[-1]}")
    if not 1 <= i <= lam.size:
        raise IndexError(f"Index {i} out of range 1..{lam.size}")
    s2 = sigma * sigma
    others = np.delete(lam, i - 1)
    return float(min((s2 + 1.0) * lam[i - 1], s2 * others.min()))


def sgd_simulate(config: LinearDsmConfig) -> ErrorTrace:
    """
    Stochastic gradient descent on Theta with per-sample gradients 2 Phi^T r x^T,
    r = Phi Theta x + eps / sigma.

    After the burn-in fraction, reports the mean Frobenius error and the trace of
    the empirical covariance of the stochastic gradients.

    Raises:
        DivergenceError: If the iterate becomes non-finite
    """
    if config.exact_gradient:
        _check_stable(config)
    dim, batch, sigma = config.dim, config.batch, config.sigma
    phi, v = config.phi, config.v
    omega_star = config.omega_star()
    stream = RngStream.derive(config.seed, "sgd")

    theta = (
        config.init_std * gaussian(stream.spawn("init"), dim * dim).reshape(dim, dim)
        if config.init_std > 0
        else np.zeros((dim, dim))
    )
    if not config.exact_gradient:
        g = gaussian(stream.spawn("g"), config.steps * batch).reshape(config.steps, batch)
        eps = gaussian(stream.spawn("eps"), config.steps * batch * dim).reshape(config.steps, batch, dim)

    burn = int(config.burn_in * config.steps)
    errors = np.empty(config.steps + 1)
    errors[0] = np.linalg.norm(phi @ theta - omega_star)
    grad_sum = np.zeros((dim, dim))
    grad_sq = 0.0
    n_grads = 0

    for t in range(config.steps):
        if config.exact_gradient:
            grad = population_gradient(phi, theta, v, sigma)
        else:
            x = g[t][:, None] * v[None, :] + sigma * eps[t]
            r = x @ (phi @ theta).T + eps[t] / sigma
            grad = 2.0 * phi.T @ (r.T @ x) / batch
        theta = theta - config.eta * grad
        errors[t + 1] = np.linalg.norm(phi @ theta - omega_star)
        if not np.isfinite(errors[t + 1]):
            raise DivergenceError(f"SGD iterate became non-finite at step {t + 1}", step=t + 1)
        if t >= burn:
            grad_sum += grad
            grad_sq += float(np.sum(grad * grad))
            n_grads += 1

    stationary = float(errors[burn + 1 :].mean())
    cov_trace = None
    if n_grads > 1:
        mean = grad_sum / n_grads
        cov_trace = (grad_sq - n_grads * float(np.sum(mean * mean))) / (n_grads - 1)

    decay, rate, window = fit_decay(errors, config.eta) if config.exact_gradient else (None, None, (0, 0))
    logger.debug("SGD finished: stationary error %.6g, gradient covariance trace %s", stationary, cov_trace)
    return ErrorTrace(
        errors=errors,
        eta=config.eta,
        fitted_decay=decay,
        fitted_rate=rate,
        fit_window=window,
        stationary_error=stationary,
        grad_cov_trace=cov_trace,
        extras={"burn_in_steps": burn, "batch": batch},
    )


@dataclass(frozen=True)
class GradCovariance:
    trace: float
    standard_error: float
    closed_form: float
    n_samples: int


def closed_form_grad_cov_trace(phi: np.ndarray, v, sigma: float) -> float:
    """4 / (sigma^2 (sigma^2 + 1)) * (1 + sigma^2 D) * v^T Phi Phi^T v."""
    v = _unit(v)
    s2 = sigma * sigma
    lam = float(v @ phi @ phi.T @ v)
    return 4.0 / (s2 * (s2 + 1.0)) * (1.0 + s2 * v.size) * lam


def stochastic_grad_covariance(phi, v, sigma: float, n_samples: int, stream: RngStream) -> GradCovariance:
    """
    Monte Carlo trace of Cov[vec(grad_Theta J_hat)] at Theta* = Phi^{-1} Omega*.

    Returns:
        GradCovariance with the estimate, its standard error and the closed form
    """
    phi = as_matrix(phi, "phi")
    v = _unit(v)
    if n_samples < 2:
        raise PreconditionError(f"n_samples must be at least 2, got {n_samples}")
    dim = v.size
    omega_star = optimal_score(v, sigma)

    g = gaussian(stream.spawn("g"), n_samples)
    eps = gaussian(stream.spawn("eps"), n_samples * dim).reshape(n_samples, dim)
    x = g[:, None] * v[None, :] + sigma * eps
    r = x @ omega_star.T + eps / sigma
    left = 2.0 * r @ phi
    # vec(G_n) = left_n (outer) x_n, so ||G_n||^2 factorizes
    sq_norms = np.sum(left * left, axis=1) * np.sum(x * x, axis=1)
    mean_grad = np.einsum("na,nb->ab", left, x) / n_samples

    trace = float(sq_norms.mean() - np.sum(mean_grad * mean_grad)) * n_samples / (n_samples - 1)
    se = float(sq_norms.std(ddof=1) / np.sqrt(n_samples))
    return GradCovariance(trace, se, closed_form_grad_cov_trace(phi, v, sigma), int(n_samples))
