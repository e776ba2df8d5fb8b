"""
Exact epsilon predictors for zero-mean Gaussian data.

For data N(0, C) the DDPM input x_t = sqrt(abar) x + sqrt(1 - abar) eps has
E[eps | x_t] = sqrt(1 - abar) (abar C + (1 - abar) I)^{-1} x_t, with
abar = 1 / (1 + sigma^2). These are registered as non-trainable families so
samplers and the DSM loss can be checked without training.
"""

from typing import Any, Dict, Optional

import numpy as np

from ..core import FamilyRegistry, NetworkFamily, ParamSet
from ..errors import ConfigError, DimensionError
from ..numerics import RngStream, as_matrix, sym_eig


@FamilyRegistry.register
class GaussianOracleFamily(NetworkFamily):
    """Posterior-mean noise predictor for N(0, covariance) data."""

    DEFAULTS = {"dim": 2, "covariance": None}

    trainable = False

    def __init__(self, family_config: Optional[Dict[str, Any]] = None, covariance: Optional[np.ndarray] = None):
        super().__init__(family_config)
        if covariance is not None:
            self.config["covariance"] = covariance
        cov = self.config["covariance"]
        self._build(np.eye(int(self.config["dim"])) if cov is None else as_matrix(cov, "covariance"))

    def _build(self, covariance: np.ndarray) -> None:
        self.covariance = covariance
        if self.covariance.shape[0] != self.covariance.shape[1]:
            raise DimensionError(f"covariance must be square, got shape {self.covariance.shape}")
        eig = sym_eig(self.covariance)
        self._values = np.maximum(eig.eigenvalues, 0.0)
        self._vectors = eig.eigenvectors

    @classmethod
    def get_key(cls) -> str:
        return "gaussian_oracle"

    @property
    def dim(self) -> int:
        return self.covariance.shape[0]

    def sample_params(self, stream: RngStream) -> ParamSet:
        return ParamSet(self.get_key(), {}, stream)

    def forward_batch(self, params: ParamSet, x: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
        x, sigmas = self._check_batch(x, sigmas)
        abar = 1.0 / (1.0 + sigmas**2)
        coords = x @ self._vectors
        denom = abar[:, None] * self._values[None, :] + (1.0 - abar)[:, None]
        return np.sqrt(1.0 - abar)[:, None] * (coords / denom) @ self._vectors.T

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.get_key(), "dim": self.dim, "trace": float(np.trace(self.covariance))}


@FamilyRegistry.register
class RankOneOracleFamily(GaussianOracleFamily):
    """Noise predictor for N(0, d v v^T)."""

    DEFAULTS = {"v": None}

    def __init__(self, family_config: Optional[Dict[str, Any]] = None, v: Optional[np.ndarray] = None):
        NetworkFamily.__init__(self, family_config)
        if v is not None:
            self.config["v"] = v
        if self.config["v"] is None:
            raise ConfigError("rank_one_oracle requires v")
        vec = np.asarray(self.config["v"], dtype=np.float64).ravel()
        self.v = vec / np.linalg.norm(vec)
        self.config["v"] = self.v.tolist()
        self._build(vec.size * np.outer(self.v, self.v))

    @classmethod
    def get_key(cls) -> str:
        return "rank_one_oracle"
