"""Linear family Omega(x) = Phi Theta x with a fixed, caller-supplied Phi."""

from typing import Any, Dict, Optional

import numpy as np

from ..core import FamilyRegistry, NetworkFamily, ParamSet, draw_normal
from ..errors import DimensionError
from ..numerics import RngStream, as_matrix


@FamilyRegistry.register
class LinearFamily(NetworkFamily):
    """
    F_Theta(x, sigma) = Phi Theta x.

    Sigma is ignored: the linear DSM analysis holds the noise level fixed.
    ``phi`` may be passed as a constructor argument or as a nested list in the
    config; it defaults to the identity.
    """

    DEFAULTS = {"dim": 2, "phi": None, "theta_mean": 0.0, "theta_std": 1.0}

    def __init__(self, family_config: Optional[Dict[str, Any]] = None, phi: Optional[np.ndarray] = None):
        super().__init__(family_config)
        if phi is not None:
            self.config["phi"] = phi
        if self.config["phi"] is None:
            self.phi = np.eye(int(self.config["dim"]))
        else:
            self.phi = as_matrix(self.config["phi"], "phi")
            if self.phi.shape[0] != self.phi.shape[1]:
                raise DimensionError(f"phi must be square, got shape {self.phi.shape}")
        self.config["dim"] = self.phi.shape[0]

    @classmethod
    def get_key(cls) -> str:
        return "linear"

    @property
    def dim(self) -> int:
        return self.phi.shape[0]

    def sample_params(self, stream: RngStream) -> ParamSet:
        theta = draw_normal(stream, (self.dim, self.dim), self.config["theta_mean"], self.config["theta_std"])
        return ParamSet(self.get_key(), {"theta": theta}, stream)

    def params_from_theta(self, theta: np.ndarray) -> ParamSet:
        return ParamSet(self.get_key(), {"theta": as_matrix(theta, "theta")})

    def omega(self, params: ParamSet) -> np.ndarray:
        return self.phi @ params["theta"]

    def forward_batch(self, params: ParamSet, x: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
        x, _ = self._check_batch(x, sigmas)
        return x @ self.omega(params).T

    def backward_batch(
        self, params: ParamSet, x: np.ndarray, sigmas: np.ndarray, cotangent: np.ndarray
    ) -> Dict[str, np.ndarray]:
        x, _ = self._check_batch(x, sigmas)
        return {"theta": self.phi.T @ (np.asarray(cotangent).T @ x)}
