"""
Network family plugin architecture.

A family is a parameterized map F_theta(x, sigma): R^D x R -> R^D together
with its initialization distribution. Families register themselves under a
``kind`` key and are built from the ``FAMILY`` block of an experiment config.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Tuple, Type

import numpy as np

from ..errors import ConfigError, DimensionError, PreconditionError
from ..numerics import RngStream, gaussian
from .params import ParamSet


def draw_normal(stream: RngStream, shape: Tuple[int, ...], mean: float = 0.0, std: float = 1.0) -> np.ndarray:
    """Normal tensor of ``shape``; ``std == 0`` gives the constant ``mean``."""
    size = int(np.prod(shape)) if shape else 1
    if std == 0.0:
        return np.full(shape, float(mean))
    return (mean + std * gaussian(stream, size)).reshape(shape)


class NetworkFamily(ABC):
    """Abstract base for score-network families."""

    DEFAULTS: Dict[str, Any] = {}

    trainable = True

    def __init__(self, family_config: Optional[Dict[str, Any]] = None):
        family_config = dict(family_config or {})
        unknown = set(family_config) - set(self.DEFAULTS)
        if unknown:
            raise ConfigError(
                f"Unexpected parameters for family {self.get_key()}: {sorted(unknown)}. "
                f"Expected: {sorted(self.DEFAULTS)}"
            )
        self.config = {**self.DEFAULTS, **family_config}

    @classmethod
    @abstractmethod
    def get_key(cls) -> str:
        """Family kind used in configs (e.g., 'mlp', 'conv_unet_mini')."""
        ...

    @property
    @abstractmethod
    def dim(self) -> int: ...

    @property
    def image_shape(self) -> Optional[Tuple[int, int, int]]:
        """(channels, height, width) for image families, else None."""
        return None

    @abstractmethod
    def sample_params(self, stream: RngStream) -> ParamSet:
        """Draw one parameter set from the init distribution."""
        ...

    @abstractmethod
    def forward_batch(self, params: ParamSet, x: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
        """Evaluate rows of ``x`` (n x D) at noise levels ``sigmas`` (n,)."""
        ...

    def backward_batch(
        self, params: ParamSet, x: np.ndarray, sigmas: np.ndarray, cotangent: np.ndarray
    ) -> Dict[str, np.ndarray]:
        """Gradient of ``sum_i <cotangent_i, F(x_i, sigma_i)>`` w.r.t. every parameter."""
        raise PreconditionError(f"Family {self.get_key()} is not trainable")

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.get_key(), "dim": self.dim, **_jsonable(self.config)}

    def _check_batch(self, x: np.ndarray, sigmas) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise DimensionError(f"Family {self.get_key()} expects inputs of dimension {self.dim}, got {x.shape}")
        sigmas = np.broadcast_to(np.asarray(sigmas, dtype=np.float64), (x.shape[0],))
        return x, sigmas

    def forward(self, params: ParamSet, x: np.ndarray, sigma: float) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise DimensionError(f"Family {self.get_key()} expects a vector of length {self.dim}, got {x.shape}")
        return self.forward_batch(params, x[None, :], np.array([sigma]))[0]

    def backward(
        self, params: ParamSet, x: np.ndarray, sigma: float, cotangent: np.ndarray
    ) -> Dict[str, np.ndarray]:
        x = np.asarray(x, dtype=np.float64)
        cotangent = np.asarray(cotangent, dtype=np.float64)
        if x.shape != (self.dim,) or cotangent.shape != (self.dim,):
            raise DimensionError(
                f"Family {self.get_key()} expects input and cotangent of length {self.dim}, "
                f"got {x.shape} and {cotangent.shape}"
            )
        return self.backward_batch(params, x[None, :], np.array([sigma]), cotangent[None, :])


def _jsonable(config: Dict[str, Any]) -> Dict[str, Any]:
    out = {}
    for key, value in config.items():
        if isinstance(value, np.ndarray):
            out[key] = value.tolist()
        else:
            out[key] = value
    return out


class FamilyRegistry:
    """Registry for network families."""

    _families: Dict[str, Type[NetworkFamily]] = {}

    @classmethod
    def register(cls, family_cls: Type[NetworkFamily]):
        """Register a family class."""
        cls._families[family_cls.get_key()] = family_cls
        return family_cls

    @classmethod
    def get(cls, kind: str) -> Type[NetworkFamily]:
        if kind not in cls._families:
            raise KeyError(f"Network family '{kind}' not registered. Available: {sorted(cls._families)}")
        return cls._families[kind]

    @classmethod
    def create(cls, kind: str, family_config: Optional[Dict[str, Any]] = None, **kwargs) -> NetworkFamily:
        """Instantiate the family registered under ``kind``."""
        return cls.get(kind)(family_config, **kwargs)

    @classmethod
    def from_config(cls, config: Dict[str, Any], **kwargs) -> NetworkFamily:
        """Build the family described by a ``FAMILY`` config block (KIND + PARAMS)."""
        if "KIND" not in config:
            raise ConfigError("FAMILY block must include KIND")
        return cls.create(config["KIND"], config.get("PARAMS") or {}, **kwargs)

    @classmethod
    def list(cls) -> list:
        return sorted(cls._families)
