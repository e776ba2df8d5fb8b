"""Fully connected score network with an additive noise-level embedding."""

from typing import Any, Dict, List, Optional

import numpy as np

from ..core import FamilyRegistry, NetworkFamily, ParamSet, draw_normal
from ..errors import ConfigError
from ..numerics import RngStream
from .layers import GAINS, get_activation, sigma_embedding


@FamilyRegistry.register
class MlpFamily(NetworkFamily):
    """
    MLP with ``depth`` hidden layers of ``width`` units.

    Hidden layer l computes phi(W_l h_{l-1} + b_l), with E e(sigma) added to the
    first pre-activation. The output layer is affine for depth >= 1; for depth 0
    the single layer is phi(W x + b).
    """

    DEFAULTS = {
        "dim": 4,
        "depth": 2,
        "width": None,
        "activation": "silu",
        "sigma_embedding": True,
        "n_frequencies": 8,
        "weight_gain": None,
        "weight_mean": 0.0,
        "weight_std": None,
        "bias_mean": 0.0,
        "bias_std": 0.0,
        "last_weight_std": None,
    }

    def __init__(self, family_config: Optional[Dict[str, Any]] = None):
        super().__init__(family_config)
        cfg = self.config
        if int(cfg["depth"]) < 0:
            raise ConfigError(f"mlp depth must be non-negative, got {cfg['depth']}")
        self._act, self._act_grad = get_activation(cfg["activation"])
        self._dim = int(cfg["dim"])
        self.width = int(cfg["width"]) if cfg["width"] is not None else 4 * self._dim
        self.depth = int(cfg["depth"])
        self.sizes: List[int] = [self._dim] + [self.width] * self.depth + [self._dim]
        self.n_embed = 2 * int(cfg["n_frequencies"]) if cfg["sigma_embedding"] else 0

    @classmethod
    def get_key(cls) -> str:
        return "mlp"

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def _weight_std(self, fan_in: int, last: bool) -> float:
        cfg = self.config
        if last and cfg["last_weight_std"] is not None:
            return float(cfg["last_weight_std"])
        if cfg["weight_std"] is not None:
            return float(cfg["weight_std"])
        gain = cfg["weight_gain"] if cfg["weight_gain"] is not None else GAINS[cfg["activation"]]
        return float(gain) / np.sqrt(fan_in)

    def sample_params(self, stream: RngStream) -> ParamSet:
        cfg = self.config
        tensors = {}
        for layer in range(self.n_layers):
            fan_in, fan_out = self.sizes[layer], self.sizes[layer + 1]
            last = layer == self.n_layers - 1
            tensors[f"w{layer}"] = draw_normal(
                stream.spawn("w", layer), (fan_out, fan_in), cfg["weight_mean"], self._weight_std(fan_in, last)
            )
            tensors[f"b{layer}"] = draw_normal(stream.spawn("b", layer), (fan_out,), cfg["bias_mean"], cfg["bias_std"])
        if self.n_embed:
            tensors["embed"] = draw_normal(
                stream.spawn("embed"), (self.sizes[1], self.n_embed), 0.0, 1.0 / np.sqrt(self.n_embed)
            )
        return ParamSet(self.get_key(), tensors, stream)

    def _activated(self, layer: int) -> bool:
        return layer < self.n_layers - 1 or self.depth == 0

    def _forward_cache(self, params: ParamSet, x: np.ndarray, sigmas: np.ndarray):
        inputs, pres = [], []
        h = x
        embed = sigma_embedding(sigmas, self.n_embed // 2) if self.n_embed else None
        for layer in range(self.n_layers):
            inputs.append(h)
            pre = h @ params[f"w{layer}"].T + params[f"b{layer}"]
            if layer == 0 and embed is not None:
                pre = pre + embed @ params["embed"].T
            pres.append(pre)
            h = self._act(pre) if self._activated(layer) else pre
        return h, inputs, pres, embed

    def forward_batch(self, params: ParamSet, x: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
        x, sigmas = self._check_batch(x, sigmas)
        out, _, _, _ = self._forward_cache(params, x, sigmas)
        return out

    def backward_batch(
        self, params: ParamSet, x: np.ndarray, sigmas: np.ndarray, cotangent: np.ndarray
    ) -> Dict[str, np.ndarray]:
        x, sigmas = self._check_batch(x, sigmas)
        _, inputs, pres, embed = self._forward_cache(params, x, sigmas)

        grads = {}
        g = np.asarray(cotangent, dtype=np.float64)
        for layer in reversed(range(self.n_layers)):
            if self._activated(layer):
                g = g * self._act_grad(pres[layer])
            grads[f"w{layer}"] = g.T @ inputs[layer]
            grads[f"b{layer}"] = g.sum(axis=0)
            if layer == 0 and embed is not None:
                grads["embed"] = g.T @ embed
            g = g @ params[f"w{layer}"]
        return {name: grads[name] for name in params.names()}
