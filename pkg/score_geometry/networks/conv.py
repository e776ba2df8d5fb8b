"""
Minimal convolutional U-Net.

levels = 0: z = conv_out(x) + b_out
levels = 1: h = act(mod(conv_in(x) + b_in)); z = conv_out(h) + b_out
levels = 2: h = act(mod(conv_in(x) + b_in)); m = act(conv_mid(down(h)) + b_mid);
            z = conv_out(h + up(m)) + b_out

mod(.) is the per-channel affine ``(1 + scale(sigma)) * u + shift(sigma)`` from
the noise-level embedding. Images are vectorized channel-major then row-major.
"""

from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..core import FamilyRegistry, NetworkFamily, ParamSet, draw_normal
from ..errors import ConfigError
from ..numerics import RngStream
from .layers import (
    GAINS,
    PADDINGS,
    RESAMPLINGS,
    conv2d,
    conv2d_backward,
    flip_symmetrize,
    get_activation,
    resample,
    resample_backward,
    resample_matrix,
    sigma_embedding,
)

KERNEL_NAMES = ("conv_in", "conv_mid", "conv_out")


@FamilyRegistry.register
class ConvUnetMiniFamily(NetworkFamily):
    """Two-level convolutional score network with configurable padding and resampling."""

    DEFAULTS = {
        "channels": 1,
        "height": 8,
        "width": 8,
        "hidden_channels": 16,
        "levels": 2,
        "kernel_size": 3,
        "padding": "zero",
        "resampling": "nearest",
        "activation": "silu",
        "sigma_embedding": True,
        "n_frequencies": 8,
        "weight_mean": 0.0,
        "weight_std": None,
        "bias_mean": 0.0,
        "bias_std": 0.0,
    }

    def __init__(self, family_config: Optional[Dict[str, Any]] = None):
        super().__init__(family_config)
        cfg = self.config
        if int(cfg["levels"]) not in (0, 1, 2):
            raise ConfigError(f"conv_unet_mini levels must be 0, 1 or 2, got {cfg['levels']}")
        if int(cfg["kernel_size"]) % 2 != 1:
            raise ConfigError(f"kernel_size must be odd, got {cfg['kernel_size']}")
        if cfg["padding"] not in PADDINGS:
            raise ConfigError(f"Unknown padding '{cfg['padding']}'. Available: {list(PADDINGS)}")
        if cfg["resampling"] not in RESAMPLINGS:
            raise ConfigError(f"Unknown resampling '{cfg['resampling']}'. Available: {list(RESAMPLINGS)}")

        self.levels = int(cfg["levels"])
        self.channels = int(cfg["channels"])
        self.height = int(cfg["height"])
        self.width = int(cfg["width"])
        self.hidden = int(cfg["hidden_channels"])
        self.k = int(cfg["kernel_size"])
        self.padding = cfg["padding"]
        self._act, self._act_grad = get_activation(cfg["activation"])
        self.n_embed = 2 * int(cfg["n_frequencies"]) if cfg["sigma_embedding"] else 0

        low_h, low_w = (self.height + 1) // 2, (self.width + 1) // 2
        mode = cfg["resampling"]
        self.down_rows = resample_matrix(self.height, low_h, mode)
        self.down_cols = resample_matrix(self.width, low_w, mode)
        self.up_rows = resample_matrix(low_h, self.height, mode)
        self.up_cols = resample_matrix(low_w, self.width, mode)

    @classmethod
    def get_key(cls) -> str:
        return "conv_unet_mini"

    @property
    def dim(self) -> int:
        return self.channels * self.height * self.width

    @property
    def image_shape(self) -> Tuple[int, int, int]:
        return (self.channels, self.height, self.width)

    def kernel_shapes(self) -> Dict[str, Tuple[int, int, int, int]]:
        c, h, k = self.channels, self.hidden, self.k
        if self.levels == 0:
            return {"conv_out": (c, c, k, k)}
        shapes = {"conv_in": (h, c, k, k)}
        if self.levels == 2:
            shapes["conv_mid"] = (h, h, k, k)
        shapes["conv_out"] = (c, h, k, k)
        return shapes

    def _weight_std(self, fan_in: int) -> float:
        if self.config["weight_std"] is not None:
            return float(self.config["weight_std"])
        return GAINS[self.config["activation"]] / np.sqrt(fan_in)

    def sample_params(self, stream: RngStream) -> ParamSet:
        cfg = self.config
        tensors = {}
        for name, shape in self.kernel_shapes().items():
            fan_in = shape[1] * shape[2] * shape[3]
            tensors[name] = draw_normal(stream.spawn(name), shape, cfg["weight_mean"], self._weight_std(fan_in))
            bias_name = "b_" + name.split("_")[1]
            tensors[bias_name] = draw_normal(stream.spawn(bias_name), (shape[0],), cfg["bias_mean"], cfg["bias_std"])
        if self.levels > 0 and self.n_embed:
            tensors["embed"] = draw_normal(
                stream.spawn("embed"), (2 * self.hidden, self.n_embed), 0.0, 1.0 / np.sqrt(self.n_embed)
            )
        return ParamSet(self.get_key(), tensors, stream)

    def symmetrize(self, params: ParamSet) -> ParamSet:
        """Flip-symmetrize every convolution kernel."""
        return params.replace(**{name: flip_symmetrize(params[name]) for name in KERNEL_NAMES if name in params})

    def _modulation(self, params: ParamSet, sigmas: np.ndarray):
        if not self.n_embed:
            return None, None, None
        embed = sigma_embedding(sigmas, self.n_embed // 2)
        mod = embed @ params["embed"].T
        scale = mod[:, : self.hidden, None, None]
        shift = mod[:, self.hidden :, None, None]
        return embed, scale, shift

    def _forward_cache(self, params: ParamSet, x: np.ndarray, sigmas: np.ndarray):
        n = x.shape[0]
        img = x.reshape(n, self.channels, self.height, self.width)
        cache = {"img": img}
        if self.levels == 0:
            out = conv2d(img, params["conv_out"], self.padding) + params["b_out"][None, :, None, None]
            return out.reshape(n, -1), cache

        pre_in = conv2d(img, params["conv_in"], self.padding) + params["b_in"][None, :, None, None]
        embed, scale, shift = self._modulation(params, sigmas)
        mod_in = pre_in if embed is None else (1.0 + scale) * pre_in + shift
        h = self._act(mod_in)
        cache.update(pre_in=pre_in, embed=embed, scale=scale, mod_in=mod_in, h=h)

        if self.levels == 2:
            low = resample(h, self.down_rows, self.down_cols)
            pre_mid = conv2d(low, params["conv_mid"], self.padding) + params["b_mid"][None, :, None, None]
            mid = self._act(pre_mid)
            skip = h + resample(mid, self.up_rows, self.up_cols)
            cache.update(low=low, pre_mid=pre_mid)
        else:
            skip = h
        cache["skip"] = skip

        out = conv2d(skip, params["conv_out"], self.padding) + params["b_out"][None, :, None, None]
        return out.reshape(n, -1), cache

    def forward_batch(self, params: ParamSet, x: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
        x, sigmas = self._check_batch(x, sigmas)
        out, _ = self._forward_cache(params, x, sigmas)
        return out

    def backward_batch(
        self, params: ParamSet, x: np.ndarray, sigmas: np.ndarray, cotangent: np.ndarray
    ) -> Dict[str, np.ndarray]:
        x, sigmas = self._check_batch(x, sigmas)
        _, cache = self._forward_cache(params, x, sigmas)
        n = x.shape[0]
        g_out = np.asarray(cotangent, dtype=np.float64).reshape(n, self.channels, self.height, self.width)

        grads = {"b_out": g_out.sum(axis=(0, 2, 3))}
        if self.levels == 0:
            _, grads["conv_out"] = conv2d_backward(cache["img"], params["conv_out"], g_out, self.padding)
            return grads

        g_skip, grads["conv_out"] = conv2d_backward(cache["skip"], params["conv_out"], g_out, self.padding)
        g_h = g_skip
        if self.levels == 2:
            g_mid = resample_backward(g_skip, self.up_rows, self.up_cols)
            g_pre_mid = g_mid * self._act_grad(cache["pre_mid"])
            grads["b_mid"] = g_pre_mid.sum(axis=(0, 2, 3))
            g_low, grads["conv_mid"] = conv2d_backward(cache["low"], params["conv_mid"], g_pre_mid, self.padding)
            g_h = g_h + resample_backward(g_low, self.down_rows, self.down_cols)

        g_mod = g_h * self._act_grad(cache["mod_in"])
        if cache["embed"] is None:
            g_pre_in = g_mod
        else:
            g_pre_in = g_mod * (1.0 + cache["scale"])
            g_scale = (g_mod * cache["pre_in"]).sum(axis=(2, 3))
            g_shift = g_mod.sum(axis=(2, 3))
            grads["embed"] = np.concatenate([g_scale, g_shift], axis=1).T @ cache["embed"]

        grads["b_in"] = g_pre_in.sum(axis=(0, 2, 3))
        _, grads["conv_in"] = conv2d_backward(cache["img"], params["conv_in"], g_pre_in, self.padding)
        return {name: grads[name] for name in params.names()}
