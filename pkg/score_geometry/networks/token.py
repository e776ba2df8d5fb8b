"""Patch-token family: one shared affine map applied to every token."""

from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..core import FamilyRegistry, NetworkFamily, ParamSet, draw_normal
from ..errors import ConfigError
from ..numerics import RngStream

TOKENIZATIONS = ("patch", "contiguous")


def patch_permutation(channels: int, height: int, width: int, patch: int) -> np.ndarray:
    """
    Index array ``perm`` with ``tokens.ravel() = x[perm]``.

    Token t = (ti, tj) in row-major patch order holds the ``channels x patch x patch``
    block of that patch, channel-major then row-major.
    """
    pixel = np.arange(channels * height * width).reshape(channels, height, width)
    blocks = pixel.reshape(channels, height // patch, patch, width // patch, patch)
    return blocks.transpose(1, 3, 0, 2, 4).reshape(-1)


@FamilyRegistry.register
class TokenLinearFamily(NetworkFamily):
    """
    z_t = W h_t + b for every token h_t, output Q vec(z).

    With ``tokenization: patch`` the input is split into non-overlapping
    ``patch x patch`` patches and Q unpatchifies; with ``contiguous`` tokens are
    consecutive chunks of the vector and Q is the identity. Either way Q is a
    fixed orthonormal map and the shared map sees sigma not at all.
    """

    DEFAULTS = {
        "channels": 1,
        "height": 4,
        "width": 4,
        "patch": 2,
        "tokenization": "patch",
        "weight_mean": 0.0,
        "weight_std": None,
        "bias_mean": 0.0,
        "bias_std": 0.0,
    }

    def __init__(self, family_config: Optional[Dict[str, Any]] = None):
        super().__init__(family_config)
        cfg = self.config
        self.channels, self.height, self.width = int(cfg["channels"]), int(cfg["height"]), int(cfg["width"])
        self.patch = int(cfg["patch"])
        if self.height % self.patch or self.width % self.patch:
            raise ConfigError(f"Image {self.height}x{self.width} is not divisible by patch size {self.patch}")
        if cfg["tokenization"] not in TOKENIZATIONS:
            raise ConfigError(f"Unknown tokenization '{cfg['tokenization']}'. Available: {list(TOKENIZATIONS)}")

        self.token_dim = self.channels * self.patch * self.patch
        self.n_tokens = self.dim // self.token_dim
        if cfg["tokenization"] == "patch":
            self.perm = patch_permutation(self.channels, self.height, self.width, self.patch)
        else:
            self.perm = np.arange(self.dim)
        self.inverse_perm = np.argsort(self.perm)

    @classmethod
    def get_key(cls) -> str:
        return "token_linear"

    @property
    def dim(self) -> int:
        return self.channels * self.height * self.width

    @property
    def image_shape(self) -> Tuple[int, int, int]:
        return (self.channels, self.height, self.width)

    def unpatchify_matrix(self) -> np.ndarray:
        """Q as a D x D matrix acting on token-major vectors."""
        return np.eye(self.dim)[:, self.perm]

    def tokens(self, x: np.ndarray) -> np.ndarray:
        return x[:, self.perm].reshape(x.shape[0], self.n_tokens, self.token_dim)

    def sample_params(self, stream: RngStream) -> ParamSet:
        cfg = self.config
        std = cfg["weight_std"] if cfg["weight_std"] is not None else 1.0 / np.sqrt(self.token_dim)
        w = draw_normal(stream.spawn("w"), (self.token_dim, self.token_dim), cfg["weight_mean"], std)
        b = draw_normal(stream.spawn("b"), (self.token_dim,), cfg["bias_mean"], cfg["bias_std"])
        return ParamSet(self.get_key(), {"w": w, "b": b}, stream)

    def forward_batch(self, params: ParamSet, x: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
        x, _ = self._check_batch(x, sigmas)
        z = self.tokens(x) @ params["w"].T + params["b"]
        return z.reshape(x.shape[0], -1)[:, self.inverse_perm]

    def backward_batch(
        self, params: ParamSet, x: np.ndarray, sigmas: np.ndarray, cotangent: np.ndarray
    ) -> Dict[str, np.ndarray]:
        x, _ = self._check_batch(x, sigmas)
        g = self.tokens(np.asarray(cotangent, dtype=np.float64))
        h = self.tokens(x)
        return {"w": np.einsum("nta,ntb->ab", g, h), "b": g.sum(axis=(0, 1))}
