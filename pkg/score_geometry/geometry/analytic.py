"""
Closed-form geometries for the last layer of three architecture classes.

Each formula conditions on the layer input h and averages over the random
last-layer weights and biases; the outer expectation over h is an empirical
mean over the supplied ``h_samples``.
"""

from typing import Any, Dict

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from numpy.polynomial.hermite_e import hermegauss

from ..errors import ConfigError, DimensionError
from ..networks.layers import get_activation, pad

ANALYTIC_KINDS = ("mlp_last_layer", "conv_last_layer", "token_linear")

QUADRATURE_NODES = 64


def _gaussian_moments(activation: str, means: np.ndarray, stds: np.ndarray):
    """E[phi(u)] and Var[phi(u)] for u ~ N(mean, std^2), elementwise."""
    if activation == "identity":
        return means, stds**2
    phi, _ = get_activation(activation)
    nodes, weights = hermegauss(QUADRATURE_NODES)
    weights = weights / np.sqrt(2.0 * np.pi)
    values = phi(means[:, None] + stds[:, None] * nodes[None, :])
    first = values @ weights
    second = (values**2) @ weights
    return first, np.maximum(second - first**2, 0.0)


def mlp_last_layer(moments: Dict[str, Any]) -> np.ndarray:
    """alpha I + beta 11^T for z = phi(W h + b) with iid Gaussian W and b."""
    dim = int(moments["dim"])
    h = np.atleast_2d(np.asarray(moments.get("h_samples", [[0.0]]), dtype=np.float64))
    w_mean, w_var = float(moments.get("weight_mean", 0.0)), float(moments.get("weight_var", 1.0))
    b_mean, b_var = float(moments.get("bias_mean", 0.0)), float(moments.get("bias_var", 0.0))

    means = w_mean * h.sum(axis=1) + b_mean
    stds = np.sqrt(w_var * (h**2).sum(axis=1) + b_var)
    mu, var = _gaussian_moments(moments.get("activation", "identity"), means, stds)
    alpha = float(var.mean())
    beta = float((mu**2).mean())
    return alpha * np.eye(dim) + beta * np.ones((dim, dim))


def _patch_matrices(h: np.ndarray, kernel_size: int, padding: str) -> np.ndarray:
    """(n, C_in, H*W, k*k) patches so that conv output = patches @ kernel.ravel()."""
    n, c, height, width = h.shape
    windows = sliding_window_view(pad(h, kernel_size // 2, padding), (kernel_size, kernel_size), axis=(2, 3))
    return windows.reshape(n, c, height * width, kernel_size * kernel_size)


def conv_last_layer(moments: Dict[str, Any]) -> np.ndarray:
    """I_{C_out} kron A + (11^T)_{C_out} kron B for z = conv(h) + b with iid kernel entries and channel biases."""
    h = np.asarray(moments["h_samples"], dtype=np.float64)
    if h.ndim == 3:
        h = h[None]
    if h.ndim != 4:
        raise DimensionError(f"conv h_samples must be (n, C_in, H, W), got shape {h.shape}")
    c_out = int(moments["c_out"])
    k = int(moments.get("kernel_size", 3))
    w_mean, w_var = float(moments.get("weight_mean", 0.0)), float(moments.get("weight_var", 1.0))
    b_mean, b_var = float(moments.get("bias_mean", 0.0)), float(moments.get("bias_var", 0.0))

    patches = _patch_matrices(h, k, moments.get("padding", "zero"))
    n, spatial = h.shape[0], h.shape[2] * h.shape[3]
    ones = np.ones((spatial, spatial))

    cov = w_var * np.einsum("ncpk,ncqk->pq", patches, patches) / n + b_var * ones
    means = w_mean * patches.sum(axis=(1, 3)) + b_mean
    mean_outer = means.T @ means / n

    return np.kron(np.eye(c_out), cov) + np.kron(np.ones((c_out, c_out)), mean_outer)


def token_linear(moments: Dict[str, Any]) -> np.ndarray:
    """
    Q[(sigma_W^2 K + sigma_b^2 I_T) kron I_{L_out}]Q^T with K_ts = E<h_t, h_s>.

    ``shared_bias: true`` replaces I_T by 11^T (one bias vector for all tokens).
    """
    if "token_gram" in moments:
        gram = np.asarray(moments["token_gram"], dtype=np.float64)
    else:
        h = np.asarray(moments["h_samples"], dtype=np.float64)
        if h.ndim == 2:
            h = h[None]
        gram = np.einsum("nta,nsa->ts", h, h) / h.shape[0]
    t = gram.shape[0]
    l_out = int(moments["l_out"])
    w_var, b_var = float(moments.get("weight_var", 1.0)), float(moments.get("bias_var", 0.0))
    bias_block = np.ones((t, t)) if moments.get("shared_bias", False) else np.eye(t)

    inner = np.kron(w_var * gram + b_var * bias_block, np.eye(l_out))
    q = np.asarray(moments["q"], dtype=np.float64) if moments.get("q") is not None else np.eye(inner.shape[0])
    if q.shape != inner.shape:
        raise DimensionError(f"Q must be {inner.shape}, got {q.shape}")
    return q @ inner @ q.T


_FORMULAS = {
    "mlp_last_layer": mlp_last_layer,
    "conv_last_layer": conv_last_layer,
    "token_linear": token_linear,
}


def analytic_geometry(kind: str, moments: Dict[str, Any]) -> np.ndarray:
    """
    Exact structural geometry of a last layer.

    Args:
        kind: mlp_last_layer, conv_last_layer or token_linear
        moments: Family and probe moments required by the formula

    Raises:
        ConfigError: For an unknown kind
    """
    if kind not in _FORMULAS:
        raise ConfigError(f"Unknown analytic geometry kind '{kind}'. Available: {list(ANALYTIC_KINDS)}")
    return _FORMULAS[kind](moments)
