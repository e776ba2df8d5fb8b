"""Activations, noise-level embedding, convolution and resampling with manual gradients."""

from typing import Callable, Dict, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from ..errors import ConfigError

# ---------------------------------------------------------------------------
# activations: (value, derivative) pairs
# ---------------------------------------------------------------------------


def _silu(z):
    return z * expit(z)


def _silu_grad(z):
    s = expit(z)
    return s + z * s * (1.0 - s)


ACTIVATIONS: Dict[str, Tuple[Callable, Callable]] = {
    "silu": (_silu, _silu_grad),
    "relu": (lambda z: np.maximum(z, 0.0), lambda z: (z > 0).astype(np.float64)),
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
    "identity": (lambda z: z, np.ones_like),
}

# Kaiming-style gains
GAINS = {"silu": np.sqrt(2.0), "relu": np.sqrt(2.0), "tanh": 1.0, "identity": 1.0}


def get_activation(name: str) -> Tuple[Callable, Callable]:
    if name not in ACTIVATIONS:
        raise ConfigError(f"Unknown activation '{name}'. Available: {sorted(ACTIVATIONS)}")
    return ACTIVATIONS[name]


# ---------------------------------------------------------------------------
# noise-level embedding
# ---------------------------------------------------------------------------


def embedding_frequencies(n_frequencies: int) -> np.ndarray:
    """Geometric frequencies 1/8, 1/4, ... applied to log(sigma)."""
    return 2.0 ** (np.arange(n_frequencies) - 3.0)


def sigma_embedding(sigmas: np.ndarray, n_frequencies: int) -> np.ndarray:
    """Sinusoidal features of log(sigma), shape (n, 2 * n_frequencies)."""
    phase = np.log(np.asarray(sigmas, dtype=np.float64))[:, None] * embedding_frequencies(n_frequencies)[None, :]
    return np.concatenate([np.sin(phase), np.cos(phase)], axis=1)


# ---------------------------------------------------------------------------
# 3x3 convolution (cross-correlation, stride 1, "same" output)
# ---------------------------------------------------------------------------

PADDINGS = ("zero", "circular")


def pad(x: np.ndarray, width: int, mode: str) -> np.ndarray:
    if mode not in PADDINGS:
        raise ConfigError(f"Unknown padding '{mode}'. Available: {list(PADDINGS)}")
    np_mode = "constant" if mode == "zero" else "wrap"
    return np.pad(x, ((0, 0), (0, 0), (width, width), (width, width)), mode=np_mode)


def unpad_grad(grad_padded: np.ndarray, width: int, mode: str) -> np.ndarray:
    """Adjoint of ``pad``: fold the border gradient back for circular padding."""
    h = grad_padded.shape[2] - 2 * width
    w = grad_padded.shape[3] - 2 * width
    if mode == "zero":
        return grad_padded[:, :, width : width + h, width : width + w].copy()

    # fold rows then columns; wrap indices of the padded grid
    rows = (np.arange(h + 2 * width) - width) % h
    cols = (np.arange(w + 2 * width) - width) % w
    folded_rows = np.zeros(grad_padded.shape[:2] + (h, w + 2 * width))
    np.add.at(folded_rows, (slice(None), slice(None), rows), grad_padded)
    out = np.zeros(grad_padded.shape[:2] + (h, w))
    np.add.at(out, (slice(None), slice(None), slice(None), cols), folded_rows)
    return out


def conv2d(x: np.ndarray, kernel: np.ndarray, padding: str) -> np.ndarray:
    """
    Same-size convolution.

    Args:
        x: (n, C_in, H, W)
        kernel: (C_out, C_in, k, k) with odd k
        padding: zero or circular
    """
    k = kernel.shape[-1]
    patches = sliding_window_view(pad(x, k // 2, padding), (k, k), axis=(2, 3))
    return np.einsum("nchwij,ocij->nohw", patches, kernel, optimize=True)


def conv2d_backward(
    x: np.ndarray, kernel: np.ndarray, grad_out: np.ndarray, padding: str
) -> Tuple[np.ndarray, np.ndarray]:
    """Gradients of ``sum(grad_out * conv2d(x, kernel))`` w.r.t. ``x`` and ``kernel``."""
    k = kernel.shape[-1]
    half = k // 2
    padded = pad(x, half, padding)
    patches = sliding_window_view(padded, (k, k), axis=(2, 3))
    grad_kernel = np.einsum("nchwij,nohw->ocij", patches, grad_out, optimize=True)

    h, w = x.shape[2], x.shape[3]
    grad_padded = np.zeros_like(padded)
    for i in range(k):
        for j in range(k):
            grad_padded[:, :, i : i + h, j : j + w] += np.einsum("nohw,oc->nchw", grad_out, kernel[:, :, i, j])
    return unpad_grad(grad_padded, half, padding), grad_kernel


# ---------------------------------------------------------------------------
# separable resampling
# ---------------------------------------------------------------------------

RESAMPLINGS = ("nearest", "area")


def resample_matrix(n_in: int, n_out: int, mode: str) -> np.ndarray:
    """
    (n_out x n_in) matrix of a 1-D resize.

    ``nearest`` picks index floor(i * n_in / n_out); ``area`` averages the
    adaptive-pooling bin [floor(i * n_in / n_out), ceil((i + 1) * n_in / n_out)).
    """
    r = np.zeros((n_out, n_in))
    if mode == "nearest":
        for i in range(n_out):
            r[i, (i * n_in) // n_out] = 1.0
    elif mode == "area":
        for i in range(n_out):
            start = (i * n_in) // n_out
            end = -(-((i + 1) * n_in) // n_out)
            r[i, start:end] = 1.0 / (end - start)
    else:
        raise ConfigError(f"Unknown resampling '{mode}'. Available: {list(RESAMPLINGS)}")
    return r


def resample(x: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    return np.einsum("ih,nchw,jw->ncij", rows, x, cols, optimize=True)


def resample_backward(grad_out: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    return np.einsum("ih,ncij,jw->nchw", rows, grad_out, cols, optimize=True)


def flip_symmetrize(kernel: np.ndarray) -> np.ndarray:
    """Average a (..., k, k) kernel with its horizontal, vertical and joint flips."""
    return 0.25 * (kernel + kernel[..., ::-1, :] + kernel[..., :, ::-1] + kernel[..., ::-1, ::-1])
