"""
Orthonormal bases for rank-one sweeps.

All 2-D bases act on row-major vectorized ``height x width`` images. DCT, DST
and Hadamard are separable: the 2-D matrix is the Kronecker product of the
1-D factors, so column ``kh * width + kw`` is the product of row frequency
``kh`` and column frequency ``kw``.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd
from scipy.fft import dct, dst
from scipy.linalg import hadamard

from ..errors import BasisSizeError, NotOrthogonalError
from ..numerics import RngStream, gaussian

ORTHO_TOL = 1e-10

PROVENANCES = (
    "canonical",
    "dct",
    "dst",
    "hadamard",
    "haar2d",
    "random_orthogonal",
    "w_min",
    "w_max",
    "identity",
)


@dataclass(frozen=True)
class OrthoTransform:
    """Orthogonal matrix whose columns are basis vectors, plus its origin."""

    matrix: np.ndarray
    provenance: str
    index_layout: Tuple[Dict, ...] = field(default=())

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise NotOrthogonalError(f"Transform must be square, got shape {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def column(self, k: int) -> np.ndarray:
        return self.matrix[:, k].copy()

    def orthogonality_error(self) -> float:
        """Max-abs entry of ``W^T W - I``."""
        return float(np.max(np.abs(self.matrix.T @ self.matrix - np.eye(self.dim))))

    def layout_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.index_layout))

    def transpose(self, provenance: str = None) -> "OrthoTransform":
        return OrthoTransform(self.matrix.T.copy(), provenance or self.provenance, self.index_layout)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _dct_1d(n: int) -> np.ndarray:
    # dct of the identity gives the analysis matrix; its rows are the basis vectors
    return dct(np.eye(n), type=2, norm="ortho", axis=0).T


def _dst_1d(n: int) -> np.ndarray:
    return dst(np.eye(n), type=2, norm="ortho", axis=0).T


def sign_changes(vector: np.ndarray) -> int:
    signs = np.sign(vector[vector != 0])
    return int(np.count_nonzero(np.diff(signs)))


def _hadamard_1d(n: int) -> np.ndarray:
    h = hadamard(n).astype(np.float64) / np.sqrt(n)
    order = np.argsort([sign_changes(h[:, k]) for k in range(n)], kind="stable")
    return h[:, order]


def _frequency_layout(height: int, width: int, key: str) -> Tuple[Dict, ...]:
    return tuple(
        {"index": kh * width + kw, f"{key}_row": kh, f"{key}_col": kw} for kh in range(height) for kw in range(width)
    )


def _haar_step(block: np.ndarray, axis: int) -> np.ndarray:
    even = np.take(block, np.arange(0, block.shape[axis], 2), axis=axis)
    odd = np.take(block, np.arange(1, block.shape[axis], 2), axis=axis)
    return np.concatenate([(even + odd) / np.sqrt(2.0), (even - odd) / np.sqrt(2.0)], axis=axis)


def haar2d_analysis(image: np.ndarray) -> np.ndarray:
    """Full multilevel 2-D Haar decomposition packed in pyramid order (approximation top-left)."""
    coeffs = np.array(image, dtype=np.float64, copy=True)
    h, w = coeffs.shape
    while h > 1 or w > 1:
        block = coeffs[:h, :w]
        if h > 1:
            block = _haar_step(block, 0)
        if w > 1:
            block = _haar_step(block, 1)
        coeffs[:h, :w] = block
        h, w = max(h // 2, 1), max(w // 2, 1)
    return coeffs


def _haar_layout(height: int, width: int) -> Tuple[Dict, ...]:
    scale = np.zeros((height, width), dtype=int)
    channel = np.full((height, width), "approx", dtype=object)
    origin_row = np.zeros((height, width), dtype=int)
    origin_col = np.zeros((height, width), dtype=int)

    h, w, level = height, width, 1
    while h > 1 or w > 1:
        nh, nw = max(h // 2, 1), max(w // 2, 1)
        bands = []
        if h > 1 and w > 1:
            bands = [("horizontal", 0, nw), ("vertical", nh, 0), ("diagonal", nh, nw)]
        elif h > 1:
            bands = [("vertical", nh, 0)]
        else:
            bands = [("horizontal", 0, nw)]
        for name, r0, c0 in bands:
            rows = slice(r0, r0 + (nh if r0 == 0 else h - nh))
            cols = slice(c0, c0 + (nw if c0 == 0 else w - nw))
            scale[rows, cols] = level
            channel[rows, cols] = name
            origin_row[rows, cols] = r0
            origin_col[rows, cols] = c0
        h, w, level = nh, nw, level + 1
    scale[0, 0] = level

    layout = []
    for r in range(height):
        for c in range(width):
            layout.append(
                {
                    "index": r * width + c,
                    "scale": int(scale[r, c]),
                    "channel": str(channel[r, c]),
                    "loc_row": r - int(origin_row[r, c]),
                    "loc_col": c - int(origin_col[r, c]),
                    "grid_row": r,
                    "grid_col": c,
                }
            )
    return tuple(layout)


def build_basis(kind: str, height: int, width: int) -> OrthoTransform:
    """
    Construct a named orthonormal basis for ``height x width`` images.

    Args:
        kind: One of canonical, dct, dst, hadamard, haar2d
        height: Image height
        width: Image width

    Returns:
        OrthoTransform whose columns are the basis vectors

    Raises:
        BasisSizeError: If the size is not supported by ``kind``
    """
    if height < 1 or width < 1:
        raise BasisSizeError(f"Basis size must be positive, got {height}x{width}")

    if kind == "canonical":
        layout = tuple(
            {"index": r * width + c, "row": r, "col": c, "grid_row": r, "grid_col": c}
            for r in range(height)
            for c in range(width)
        )
        return OrthoTransform(np.eye(height * width), "canonical", layout)

    if kind in ("dct", "dst", "hadamard"):
        if kind == "hadamard" and not (_is_power_of_two(height) and _is_power_of_two(width)):
            raise BasisSizeError(f"hadamard requires height*width to be a power of two, got {height}x{width}")
        factor = {"dct": _dct_1d, "dst": _dst_1d, "hadamard": _hadamard_1d}[kind]
        key = "seq" if kind == "hadamard" else "freq"
        matrix = np.kron(factor(height), factor(width))
        return OrthoTransform(matrix, kind, _frequency_layout(height, width, key))

    if kind == "haar2d":
        if not (_is_power_of_two(height) and _is_power_of_two(width)):
            raise BasisSizeError(f"haar2d requires dyadic height and width, got {height}x{width}")
        d = height * width
        analysis = np.empty((d, d))
        for j in range(d):
            impulse = np.zeros(d)
            impulse[j] = 1.0
            analysis[:, j] = haar2d_analysis(impulse.reshape(height, width)).ravel()
        return OrthoTransform(analysis.T.copy(), "haar2d", _haar_layout(height, width))

    raise BasisSizeError(f"Unknown basis kind: {kind}")


def random_orthogonal(d: int, stream: RngStream) -> OrthoTransform:
    """Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix."""
    if d < 1:
        raise BasisSizeError(f"Dimension must be at least 1, got {d}")
    q, r = np.linalg.qr(gaussian(stream, d * d).reshape(d, d))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return OrthoTransform(q * signs, "random_orthogonal")


def identity_transform(d: int) -> OrthoTransform:
    return OrthoTransform(np.eye(d), "identity")


def check_orthogonal(w, tol: float = ORTHO_TOL) -> np.ndarray:
    m = w.matrix if isinstance(w, OrthoTransform) else np.asarray(w, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotOrthogonalError(f"Transform must be square, got shape {m.shape}")
    err = float(np.linalg.norm(m.T @ m - np.eye(m.shape[0])))
    if err > tol:
        raise NotOrthogonalError(f"Transform is not orthogonal: ||W^T W - I||_F = {err:.3e} > {tol}")
    return m


def basis_columns(basis: OrthoTransform, indices: List[int]) -> np.ndarray:
    return basis.matrix[:, list(indices)].copy()
